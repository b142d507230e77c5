// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Branch capacitance and mesh incidence matrices.

use nalgebra::{DMatrix, DVector};

use crate::netlist::CircuitNetlist;

/// Relative size of the capacitance assigned to purely inductive branches.
pub const DEFAULT_AUX_EPSILON: f64 = 1e-8;

/// Diagonal branch capacitance matrix in fF.
///
/// Inductors have no capacitance of their own; they receive
/// `aux_epsilon · C_min` so that the matrix stays invertible. The returned
/// mask marks those auxiliary entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Capacitances {
    pub matrix: DMatrix<f64>,
    pub auxiliary: Vec<bool>,
}

impl Capacitances {
    pub fn diagonal(&self) -> DVector<f64> {
        self.matrix.diagonal()
    }
}

pub fn capacitance_matrix(netlist: &CircuitNetlist, aux_epsilon: f64) -> Capacitances {
    let n = netlist.branch_count();
    let c_min = netlist
        .branches
        .iter()
        .filter_map(|b| b.kind.capacitance())
        .fold(f64::INFINITY, f64::min);
    let c_min = if c_min.is_finite() { c_min } else { 1.0 };
    let mut matrix = DMatrix::zeros(n, n);
    let mut auxiliary = vec![false; n];
    for (i, b) in netlist.branches.iter().enumerate() {
        matrix[(i, i)] = match b.kind.capacitance() {
            Some(c) => c,
            None => {
                auxiliary[i] = true;
                aux_epsilon * c_min
            }
        };
    }
    Capacitances { matrix, auxiliary }
}

/// Mesh matrix `R` (F × N): entry ±1 when branch `j` belongs to mesh `i`.
pub fn mesh_matrix(netlist: &CircuitNetlist) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(netlist.mesh_count(), netlist.branch_count());
    for (i, mesh) in netlist.meshes.iter().enumerate() {
        for m in &mesh.members {
            if let Some(j) = netlist.branch_index(&m.branch) {
                r[(i, j)] = f64::from(m.sign.signum());
            }
        }
    }
    r
}
