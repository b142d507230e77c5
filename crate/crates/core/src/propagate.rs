// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Time stepping for `H(φₑ(t), φ̇ₑ(t))` on a fixed (usually truncated) basis.

use crate::basis::{CMatrix, C64};
use crate::spectrum::NumericModel;

/// Largest `‖H − μ‖₁ · τ` per Taylor sub-step.
const SUBSTEP_NORM: f64 = 0.5;
/// Taylor series stops once a term falls below this norm.
const TAYLOR_TOLERANCE: f64 = 1e-18;
const MAX_TAYLOR_TERMS: usize = 64;

#[derive(Debug, Clone)]
struct CosineBlock {
    energy: f64,
    weights: Vec<f64>,
    cos: Vec<C64>,
    sin: Vec<C64>,
}

#[derive(Debug, Clone)]
struct QuadraticBlock {
    energy: f64,
    weights: Vec<f64>,
    linear: Vec<C64>,
    square: Vec<C64>,
}

/// Flattened operator set with scratch space for stepping.
///
/// Matrices are stored column-major; the Hamiltonian is rebuilt in place at
/// every step from the analytic flux dependence.
#[derive(Debug, Clone)]
pub struct Propagator {
    dim: usize,
    kinetic: Vec<C64>,
    cosines: Vec<CosineBlock>,
    quadratics: Vec<QuadraticBlock>,
    charges: Vec<Vec<C64>>,
    drive: Vec<Vec<f64>>,
    h: Vec<C64>,
    term: Vec<C64>,
    next: Vec<C64>,
    acc: Vec<C64>,
}

fn flat(m: &CMatrix) -> Vec<C64> {
    m.as_slice().to_vec()
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl Propagator {
    pub fn new(model: &NumericModel) -> Self {
        let dim = model.dimension;
        Self {
            dim,
            kinetic: flat(&model.kinetic),
            cosines: model
                .cosines
                .iter()
                .map(|t| CosineBlock {
                    energy: t.energy,
                    weights: t.weights.iter().copied().collect(),
                    cos: flat(&t.cos),
                    sin: flat(&t.sin),
                })
                .collect(),
            quadratics: model
                .quadratics
                .iter()
                .map(|t| QuadraticBlock {
                    energy: t.energy,
                    weights: t.weights.iter().copied().collect(),
                    linear: flat(&t.linear),
                    square: flat(&t.square),
                })
                .collect(),
            charges: model.charges.iter().map(flat).collect(),
            drive: (0..model.dofs())
                .map(|d| model.drive.row(d).iter().copied().collect())
                .collect(),
            h: vec![C64::new(0.0, 0.0); dim * dim],
            term: vec![C64::new(0.0, 0.0); dim],
            next: vec![C64::new(0.0, 0.0); dim],
            acc: vec![C64::new(0.0, 0.0); dim],
        }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Fills the internal Hamiltonian buffer.
    pub fn assemble(&mut self, phi_e: &[f64], phi_e_dot: &[f64]) {
        self.h.copy_from_slice(&self.kinetic);
        for t in &self.cosines {
            let th = dot(&t.weights, phi_e);
            let (s, c) = th.sin_cos();
            let (a, b) = (t.energy * c, t.energy * s);
            for ((h, cs), sn) in self.h.iter_mut().zip(&t.cos).zip(&t.sin) {
                *h -= cs * a - sn * b;
            }
        }
        for t in &self.quadratics {
            let th = dot(&t.weights, phi_e);
            let half = 0.5 * t.energy;
            for ((h, sq), lin) in self.h.iter_mut().zip(&t.square).zip(&t.linear) {
                *h += sq * half + lin * (t.energy * th);
            }
            for k in 0..self.dim {
                self.h[k * self.dim + k] += C64::new(half * th * th, 0.0);
            }
        }
        for (n, eta) in self.charges.iter().zip(&self.drive) {
            let coeff = dot(eta, phi_e_dot);
            if coeff != 0.0 {
                for (h, x) in self.h.iter_mut().zip(n) {
                    *h += x * coeff;
                }
            }
        }
    }

    /// Current Hamiltonian buffer as a matrix.
    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_column_slice(self.dim, self.dim, &self.h)
    }

    /// `ψ ← exp(−i H dt) ψ` for the assembled `H`, by a shifted, sub-stepped
    /// Taylor series.
    pub fn apply_exponential(&mut self, psi: &mut [C64], dt: f64) {
        let n = self.dim;
        let mu = (0..n).map(|k| self.h[k * n + k].re).sum::<f64>() / n as f64;
        let mut norm: f64 = 0.0;
        for col in 0..n {
            let mut s = 0.0;
            for row in 0..n {
                let mut z = self.h[col * n + row];
                if row == col {
                    z -= mu;
                }
                s += z.norm();
            }
            norm = norm.max(s);
        }
        let substeps = ((norm * dt / SUBSTEP_NORM).ceil() as usize).max(1);
        let tau = dt / substeps as f64;
        let phase = C64::new(0.0, -mu * tau).exp();
        for _ in 0..substeps {
            self.term.copy_from_slice(psi);
            self.acc.copy_from_slice(psi);
            for j in 1..=MAX_TAYLOR_TERMS {
                let scale = C64::new(0.0, -tau / j as f64);
                for v in self.next.iter_mut() {
                    *v = C64::new(0.0, 0.0);
                }
                for col in 0..n {
                    let x = self.term[col];
                    if x == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let column = &self.h[col * n..(col + 1) * n];
                    for (out, hv) in self.next.iter_mut().zip(column) {
                        *out += hv * x;
                    }
                    self.next[col] -= x * mu;
                }
                let mut size = 0.0;
                for (t, v) in self.term.iter_mut().zip(&self.next) {
                    *t = v * scale;
                    size += t.norm();
                }
                for (a, t) in self.acc.iter_mut().zip(&self.term) {
                    *a += t;
                }
                if size < TAYLOR_TOLERANCE {
                    break;
                }
            }
            for (p, a) in psi.iter_mut().zip(&self.acc) {
                *p = a * phase;
            }
        }
    }

    /// One midpoint step: assemble at the midpoint values, then exponentiate.
    pub fn step(&mut self, psi: &mut [C64], phi_mid: &[f64], phi_dot_mid: &[f64], dt: f64) {
        self.assemble(phi_mid, phi_dot_mid);
        self.apply_exponential(psi, dt);
    }
}
