// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Change of variables from branch fluxes to loop degrees of freedom.
//!
//! Branch fluxes Φ (length N) are written as `Φ = M₊⁻¹ (Φ̃, Φₑ)` where
//! `M₊ = [M; R]` stacks the (N−F)×N dof matrix `M` over the F×N mesh matrix
//! `R`. The dof columns of `M₊⁻¹` give each branch's dependence on the
//! reduced variables, the mesh columns give its flux allocation.
//!
//! A choice of `M` is irrotational when `R C⁻¹ Mᵀ = 0`. In that frame the
//! Lagrangian has no `Φ̇̃·Φ̇ₑ` cross term and the Hamiltonian no `n·φ̇ₑ`
//! drive.

use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};
use crate::netlist::{BranchKind, CircuitNetlist};
use crate::topology::{capacitance_matrix, mesh_matrix};

/// Relative tolerance for rank decisions.
pub const RANK_TOLERANCE: f64 = 1e-10;
/// `M₊` is rejected as singular beyond this condition number.
const SINGULAR_CONDITION: f64 = 1e13;

/// Closed-form irrotational rows for a single loop of N branches that are
/// all oriented along the mesh: `M̄_ij = δ_ij − C_i⁻¹ / Σ_k C_k⁻¹`.
pub fn single_loop_mbar(c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if r.nrows() != 1 {
        return Err(Error::NotSingleLoop("single_loop_mbar"));
    }
    let n = c.nrows();
    let inv: Vec<f64> = (0..n).map(|i| 1.0 / c[(i, i)]).collect();
    let total: f64 = inv.iter().sum();
    Ok(DMatrix::from_fn(n - 1, n, |i, j| {
        // Branches traversed against the mesh enter with their sign flipped.
        let s = r[(0, j)] * r[(0, i)];
        (if i == j { 1.0 } else { 0.0 }) - s * inv[i] / total
    }))
}

fn sorted_svd(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let svd = SVD::new(a.clone(), false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let rows = DMatrix::from_fn(order.len(), a.ncols(), |i, j| v_t[(order[i], j)]);
    (values, rows)
}

/// Orthonormal basis (rows) of the irrotational subspace `{m : R C⁻¹ m = 0}`.
///
/// The decomposition runs on `R C⁻¹` after column equilibration by `C`, so
/// tiny auxiliary capacitances do not pollute the null space; the result is
/// mapped back and re-orthonormalized.
pub fn irrotational_basis(c: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (f, n) = r.shape();
    if c.shape() != (n, n) {
        return Err(Error::Dimension(format!(
            "capacitance matrix is {}x{}, mesh matrix has {n} columns",
            c.nrows(),
            c.ncols()
        )));
    }
    if f > n {
        return Err(Error::RankDeficient { rank: n, meshes: f });
    }
    let mut padded = DMatrix::zeros(n, n);
    // (R C⁻¹) C = R
    padded.rows_mut(0, f).copy_from(r);
    let (values, v_t) = sorted_svd(&padded);
    let scale = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().filter(|&&s| s > RANK_TOLERANCE * scale).count();
    if rank < f {
        return Err(Error::RankDeficient { rank, meshes: f });
    }
    // Null vectors k of R; irrotational rows are (C k)ᵀ.
    let null = v_t.rows(f, n - f).transpose();
    let rows = c * null;
    let q = rows.qr().q();
    Ok(q.transpose())
}

/// `M₊ = [M; R]` and its inverse.
pub fn augment_and_invert(m: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = r.ncols();
    if m.ncols() != n || m.nrows() + r.nrows() != n {
        return Err(Error::Dimension(format!(
            "M is {}x{} but R is {}x{}",
            m.nrows(),
            m.ncols(),
            r.nrows(),
            n
        )));
    }
    let mut plus = DMatrix::zeros(n, n);
    plus.rows_mut(0, m.nrows()).copy_from(m);
    plus.rows_mut(m.nrows(), r.nrows()).copy_from(r);
    let sv = plus.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min.is_nan() || min <= 0.0 || max / min > SINGULAR_CONDITION {
        return Err(Error::SingularTransform);
    }
    let inv = plus.clone().lu().try_inverse().ok_or(Error::SingularTransform)?;
    Ok((plus, inv))
}

/// `C_eff = (M₊⁻¹)ᵀ C M₊⁻¹`.
pub fn effective_capacitance(c: &DMatrix<f64>, m_plus_inv: &DMatrix<f64>) -> DMatrix<f64> {
    let c_eff = m_plus_inv.transpose() * c * m_plus_inv;
    (&c_eff + c_eff.transpose()) * 0.5
}

/// Coefficients η̄ (dofs × meshes) multiplying `n_i φ̇ₑ^j` in the Hamiltonian.
pub fn drive_coupling(c_eff: &DMatrix<f64>, dofs: usize) -> Result<DMatrix<f64>> {
    let n = c_eff.nrows();
    let kinetic = c_eff.view((0, 0), (dofs, dofs)).into_owned();
    let coupling = c_eff.view((0, dofs), (dofs, n - dofs)).into_owned();
    let chol = kinetic
        .cholesky()
        .ok_or_else(|| Error::Dimension("kinetic capacitance block is not positive definite".into()))?;
    Ok(-chol.solve(&coupling))
}

/// Choose `A` so that each dof has unit coefficient on one reference branch.
///
/// Reference branches are picked greedily: junctions first, then
/// capacitors, then inductors, lowest index first within each class. Returns
/// the rescaled `M = A M̄` and the chosen branch indices.
pub fn rescale_to_references(
    mbar: &DMatrix<f64>,
    r: &DMatrix<f64>,
    kinds: &[BranchKind],
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let d = mbar.nrows();
    let (_, inv) = augment_and_invert(mbar, r)?;
    let k = inv.columns(0, d).into_owned();
    let class = |kind: &BranchKind| match kind {
        BranchKind::Junction { .. } => 0,
        BranchKind::Capacitor { .. } => 1,
        BranchKind::Inductor { .. } => 2,
    };
    let mut order: Vec<usize> = (0..kinds.len()).collect();
    order.sort_by_key(|&i| (class(&kinds[i]), i));

    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    let scale = k.amax().max(f64::MIN_POSITIVE);
    for &i in &order {
        if chosen.len() == d {
            break;
        }
        let mut trial = chosen.clone();
        trial.push(i);
        let sub = DMatrix::from_fn(trial.len(), d, |a, b| k[(trial[a], b)]);
        if sub.rank(RANK_TOLERANCE * scale) == trial.len() {
            chosen = trial;
        }
    }
    if chosen.len() < d {
        return Err(Error::SingularTransform);
    }
    let a = DMatrix::from_fn(d, d, |a, b| k[(chosen[a], b)]);
    Ok((a * mbar, chosen))
}

/// The resolved change of variables together with its derived blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct IrrotationalTransform {
    pub m: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub m_plus: DMatrix<f64>,
    pub m_plus_inv: DMatrix<f64>,
    /// Branch capacitances, fF.
    pub capacitance: DMatrix<f64>,
    /// `(M₊⁻¹)ᵀ C M₊⁻¹`, fF.
    pub c_eff: DMatrix<f64>,
    /// N×F: weight of mesh-j flux in branch i.
    pub flux_weights: DMatrix<f64>,
    /// (N−F)×F drive coefficients η̄.
    pub eta_bar: DMatrix<f64>,
}

impl IrrotationalTransform {
    /// Builds all derived blocks for a given dof matrix `M`.
    pub fn from_m(c: &DMatrix<f64>, r: &DMatrix<f64>, m: DMatrix<f64>) -> Result<Self> {
        let (m_plus, m_plus_inv) = augment_and_invert(&m, r)?;
        let d = m.nrows();
        let c_eff = effective_capacitance(c, &m_plus_inv);
        let eta_bar = drive_coupling(&c_eff, d)?;
        let flux_weights = m_plus_inv.columns(d, r.nrows()).into_owned();
        Ok(Self {
            m,
            r: r.clone(),
            m_plus,
            m_plus_inv,
            capacitance: c.clone(),
            c_eff,
            flux_weights,
            eta_bar,
        })
    }

    /// Irrotational frame with reference-branch scaling.
    pub fn irrotational(c: &DMatrix<f64>, r: &DMatrix<f64>, kinds: &[BranchKind]) -> Result<Self> {
        let mbar = irrotational_basis(c, r)?;
        let (m, _) = rescale_to_references(&mbar, r, kinds)?;
        Self::from_m(c, r, m)
    }

    /// Spanning-tree frame: each dof is the flux of one non-closure branch and
    /// the closure branches absorb all external flux.
    pub fn closure(c: &DMatrix<f64>, r: &DMatrix<f64>, closure: &[usize]) -> Result<Self> {
        let n = r.ncols();
        if closure.len() != r.nrows() {
            return Err(Error::Dimension(format!(
                "{} closure branches given for {} meshes",
                closure.len(),
                r.nrows()
            )));
        }
        if let Some(&bad) = closure.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, len: n });
        }
        let kept: Vec<usize> = (0..n).filter(|i| !closure.contains(i)).collect();
        let m = DMatrix::from_fn(kept.len(), n, |a, b| if kept[a] == b { 1.0 } else { 0.0 });
        Self::from_m(c, r, m)
    }

    /// Applies the dof rescaling `M → A M`. Flux weights are unchanged.
    pub fn with_a(&self, a: &DMatrix<f64>) -> Result<Self> {
        let d = self.dofs();
        if a.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "A must be {d}x{d}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        Self::from_m(&self.capacitance, &self.r, a * &self.m)
    }

    pub fn branches(&self) -> usize {
        self.m_plus.nrows()
    }

    pub fn meshes(&self) -> usize {
        self.r.nrows()
    }

    pub fn dofs(&self) -> usize {
        self.m.nrows()
    }

    /// N×(N−F): coefficient of each dof in each branch flux.
    pub fn dof_coeffs(&self) -> DMatrix<f64> {
        self.m_plus_inv.columns(0, self.dofs()).into_owned()
    }

    /// Kinetic capacitance block `KᵀCK`, fF.
    pub fn kinetic(&self) -> DMatrix<f64> {
        let d = self.dofs();
        self.c_eff.view((0, 0), (d, d)).into_owned()
    }

    /// Dof–flux block of `C_eff`, fF.
    pub fn dof_flux_block(&self) -> DMatrix<f64> {
        let d = self.dofs();
        self.c_eff.view((0, d), (d, self.meshes())).into_owned()
    }

    /// `‖R C⁻¹ Mᵀ‖_max / ‖R C⁻¹‖_max`.
    pub fn irrotational_residual(&self) -> f64 {
        let c_inv = DMatrix::from_diagonal(&self.capacitance.diagonal().map(|x| 1.0 / x));
        let rc = &self.r * c_inv;
        let res = &rc * self.m.transpose();
        res.amax() / rc.amax()
    }

    pub fn is_irrotational(&self, tol: f64) -> bool {
        self.irrotational_residual() <= tol
    }
}

/// Frame selection for a netlist.
#[derive(Debug, Clone, PartialEq)]
pub enum Gauge {
    Irrotational,
    /// Two-branch loop written as `m_l Φ_l + m_r Φ_r` in loop-oriented
    /// branch fluxes, so that `Φ_l + Φ_r = Φₑ` whatever the netlist
    /// orientation.
    Pair {
        m_l: f64,
        m_r: f64,
    },
    /// Closure (spanning-tree) frame; one branch id per mesh.
    Closure(Vec<String>),
    /// Explicit dof matrix in netlist branch order.
    Matrix(DMatrix<f64>),
    /// Single loop with one inductor: periodic irrotational modes of the
    /// junction sub-loop plus one extended mode carrying the inductor.
    InductiveSplit,
}

impl Gauge {
    pub fn label(&self) -> String {
        match self {
            Gauge::Irrotational => "irrotational".into(),
            Gauge::Pair { m_l, m_r } => format!("{m_l},{m_r}"),
            Gauge::Closure(ids) => format!("closure={}", ids.join(",")),
            Gauge::Matrix(_) => "matrix".into(),
            Gauge::InductiveSplit => "inductive-split".into(),
        }
    }
}

/// Resolves `gauge` for a netlist.
pub fn transform_for(netlist: &CircuitNetlist, gauge: &Gauge, aux_epsilon: f64) -> Result<IrrotationalTransform> {
    netlist.ensure_valid()?;
    let caps = capacitance_matrix(netlist, aux_epsilon);
    let c = caps.matrix;
    let r = mesh_matrix(netlist);
    let kinds: Vec<BranchKind> = netlist.branches.iter().map(|b| b.kind).collect();
    let t = match gauge {
        Gauge::Irrotational => IrrotationalTransform::irrotational(&c, &r, &kinds),
        Gauge::Pair { m_l, m_r } => {
            if r.shape() != (1, 2) {
                return Err(Error::InvalidGauge {
                    m_l: *m_l,
                    m_r: *m_r,
                    reason: "a gauge pair needs a single loop of two branches".into(),
                });
            }
            if m_l == m_r {
                return Err(Error::InvalidGauge {
                    m_l: *m_l,
                    m_r: *m_r,
                    reason: "m_l must differ from m_r".into(),
                });
            }
            let m = DMatrix::from_row_slice(1, 2, &[m_l * r[(0, 0)], m_r * r[(0, 1)]]);
            IrrotationalTransform::from_m(&c, &r, m)
        }
        Gauge::Closure(ids) => {
            let idx = ids
                .iter()
                .map(|id| {
                    netlist
                        .branch_index(id)
                        .ok_or_else(|| Error::InvalidSetting(format!("unknown closure branch `{id}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            IrrotationalTransform::closure(&c, &r, &idx)
        }
        Gauge::Matrix(m) => IrrotationalTransform::from_m(&c, &r, m.clone()),
        Gauge::InductiveSplit => inductive_split(&c, &r, &kinds),
    };
    t.map_err(|e| match e {
        Error::SingularTransform | Error::RankDeficient { .. } => Error::IllConditioned {
            circuit: netlist.name.clone(),
            detail: e.to_string(),
        },
        other => other,
    })
}

/// Transform separating a single loop with one inductor into periodic junction
/// modes and one extended mode `χ = Σ s_i Φ_i` over the non-inductive branches.
///
/// The periodic rows are irrotational with respect to the junction sub-loop
/// (with `χ` in the role of the external flux), so the kinetic matrix is
/// block diagonal between the two groups. The extended mode is last.
pub fn inductive_split(c: &DMatrix<f64>, r: &DMatrix<f64>, kinds: &[BranchKind]) -> Result<IrrotationalTransform> {
    if r.nrows() != 1 {
        return Err(Error::NotSingleLoop("inductive_split"));
    }
    let inductors: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i].is_inductor()).collect();
    let [l] = inductors[..] else {
        return Err(Error::InvalidSetting(
            "inductive split needs exactly one inductor in the loop".into(),
        ));
    };
    let n = r.ncols();
    let mut sub_r = r.clone();
    sub_r[(0, l)] = 0.0;
    let rest: Vec<usize> = (0..n).filter(|&i| i != l && sub_r[(0, i)] != 0.0).collect();
    // Periodic rows: irrotational inside the sub-loop, zero on the inductor and
    // on branches outside the loop.
    let sub_c = DMatrix::from_fn(
        rest.len(),
        rest.len(),
        |a, b| {
            if a == b {
                c[(rest[a], rest[a])]
            } else {
                0.0
            }
        },
    );
    let sub_rr = DMatrix::from_fn(1, rest.len(), |_, b| sub_r[(0, rest[b])]);
    let sub_kinds: Vec<BranchKind> = rest.iter().map(|&i| kinds[i]).collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if rest.len() > 1 {
        let mbar = irrotational_basis(&sub_c, &sub_rr)?;
        let (m_sub, _) = rescale_to_references(&mbar, &sub_rr, &sub_kinds)?;
        for i in 0..m_sub.nrows() {
            let mut row = vec![0.0; n];
            for (b, &j) in rest.iter().enumerate() {
                row[j] = m_sub[(i, b)];
            }
            rows.push(row);
        }
    }
    rows.push((0..n).map(|j| sub_r[(0, j)]).collect());
    let m = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    IrrotationalTransform::from_m(c, r, m)
}
