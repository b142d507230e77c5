// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Operator matrices for periodic (charge) and extended (oscillator) degrees
//! of freedom, and their tensor products.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{SymbolicHamiltonian, TermKind};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const MIN_CHARGE_CUTOFF: usize = 10;
pub const MIN_OSCILLATOR_LEVELS: usize = 20;
pub const DEFAULT_CHARGE_CUTOFF: usize = 30;
pub const DEFAULT_OSCILLATOR_LEVELS: usize = 60;

/// Integer test for cosine coefficients in a charge basis.
const INTEGER_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofBasis {
    /// Charge states `n ∈ [−charge_cutoff, charge_cutoff]`.
    Periodic { charge_cutoff: usize },
    /// Lowest `levels` states of the harmonic oscillator set by the dof's
    /// charging entry and the quadratic terms acting on it.
    Extended { levels: usize },
}

impl DofBasis {
    pub fn dimension(&self) -> usize {
        match *self {
            DofBasis::Periodic { charge_cutoff } => 2 * charge_cutoff + 1,
            DofBasis::Extended { levels } => levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    pub dofs: Vec<DofBasis>,
}

impl BasisSpec {
    /// Extended for every dof that enters a quadratic term, periodic otherwise.
    pub fn auto(h: &SymbolicHamiltonian, charge_cutoff: usize, levels: usize) -> Self {
        let dofs = (0..h.dofs())
            .map(|d| {
                let extended = h
                    .terms
                    .iter()
                    .any(|t| t.kind == TermKind::Quadratic && t.dof_coeffs[d] != 0.0);
                if extended {
                    DofBasis::Extended { levels }
                } else {
                    DofBasis::Periodic { charge_cutoff }
                }
            })
            .collect();
        Self { dofs }
    }

    pub fn dimension(&self) -> usize {
        self.dofs.iter().map(DofBasis::dimension).product()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dofs.is_empty() || self.dofs.len() > 2 {
            return Err(Error::UnsupportedBasis(format!(
                "{} degrees of freedom; numerics support 1 or 2",
                self.dofs.len()
            )));
        }
        for b in &self.dofs {
            match *b {
                DofBasis::Periodic { charge_cutoff } if charge_cutoff < MIN_CHARGE_CUTOFF => {
                    return Err(Error::UnsupportedBasis(format!(
                        "charge cutoff {charge_cutoff} is below {MIN_CHARGE_CUTOFF}"
                    )))
                }
                DofBasis::Extended { levels } if levels < MIN_OSCILLATOR_LEVELS => {
                    return Err(Error::UnsupportedBasis(format!(
                        "{levels} oscillator levels is below {MIN_OSCILLATOR_LEVELS}"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Displacement operator `D(α) = exp(α a† − α* a)` on the lowest `levels`
/// Fock states, from the closed-form Laguerre matrix elements. Unlike
/// exponentiating a truncated generator, every retained element is exact.
pub fn displacement(levels: usize, alpha: C64) -> CMatrix {
    let x = alpha.norm_sqr();
    let mut d = CMatrix::zeros(levels, levels);
    if x == 0.0 {
        return CMatrix::identity(levels, levels);
    }
    let lnf = ln_factorials(levels);
    let r = alpha.norm();
    let unit = alpha / r;
    let unit_conj = -alpha.conj() / r;
    for k in 0..levels {
        // Generalized Laguerre L_j^{(k)}(x), j = 0..levels−k.
        let kf = k as f64;
        let mut prev = 0.0;
        let mut cur = 1.0;
        let up = unit.powu(k as u32);
        let down = unit_conj.powu(k as u32);
        for j in 0..levels - k {
            if j > 0 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf + kf) * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            let mag = (0.5 * (lnf[j] - lnf[j + k]) - 0.5 * x + kf * r.ln()).exp() * cur;
            d[(j + k, j)] = up * mag;
            if k > 0 {
                d[(j, j + k)] = down * mag;
            }
        }
    }
    d
}

/// Operators of one degree of freedom.
#[derive(Debug, Clone)]
pub struct DofOperators {
    pub basis: DofBasis,
    /// Charge operator `n`.
    pub n: CMatrix,
    /// `n²`, exact in the truncated space.
    pub n2: CMatrix,
    /// Phase operator and its square; extended dofs only.
    pub phi: Option<CMatrix>,
    pub phi2: Option<CMatrix>,
    /// Oscillator phase zero-point amplitude; extended dofs only.
    pub phi_zpf: Option<f64>,
}

impl DofOperators {
    pub fn periodic(charge_cutoff: usize) -> Self {
        let dim = 2 * charge_cutoff + 1;
        let n = CMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                C64::new(i as f64 - charge_cutoff as f64, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let n2 = &n * &n;
        Self {
            basis: DofBasis::Periodic { charge_cutoff },
            n,
            n2,
            phi: None,
            phi2: None,
            phi_zpf: None,
        }
    }

    /// Oscillator with Hamiltonian `kinetic·n² + ½ stiffness·φ²`.
    pub fn extended(levels: usize, kinetic: f64, stiffness: f64) -> Result<Self> {
        if !(kinetic > 0.0 && stiffness > 0.0) {
            return Err(Error::UnsupportedBasis(format!(
                "oscillator basis needs positive charging ({kinetic}) and stiffness ({stiffness})"
            )));
        }
        let phi_zpf = (kinetic / (2.0 * stiffness)).powf(0.25);
        let n_zpf = 0.5 / phi_zpf;
        let sq = |k: usize| (k as f64).sqrt();
        // φ = φ_zpf (a + a†), n = i n_zpf (a† − a)
        let mut phi = CMatrix::zeros(levels, levels);
        let mut n = CMatrix::zeros(levels, levels);
        let mut phi2 = CMatrix::zeros(levels, levels);
        let mut n2 = CMatrix::zeros(levels, levels);
        for k in 0..levels {
            let diag = 2.0 * k as f64 + 1.0;
            phi2[(k, k)] = C64::new(phi_zpf * phi_zpf * diag, 0.0);
            n2[(k, k)] = C64::new(n_zpf * n_zpf * diag, 0.0);
            if k + 1 < levels {
                let a = sq(k + 1);
                phi[(k + 1, k)] = C64::new(phi_zpf * a, 0.0);
                phi[(k, k + 1)] = C64::new(phi_zpf * a, 0.0);
                n[(k + 1, k)] = C64::new(0.0, n_zpf * a);
                n[(k, k + 1)] = C64::new(0.0, -n_zpf * a);
            }
            if k + 2 < levels {
                let a2 = sq(k + 1) * sq(k + 2);
                phi2[(k + 2, k)] = C64::new(phi_zpf * phi_zpf * a2, 0.0);
                phi2[(k, k + 2)] = C64::new(phi_zpf * phi_zpf * a2, 0.0);
                n2[(k + 2, k)] = C64::new(-n_zpf * n_zpf * a2, 0.0);
                n2[(k, k + 2)] = C64::new(-n_zpf * n_zpf * a2, 0.0);
            }
        }
        Ok(Self {
            basis: DofBasis::Extended { levels },
            n,
            n2,
            phi: Some(phi),
            phi2: Some(phi2),
            phi_zpf: Some(phi_zpf),
        })
    }

    pub fn dimension(&self) -> usize {
        self.n.nrows()
    }

    /// `exp(i c φ)`.
    pub fn exp_i_phi(&self, c: f64) -> Result<CMatrix> {
        let dim = self.dimension();
        match self.basis {
            DofBasis::Periodic { .. } => {
                let shift = c.round();
                if (c - shift).abs() > INTEGER_TOLERANCE {
                    return Err(Error::UnsupportedBasis(format!(
                        "cosine coefficient {c} is not an integer; a charge basis cannot represent it"
                    )));
                }
                let shift = shift as i64;
                Ok(CMatrix::from_fn(dim, dim, |i, j| {
                    if i as i64 - j as i64 == shift {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }))
            }
            DofBasis::Extended { levels } => {
                let zpf = self.phi_zpf.expect("extended dof has zpf");
                Ok(displacement(levels, C64::new(0.0, c * zpf)))
            }
        }
    }
}

/// Tensor product of per-dof factors; `None` stands for the identity.
pub fn kron_all(dims: &[usize], factors: &[Option<&CMatrix>]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for (dim, f) in dims.iter().zip(factors) {
        out = match f {
            Some(m) => out.kronecker(*m),
            None => out.kronecker(&CMatrix::identity(*dim, *dim)),
        };
    }
    out
}
