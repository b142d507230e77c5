// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical Hamiltonians, eigensystems, matrix elements and golden-rule
//! rates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::basis::{kron_all, BasisSpec, CMatrix, DofBasis, DofOperators, C64};
use crate::error::{Error, Result};
use crate::hamiltonian::{SymbolicHamiltonian, TermKind};
use crate::noise::NoiseSpec;

/// Step of the central difference for `∂ω_eg/∂φₑ`, rad.
pub const FLUX_STEP: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CosineOperator {
    pub energy: f64,
    pub weights: DVector<f64>,
    /// `cos(c·φ̃)` and `sin(c·φ̃)`.
    pub cos: CMatrix,
    pub sin: CMatrix,
}

#[derive(Debug, Clone)]
pub struct QuadraticOperator {
    pub energy: f64,
    pub weights: DVector<f64>,
    /// `c·φ̃` and `(c·φ̃)²`.
    pub linear: CMatrix,
    pub square: CMatrix,
}

/// A symbolic Hamiltonian resolved into operator matrices. The flux
/// dependence stays analytic, so the same model serves any `φₑ(t)`.
#[derive(Debug, Clone)]
pub struct NumericModel {
    pub dimension: usize,
    pub kinetic: CMatrix,
    pub cosines: Vec<CosineOperator>,
    pub quadratics: Vec<QuadraticOperator>,
    /// Charge operator of each dof.
    pub charges: Vec<CMatrix>,
    /// η̄ (dofs × meshes).
    pub drive: DMatrix<f64>,
}

fn weighted_flux(weights: &DVector<f64>, phi_e: &[f64]) -> f64 {
    weights.iter().zip(phi_e).map(|(w, p)| w * p).sum()
}

fn real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

impl NumericModel {
    pub fn new(h: &SymbolicHamiltonian, basis: &BasisSpec) -> Result<Self> {
        basis.validate()?;
        let d = h.dofs();
        if basis.dofs.len() != d {
            return Err(Error::Dimension(format!(
                "basis covers {} dofs, Hamiltonian has {d}",
                basis.dofs.len()
            )));
        }
        let ops = basis
            .dofs
            .iter()
            .enumerate()
            .map(|(i, b)| match *b {
                DofBasis::Periodic { charge_cutoff } => Ok(DofOperators::periodic(charge_cutoff)),
                DofBasis::Extended { levels } => {
                    let stiffness: f64 = h
                        .terms
                        .iter()
                        .filter(|t| t.kind == TermKind::Quadratic)
                        .map(|t| t.energy * t.dof_coeffs[i] * t.dof_coeffs[i])
                        .sum();
                    DofOperators::extended(levels, h.charging[(i, i)], stiffness)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let dims: Vec<usize> = ops.iter().map(DofOperators::dimension).collect();
        let dimension = dims.iter().product();
        let single = |i: usize, m: &CMatrix| {
            let mut f: Vec<Option<&CMatrix>> = vec![None; d];
            f[i] = Some(m);
            kron_all(&dims, &f)
        };
        let pair = |i: usize, a: &CMatrix, j: usize, b: &CMatrix| {
            let mut f: Vec<Option<&CMatrix>> = vec![None; d];
            f[i] = Some(a);
            f[j] = Some(b);
            kron_all(&dims, &f)
        };

        let mut kinetic = CMatrix::zeros(dimension, dimension);
        for i in 0..d {
            for j in 0..d {
                let e = h.charging[(i, j)];
                if e == 0.0 {
                    continue;
                }
                let term = if i == j {
                    single(i, &ops[i].n2)
                } else {
                    pair(i, &ops[i].n, j, &ops[j].n)
                };
                kinetic += term * C64::new(e, 0.0);
            }
        }

        let mut cosines = Vec::new();
        let mut quadratics = Vec::new();
        for t in &h.terms {
            match t.kind {
                TermKind::Cosine => {
                    let factors = (0..d)
                        .map(|i| {
                            if t.dof_coeffs[i] == 0.0 {
                                Ok(None)
                            } else {
                                ops[i].exp_i_phi(t.dof_coeffs[i]).map(Some)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let refs: Vec<Option<&CMatrix>> = factors.iter().map(Option::as_ref).collect();
                    let e = kron_all(&dims, &refs);
                    let e_dag = e.adjoint();
                    let cos = (&e + &e_dag) * C64::new(0.5, 0.0);
                    let sin = (&e - &e_dag) * C64::new(0.0, -0.5);
                    cosines.push(CosineOperator {
                        energy: t.energy,
                        weights: t.flux_weights.clone(),
                        cos,
                        sin,
                    });
                }
                TermKind::Quadratic => {
                    let mut linear = CMatrix::zeros(dimension, dimension);
                    let mut square = CMatrix::zeros(dimension, dimension);
                    for i in 0..d {
                        let ci = t.dof_coeffs[i];
                        if ci == 0.0 {
                            continue;
                        }
                        let (Some(phi), Some(phi2)) = (&ops[i].phi, &ops[i].phi2) else {
                            return Err(Error::UnsupportedBasis(format!(
                                "quadratic term `{}` acts on periodic dof {}",
                                t.branch,
                                i + 1
                            )));
                        };
                        linear += single(i, phi) * C64::new(ci, 0.0);
                        square += single(i, phi2) * C64::new(ci * ci, 0.0);
                        for (j, op_j) in ops.iter().enumerate() {
                            let cj = t.dof_coeffs[j];
                            if j == i || cj == 0.0 {
                                continue;
                            }
                            let Some(phj) = &op_j.phi else {
                                return Err(Error::UnsupportedBasis(format!(
                                    "quadratic term `{}` acts on periodic dof {}",
                                    t.branch,
                                    j + 1
                                )));
                            };
                            square += pair(i, phi, j, phj) * C64::new(ci * cj, 0.0);
                        }
                    }
                    quadratics.push(QuadraticOperator {
                        energy: t.energy,
                        weights: t.flux_weights.clone(),
                        linear,
                        square,
                    });
                }
            }
        }
        let charges = (0..d).map(|i| single(i, &ops[i].n)).collect();
        Ok(Self {
            dimension,
            kinetic,
            cosines,
            quadratics,
            charges,
            drive: h.drive_coupling.clone(),
        })
    }

    pub fn meshes(&self) -> usize {
        self.drive.ncols()
    }

    pub fn dofs(&self) -> usize {
        self.charges.len()
    }

    /// `H(φₑ, φ̇ₑ)`, rad/ns.
    pub fn hamiltonian(&self, phi_e: &[f64], phi_e_dot: &[f64]) -> CMatrix {
        let mut h = self.kinetic.clone();
        self.add_potential(&mut h, phi_e);
        self.add_drive(&mut h, phi_e_dot);
        h
    }

    pub fn add_potential(&self, h: &mut CMatrix, phi_e: &[f64]) {
        for t in &self.cosines {
            let th = weighted_flux(&t.weights, phi_e);
            // −E cos(x + θ) = −E (cos x cos θ − sin x sin θ)
            h.zip_zip_apply(&t.cos, &t.sin, |a, c, s| {
                *a -= (c * th.cos() - s * th.sin()) * t.energy;
            });
        }
        for t in &self.quadratics {
            let th = weighted_flux(&t.weights, phi_e);
            h.zip_zip_apply(&t.square, &t.linear, |a, sq, lin| {
                *a += (sq + lin * (2.0 * th)) * (0.5 * t.energy);
            });
            for k in 0..h.nrows() {
                h[(k, k)] += C64::new(0.5 * t.energy * th * th, 0.0);
            }
        }
    }

    pub fn add_drive(&self, h: &mut CMatrix, phi_e_dot: &[f64]) {
        for (d, n) in self.charges.iter().enumerate() {
            let coeff: f64 = (0..self.meshes())
                .map(|j| self.drive[(d, j)] * phi_e_dot.get(j).copied().unwrap_or(0.0))
                .sum();
            if coeff != 0.0 {
                h.zip_apply(n, |a, b| *a += b * coeff);
            }
        }
    }

    /// `∂H/∂φₑ^j` at `phi_e`.
    pub fn flux_derivative(&self, phi_e: &[f64], mesh: usize) -> Result<CMatrix> {
        if mesh >= self.meshes() {
            return Err(Error::IndexOutOfRange {
                index: mesh,
                len: self.meshes(),
            });
        }
        let mut out = CMatrix::zeros(self.dimension, self.dimension);
        for t in &self.cosines {
            let w = t.weights[mesh];
            if w == 0.0 {
                continue;
            }
            let th = weighted_flux(&t.weights, phi_e);
            // ∂/∂θ [−E cos(x + θ)] = E (sin x cos θ + cos x sin θ)
            out.zip_zip_apply(&t.cos, &t.sin, |a, c, s| {
                *a += (s * th.cos() + c * th.sin()) * (t.energy * w);
            });
        }
        for t in &self.quadratics {
            let w = t.weights[mesh];
            if w == 0.0 {
                continue;
            }
            let th = weighted_flux(&t.weights, phi_e);
            out.zip_apply(&t.linear, |a, lin| *a += lin * (t.energy * w));
            for k in 0..self.dimension {
                out[(k, k)] += C64::new(t.energy * w * th, 0.0);
            }
        }
        Ok(out)
    }

    /// Restricts every operator to the span of the columns of `p`.
    pub fn project(&self, p: &CMatrix) -> NumericModel {
        let pa = p.adjoint();
        let sandwich = |m: &CMatrix| &pa * m * p;
        NumericModel {
            dimension: p.ncols(),
            kinetic: sandwich(&self.kinetic),
            cosines: self
                .cosines
                .iter()
                .map(|t| CosineOperator {
                    energy: t.energy,
                    weights: t.weights.clone(),
                    cos: sandwich(&t.cos),
                    sin: sandwich(&t.sin),
                })
                .collect(),
            quadratics: self
                .quadratics
                .iter()
                .map(|t| QuadraticOperator {
                    energy: t.energy,
                    weights: t.weights.clone(),
                    linear: sandwich(&t.linear),
                    square: sandwich(&t.square),
                })
                .collect(),
            charges: self.charges.iter().map(sandwich).collect(),
            drive: self.drive.clone(),
        }
    }

    /// Copy with a different drive coupling (same operators).
    pub fn with_drive(&self, drive: DMatrix<f64>) -> NumericModel {
        NumericModel { drive, ..self.clone() }
    }
}

/// Static Hamiltonian matrix at fixed flux.
pub fn build_numeric(h: &SymbolicHamiltonian, basis: &BasisSpec, phi_e: &[f64]) -> Result<CMatrix> {
    let model = NumericModel::new(h, basis)?;
    Ok(model.hamiltonian(phi_e, &[]))
}

/// Lowest eigenpairs, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: CMatrix,
}

/// Diagonalizes a Hermitian matrix and keeps the `k` lowest pairs. Each
/// eigenvector is phased so that its largest component is real positive.
pub fn eigensystem(m: &CMatrix, k: usize) -> Result<Eigenpairs> {
    let dim = m.nrows();
    if k > dim || k == 0 {
        return Err(Error::TooManyEigenpairs {
            requested: k,
            dimension: dim,
        });
    }
    let (values, vectors): (DVector<f64>, CMatrix) = if real(m) {
        let re = m.map(|z| z.re);
        let re = (&re + re.transpose()) * 0.5;
        let e = SymmetricEigen::new(re);
        (e.eigenvalues, e.eigenvectors.map(|v| C64::new(v, 0.0)))
    } else {
        let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let e = SymmetricEigen::new(herm);
        (e.eigenvalues, e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let keep = &order[..k];
    let mut out = CMatrix::zeros(dim, k);
    for (col, &src) in keep.iter().enumerate() {
        let v = vectors.column(src);
        let mut best = 0;
        for i in 0..dim {
            if v[i].norm() > v[best].norm() + 1e-12 {
                best = i;
            }
        }
        let phase = v[best].conj() / v[best].norm();
        out.set_column(col, &(v * phase));
    }
    Ok(Eigenpairs {
        values: keep.iter().map(|&i| values[i]).collect(),
        vectors: out,
    })
}

/// `⟨a|M|b⟩`.
pub fn sandwich(a: &nalgebra::DVectorView<C64>, m: &CMatrix, b: &nalgebra::DVectorView<C64>) -> C64 {
    a.dotc(&(m * b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elements {
    /// `⟨g|∂H/∂φₑ^j|e⟩` per mesh, rad/ns.
    pub flux_derivative: Vec<C64>,
    /// Per dof.
    pub n_ge: Vec<C64>,
    pub n_gg: Vec<f64>,
    pub n_ee: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending, rad/ns.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub omega_eg: f64,
    pub elements: Elements,
    /// Working point the spectrum was computed at, rad.
    pub phi_e: Vec<f64>,
}

impl Spectrum {
    pub fn compute(model: &NumericModel, phi_e: &[f64], k: usize) -> Result<Self> {
        let k = k.max(2);
        let eig = eigensystem(&model.hamiltonian(phi_e, &[]), k)?;
        let g = eig.vectors.column(0);
        let e = eig.vectors.column(1);
        let flux_derivative = (0..model.meshes())
            .map(|j| Ok(sandwich(&g, &model.flux_derivative(phi_e, j)?, &e)))
            .collect::<Result<Vec<_>>>()?;
        let n_ge = model.charges.iter().map(|n| sandwich(&g, n, &e)).collect();
        let n_gg = model.charges.iter().map(|n| sandwich(&g, n, &g).re).collect();
        let n_ee = model.charges.iter().map(|n| sandwich(&e, n, &e).re).collect();
        Ok(Self {
            omega_eg: eig.values[1] - eig.values[0],
            eigenvalues: eig.values,
            eigenvectors: eig.vectors,
            elements: Elements {
                flux_derivative,
                n_ge,
                n_gg,
                n_ee,
            },
            phi_e: phi_e.to_vec(),
        })
    }

    /// Eigenvalues relative to the ground state.
    pub fn transitions(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e - self.eigenvalues[0]).collect()
    }
}

/// Convenience: model plus spectrum at `phi_e`.
pub fn spectrum(h: &SymbolicHamiltonian, basis: &BasisSpec, phi_e: &[f64], k: usize) -> Result<Spectrum> {
    Spectrum::compute(&NumericModel::new(h, basis)?, phi_e, k)
}

/// `⟨g|∂H/∂φₑ^mesh|e⟩` from a computed spectrum.
pub fn flux_derivative_element(model: &NumericModel, spectrum: &Spectrum, mesh: usize) -> Result<C64> {
    let op = model.flux_derivative(&spectrum.phi_e, mesh)?;
    Ok(sandwich(
        &spectrum.eigenvectors.column(0),
        &op,
        &spectrum.eigenvectors.column(1),
    ))
}

/// Golden-rule relaxation rate `|d|² S_φ(ω_eg)`, 1/ns.
pub fn t1_rate(element: C64, noise: &NoiseSpec, omega_eg: f64) -> f64 {
    element.norm_sqr() * noise.spectral_density(omega_eg)
}

/// Central-difference flux slope with a Richardson cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSlope {
    /// Richardson-extrapolated `∂ω_eg/∂φₑ`, dimensionless (rad/ns per rad).
    pub value: f64,
    /// Step-h central difference.
    pub coarse: f64,
    /// Step-h/2 central difference.
    pub fine: f64,
}

impl FluxSlope {
    /// Relative disagreement between the two step sizes.
    pub fn discrepancy(&self) -> f64 {
        (self.coarse - self.fine).abs() / self.value.abs().max(1e-12)
    }
}

pub fn omega_eg_at(model: &NumericModel, phi_e: &[f64]) -> Result<f64> {
    let e = eigensystem(&model.hamiltonian(phi_e, &[]), 2)?;
    Ok(e.values[1] - e.values[0])
}

pub fn omega_eg_slope(model: &NumericModel, phi_e: &[f64], mesh: usize) -> Result<FluxSlope> {
    if mesh >= model.meshes() {
        return Err(Error::IndexOutOfRange {
            index: mesh,
            len: model.meshes(),
        });
    }
    let at = |delta: f64| {
        let mut p = phi_e.to_vec();
        p[mesh] += delta;
        omega_eg_at(model, &p)
    };
    let h = FLUX_STEP;
    let coarse = (at(h)? - at(-h)?) / (2.0 * h);
    let fine = (at(h / 2.0)? - at(-h / 2.0)?) / h;
    Ok(FluxSlope {
        value: (4.0 * fine - coarse) / 3.0,
        coarse,
        fine,
    })
}

/// Closed-form coherence envelope `|⟨ρ_eg(t)⟩| / |ρ_eg(0)|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingEnvelope {
    /// `Σ_j (∂ω_eg/∂φₑ^j)² S_j(0) / 2`, 1/ns.
    pub rate: f64,
    /// Frame-dependent static factor `exp[−Σ_j (Σ_d η̄_dj (n_gg − n_ee)_d)² σ_φj²]`.
    pub static_factor: f64,
    pub slopes: Vec<f64>,
}

impl DephasingEnvelope {
    pub fn at(&self, t: f64) -> f64 {
        self.static_factor * (-self.rate * t).exp()
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.at(t)).collect()
    }
}

/// Dephasing envelope for noise on the listed meshes (`None` = noiseless).
pub fn dephasing_envelope(
    model: &NumericModel,
    spectrum: &Spectrum,
    noise: &[Option<NoiseSpec>],
) -> Result<DephasingEnvelope> {
    let mut rate = 0.0;
    let mut exponent = 0.0;
    let mut slopes = Vec::new();
    for (j, spec) in noise.iter().enumerate() {
        let Some(spec) = spec else {
            slopes.push(0.0);
            continue;
        };
        let slope = omega_eg_slope(model, &spectrum.phi_e, j)?.value;
        slopes.push(slope);
        rate += 0.5 * slope * slope * spec.spectral_density(0.0);
        let el = &spectrum.elements;
        let shift: f64 = (0..model.dofs())
            .map(|d| model.drive[(d, j)] * (el.n_gg[d] - el.n_ee[d]))
            .sum();
        exponent += shift * shift * spec.sigma_phase().powi(2);
    }
    Ok(DephasingEnvelope {
        rate,
        static_factor: (-exponent).exp(),
        slopes,
    })
}
