// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Symbolic Hamiltonians in the reduced variables.
//!
//! ```text
//! H = nᵀ E_c n + Σ_terms V_k(θ_k) + nᵀ η̄ φ̇ₑ,    θ_k = c_k·φ̃ + w_k·φₑ
//! ```
//!
//! with `V = −E cos θ` for junctions and `V = ½ E θ²` for inductors. All
//! energies are stored in rad/ns; the `*_ghz` accessors convert back.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::irrotational::IrrotationalTransform;
use crate::netlist::{BranchKind, CircuitNetlist};
use crate::units::{angular_to_ghz, charging_energy_unit_ghz, ghz_to_angular, inductive_energy_ghz};

/// Drive couplings below this magnitude count as zero.
pub const DRIVE_ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    /// `−E cos θ`
    Cosine,
    /// `½ E θ²`
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTerm {
    pub kind: TermKind,
    /// Branch the term came from.
    pub branch: String,
    /// E_J or E_L, rad/ns.
    pub energy: f64,
    pub dof_coeffs: DVector<f64>,
    pub flux_weights: DVector<f64>,
}

impl PotentialTerm {
    pub fn energy_ghz(&self) -> f64 {
        angular_to_ghz(self.energy)
    }

    /// `θ` at a classical point.
    pub fn argument(&self, phi: &[f64], phi_e: &[f64]) -> f64 {
        let a: f64 = self.dof_coeffs.iter().zip(phi).map(|(c, p)| c * p).sum();
        let b: f64 = self.flux_weights.iter().zip(phi_e).map(|(w, p)| w * p).sum();
        a + b
    }

    /// Classical value of the term, rad/ns.
    pub fn value(&self, phi: &[f64], phi_e: &[f64]) -> f64 {
        let theta = self.argument(phi, phi_e);
        match self.kind {
            TermKind::Cosine => -self.energy * theta.cos(),
            TermKind::Quadratic => 0.5 * self.energy * theta * theta,
        }
    }
}

fn linear_form(f: &mut fmt::Formatter<'_>, coeffs: &DVector<f64>, symbol: &str, first: &mut bool) -> fmt::Result {
    for (i, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { "-" } else { "+" };
        let mag = c.abs();
        if *first {
            if c < 0.0 {
                f.write_str("-")?;
            }
        } else {
            write!(f, " {sign} ")?;
        }
        *first = false;
        if (mag - 1.0).abs() > 1e-12 {
            write!(f, "{mag:.6}*")?;
        }
        write!(f, "{symbol}{}", i + 1)?;
    }
    Ok(())
}

impl fmt::Display for PotentialTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TermKind::Cosine => write!(f, "-{:.6} GHz * cos(", self.energy_ghz())?,
            TermKind::Quadratic => write!(f, "0.5 * {:.6} GHz * (", self.energy_ghz())?,
        }
        let mut first = true;
        linear_form(f, &self.dof_coeffs, "phi", &mut first)?;
        linear_form(f, &self.flux_weights, "phi_e", &mut first)?;
        if first {
            f.write_str("0")?;
        }
        match self.kind {
            TermKind::Cosine => f.write_str(")"),
            TermKind::Quadratic => f.write_str(")^2"),
        }
    }
}

/// Gauge pair `(m_l, m_r)` of a two-junction loop, in loop-oriented branch
/// fluxes with `Φ_l + Φ_r = Φₑ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugePair {
    pub m_l: f64,
    pub m_r: f64,
}

impl GaugePair {
    pub const LEFT: GaugePair = GaugePair { m_l: 1.0, m_r: 0.0 };
    pub const RIGHT: GaugePair = GaugePair { m_l: 0.0, m_r: -1.0 };

    pub fn new(m_l: f64, m_r: f64) -> Self {
        Self { m_l, m_r }
    }

    /// The unique irrotational pair with `m_Δ = 1`.
    pub fn irrotational(c_l: f64, c_r: f64) -> Self {
        let total = c_l + c_r;
        Self {
            m_l: c_l / total,
            m_r: -c_r / total,
        }
    }

    pub fn m_delta(&self) -> f64 {
        self.m_l - self.m_r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeLabel {
    Irrotational,
    Pair(GaugePair),
    Other(String),
}

impl fmt::Display for GaugeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeLabel::Irrotational => f.write_str("irrotational"),
            GaugeLabel::Pair(p) => write!(f, "({}, {})", p.m_l, p.m_r),
            GaugeLabel::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicHamiltonian {
    /// Coefficients of `n_i n_j`, rad/ns.
    pub charging: DMatrix<f64>,
    pub terms: Vec<PotentialTerm>,
    /// η̄: coefficients of `n_i φ̇ₑ^j`, dimensionless.
    pub drive_coupling: DMatrix<f64>,
    pub gauge: GaugeLabel,
}

impl SymbolicHamiltonian {
    pub fn dofs(&self) -> usize {
        self.charging.nrows()
    }

    pub fn meshes(&self) -> usize {
        self.drive_coupling.ncols()
    }

    pub fn charging_ghz(&self) -> DMatrix<f64> {
        self.charging.map(angular_to_ghz)
    }

    pub fn is_driven(&self) -> bool {
        self.drive_coupling.amax() > DRIVE_ZERO_TOLERANCE
    }

    /// True when every coefficient, drive included, vanishes.
    pub fn is_zero(&self) -> bool {
        self.charging.amax() == 0.0 && self.terms.iter().all(|t| t.energy == 0.0) && self.drive_coupling.amax() == 0.0
    }

    /// Classical potential energy, rad/ns.
    pub fn potential(&self, phi: &[f64], phi_e: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.value(phi, phi_e)).sum()
    }

    fn relabel(mut self) -> Self {
        if !self.is_driven() {
            self.gauge = GaugeLabel::Irrotational;
        }
        self
    }
}

/// Assembles the Hamiltonian for explicit elements and a transform.
pub fn from_elements(
    elements: &[(String, BranchKind)],
    transform: &IrrotationalTransform,
    gauge: GaugeLabel,
) -> Result<SymbolicHamiltonian> {
    if elements.len() != transform.branches() {
        return Err(Error::Dimension(format!(
            "{} elements for a transform over {} branches",
            elements.len(),
            transform.branches()
        )));
    }
    let kinetic = transform.kinetic();
    let inv = kinetic
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Dimension("kinetic capacitance block is not positive definite".into()))?
        .inverse();
    let charging = inv * ghz_to_angular(4.0 * charging_energy_unit_ghz());
    let charging = (&charging + charging.transpose()) * 0.5;
    let k = transform.dof_coeffs();
    let w = &transform.flux_weights;
    let mut terms = Vec::new();
    for (i, (id, kind)) in elements.iter().enumerate() {
        let (kind, energy) = match *kind {
            BranchKind::Junction { ej, .. } => (TermKind::Cosine, ghz_to_angular(ej)),
            BranchKind::Inductor { l } => (TermKind::Quadratic, ghz_to_angular(inductive_energy_ghz(l))),
            BranchKind::Capacitor { .. } => continue,
        };
        terms.push(PotentialTerm {
            kind,
            branch: id.clone(),
            energy,
            dof_coeffs: k.row(i).transpose(),
            flux_weights: w.row(i).transpose(),
        });
    }
    Ok(SymbolicHamiltonian {
        charging,
        terms,
        drive_coupling: transform.eta_bar.clone(),
        gauge,
    }
    .relabel())
}

/// One potential term per junction and inductor; capacitors only enter the
/// kinetic part.
pub fn build_symbolic(netlist: &CircuitNetlist, transform: &IrrotationalTransform) -> Result<SymbolicHamiltonian> {
    let elements: Vec<(String, BranchKind)> = netlist.branches.iter().map(|b| (b.id.clone(), b.kind)).collect();
    from_elements(&elements, transform, GaugeLabel::Other("custom".into()))
}

/// Two-junction loop in gauge `(m_l, m_r)`. Capacitances in fF, energies in
/// h·GHz.
pub fn squid_gauge_family(c_l: f64, c_r: f64, ej_l: f64, ej_r: f64, gauge: GaugePair) -> Result<SymbolicHamiltonian> {
    if gauge.m_l == gauge.m_r {
        return Err(Error::InvalidGauge {
            m_l: gauge.m_l,
            m_r: gauge.m_r,
            reason: "m_l must differ from m_r".into(),
        });
    }
    let c = DMatrix::from_diagonal(&DVector::from_row_slice(&[c_l, c_r]));
    let r = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
    let m = DMatrix::from_row_slice(1, 2, &[gauge.m_l, gauge.m_r]);
    let t = IrrotationalTransform::from_m(&c, &r, m)?;
    let elements = [
        ("jl".to_string(), BranchKind::Junction { ej: ej_l, c: c_l }),
        ("jr".to_string(), BranchKind::Junction { ej: ej_r, c: c_r }),
    ];
    from_elements(&elements, &t, GaugeLabel::Pair(gauge))
}

/// Rewrites `h` in the variables `φ̃' = Λ φ̃ + S φₑ(t)`.
///
/// The time-dependent part of the unitary contributes `S` to the drive
/// coupling, so the result is `η̄' = Λ η̄ + S`.
pub fn gauge_transform(
    h: &SymbolicHamiltonian,
    lambda: &DMatrix<f64>,
    shift: &DMatrix<f64>,
    gauge: GaugeLabel,
) -> Result<SymbolicHamiltonian> {
    let (d, f) = (h.dofs(), h.meshes());
    if lambda.shape() != (d, d) || shift.shape() != (d, f) {
        return Err(Error::Dimension(format!(
            "expected Λ {d}x{d} and S {d}x{f}, got {:?} and {:?}",
            lambda.shape(),
            shift.shape()
        )));
    }
    let lambda_inv = lambda.clone().try_inverse().ok_or(Error::SingularTransform)?;
    let terms = h
        .terms
        .iter()
        .map(|t| {
            // cᵀφ̃ = cᵀΛ⁻¹φ̃' − cᵀΛ⁻¹Sφₑ
            let c_new = lambda_inv.transpose() * &t.dof_coeffs;
            let w_new = &t.flux_weights - shift.transpose() * &c_new;
            PotentialTerm {
                dof_coeffs: c_new,
                flux_weights: w_new,
                ..t.clone()
            }
        })
        .collect();
    Ok(SymbolicHamiltonian {
        charging: lambda * &h.charging * lambda.transpose(),
        terms,
        drive_coupling: lambda * &h.drive_coupling + shift,
        gauge,
    }
    .relabel())
}

/// Moves a two-junction Hamiltonian between members of the `(m_l, m_r)` family.
pub fn gauge_shift(h: &SymbolicHamiltonian, from: GaugePair, to: GaugePair) -> Result<SymbolicHamiltonian> {
    if h.dofs() != 1 || h.meshes() != 1 {
        return Err(Error::NotSingleLoop("gauge_shift"));
    }
    for g in [from, to] {
        if g.m_delta() == 0.0 {
            return Err(Error::InvalidGauge {
                m_l: g.m_l,
                m_r: g.m_r,
                reason: "m_l must differ from m_r".into(),
            });
        }
    }
    if let GaugeLabel::Pair(p) = &h.gauge {
        if *p != from {
            return Err(Error::InvalidGauge {
                m_l: from.m_l,
                m_r: from.m_r,
                reason: format!("Hamiltonian is labelled with gauge ({}, {})", p.m_l, p.m_r),
            });
        }
    }
    let lambda = to.m_delta() / from.m_delta();
    let s = (from.m_l * to.m_r - to.m_l * from.m_r) / from.m_delta();
    gauge_transform(
        h,
        &DMatrix::from_element(1, 1, lambda),
        &DMatrix::from_element(1, 1, s),
        GaugeLabel::Pair(to),
    )
}

/// Sets every charging, Josephson and inductive energy to zero. Only the
/// drive term can survive.
pub fn zero_parameter_limit(h: &SymbolicHamiltonian) -> SymbolicHamiltonian {
    SymbolicHamiltonian {
        charging: DMatrix::zeros(h.dofs(), h.dofs()),
        terms: Vec::new(),
        drive_coupling: h.drive_coupling.clone(),
        gauge: h.gauge.clone(),
    }
}
