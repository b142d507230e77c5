// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Physical constants and unit conversions.
//!
//! Internally every Hamiltonian coefficient is an angular frequency in
//! rad/ns with ħ = 1. Circuit parameters enter in h·GHz (energies), fF
//! (capacitances) and nH (inductances); fluxes enter in units of Φ₀ and
//! are stored as reduced phases φ = 2πΦ/Φ₀.

use std::f64::consts::PI;

/// Elementary charge, C (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;

const FEMTOFARAD: f64 = 1e-15;
const NANOHENRY: f64 = 1e-9;
const GIGAHERTZ: f64 = 1e9;

/// Charging energy e²/2C of a 1 fF capacitor, in h·GHz (about 19.37).
pub fn charging_energy_unit_ghz() -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * PLANCK * FEMTOFARAD) / GIGAHERTZ
}

/// Charging energy e²/2C in h·GHz for a capacitance in fF.
pub fn charging_energy_ghz(capacitance_ff: f64) -> f64 {
    charging_energy_unit_ghz() / capacitance_ff
}

/// Inductive energy (Φ₀/2π)²/L in h·GHz for an inductance in nH.
pub fn inductive_energy_ghz(inductance_nh: f64) -> f64 {
    let flux_quantum = PLANCK / (2.0 * ELEMENTARY_CHARGE);
    let reduced = flux_quantum / (2.0 * PI);
    reduced * reduced / (inductance_nh * NANOHENRY) / PLANCK / GIGAHERTZ
}

/// Inductance in nH corresponding to an inductive energy in h·GHz.
pub fn inductance_for_energy_nh(energy_ghz: f64) -> f64 {
    inductive_energy_ghz(1.0) / energy_ghz
}

/// h·GHz → rad/ns.
#[inline]
pub fn ghz_to_angular(energy_ghz: f64) -> f64 {
    2.0 * PI * energy_ghz
}

/// rad/ns → h·GHz.
#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Flux in units of Φ₀ → reduced phase in rad.
#[inline]
pub fn flux_to_phase(flux_phi0: f64) -> f64 {
    2.0 * PI * flux_phi0
}

/// Reduced phase in rad → flux in units of Φ₀.
#[inline]
pub fn phase_to_flux(phase: f64) -> f64 {
    phase / (2.0 * PI)
}
