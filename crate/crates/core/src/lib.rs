// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantization of superconducting circuit loops threaded by time-dependent
//! external flux.
//!
//! The pipeline runs netlist → [`topology`] matrices → [`irrotational`]
//! change of variables → [`hamiltonian`] → [`spectrum`] and [`noisesim`].
//! Internally ħ = 1, time is in ns and energies are angular frequencies in
//! rad/ns; inputs use h·GHz, fF, nH and Φ₀.

pub mod basis;
pub mod error;
pub mod hamiltonian;
pub mod irrotational;
pub mod netlist;
pub mod noise;
pub mod noisesim;
pub mod par;
pub mod propagate;
pub mod spectrum;
pub mod topology;
pub mod units;

pub use error::{Error, Result};
