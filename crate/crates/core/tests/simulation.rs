// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Short Monte Carlo runs on the asymmetric SQUID with fast noise.

use std::f64::consts::PI;

use fluxquant::basis::{BasisSpec, DofBasis, C64};
use fluxquant::hamiltonian::{squid_gauge_family, GaugePair};
use fluxquant::netlist::FluxDrive;
use fluxquant::noise::NoiseSpec;
use fluxquant::noisesim::{averaged_transition_probability, drive_element, NoiseSimResult, SimulationSettings};
use fluxquant::spectrum::{flux_derivative_element, t1_rate, NumericModel, Spectrum};

const SIGMA: f64 = 0.002;
const TC: f64 = 0.005;
const DURATION: f64 = 0.3;
const DT: f64 = 2.5e-5;
const TRAJECTORIES: usize = 100;

fn noise() -> NoiseSpec {
    NoiseSpec::new(SIGMA, TC).with_band_limit(10.0 / TC)
}

fn model(pair: GaugePair) -> NumericModel {
    let h = squid_gauge_family(1.0, 3.0, 10.0, 5.0, pair).unwrap();
    let basis = BasisSpec {
        dofs: vec![DofBasis::Periodic { charge_cutoff: 15 }],
    };
    NumericModel::new(&h, &basis).unwrap()
}

fn run(pair: GaugePair, levels: usize) -> NoiseSimResult {
    let drive = FluxDrive {
        static_value: 0.25,
        noise: Some(noise()),
        tones: Vec::new(),
    };
    let settings = SimulationSettings::new(DURATION, DT, TRAJECTORIES, 11);
    averaged_transition_probability(&model(pair), &[drive], Some(levels), &settings).unwrap()
}

#[test]
fn six_and_ten_levels_agree() {
    let pair = GaugePair::LEFT;
    let a = run(pair, 6);
    let b = run(pair, 10);
    let (fa, fb) = (&a.fit, &b.fit);
    assert!((fa.slope - fb.slope).abs() < fa.slope_se, "{fa:?} {fb:?}");
    assert!((fa.offset - fb.offset).abs() < fa.offset_se, "{fa:?} {fb:?}");
}

#[test]
fn slope_matches_golden_rule() {
    let m = model(GaugePair::LEFT);
    let s = Spectrum::compute(&m, &[PI / 2.0], 2).unwrap();
    let d = flux_derivative_element(&m, &s, 0).unwrap();
    let c = drive_element(&m.drive, &s.elements.n_ge, 0);
    let gamma = t1_rate(d + C64::new(0.0, s.omega_eg) * c, &noise(), s.omega_eg);
    let fit = run(GaugePair::LEFT, 6).fit;
    assert!((fit.slope - gamma).abs() < 3.0 * fit.slope_se, "{fit:?} vs {gamma}");
    assert!(fit.window.0 >= 20.0 * TC);
}
