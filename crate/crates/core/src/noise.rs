// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical flux-noise model.
//!
//! The shipped spectrum is the Lorentzian of an exponentially correlated
//! process, `S(ω) = 2σ²t_c / (1 + ω²t_c²)`, normalised so that
//! `∫ S(ω) dω/2π = σ²` over the full real line.

use std::f64::consts::PI;

use crate::units::flux_to_phase;

/// Default ratio `band_limit · t_c` used when a netlist does not set one.
///
/// A sharp cutoff at Ω removes the variance fraction `1 − (2/π)·atan(Ω t_c)`;
/// at 20 that is 3.2 %.
pub const DEFAULT_BAND_FACTOR: f64 = 20.0;

/// Smallest accepted `band_limit · t_c`.
pub const MIN_BAND_FACTOR: f64 = 10.0;

/// Default minimum number of spectral lines in a synthesized path.
pub const DEFAULT_MODE_COUNT: usize = 1024;

/// Stationary Gaussian flux noise with a Lorentzian spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation in units of Φ₀.
    pub sigma: f64,
    /// Correlation time, ns.
    pub t_c: f64,
    /// Largest synthesized angular frequency, rad/ns.
    pub band_limit: f64,
    /// Minimum number of spectral lines below the band limit.
    pub mode_count: usize,
}

impl NoiseSpec {
    pub fn new(sigma: f64, t_c: f64) -> Self {
        Self {
            sigma,
            t_c,
            band_limit: DEFAULT_BAND_FACTOR / t_c,
            mode_count: DEFAULT_MODE_COUNT,
        }
    }

    pub fn with_band_limit(mut self, band_limit: f64) -> Self {
        self.band_limit = band_limit;
        self
    }

    pub fn with_mode_count(mut self, mode_count: usize) -> Self {
        self.mode_count = mode_count;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    /// Standard deviation of the reduced flux, rad.
    pub fn sigma_phase(&self) -> f64 {
        flux_to_phase(self.sigma)
    }

    /// Two-sided spectral density of the reduced flux, rad²·ns.
    pub fn spectral_density(&self, omega: f64) -> f64 {
        let s = self.sigma_phase();
        2.0 * s * s * self.t_c / (1.0 + omega * omega * self.t_c * self.t_c)
    }

    /// Autocorrelation `⟨δφ(τ)δφ(0)⟩` of the untruncated process, rad².
    pub fn autocorrelation(&self, lag: f64) -> f64 {
        let s = self.sigma_phase();
        s * s * (-lag.abs() / self.t_c).exp()
    }

    /// Fraction of σ² carried by frequencies below the band limit.
    pub fn band_variance_fraction(&self) -> f64 {
        2.0 / PI * (self.band_limit * self.t_c).atan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_integrates_to_variance() {
        let noise = NoiseSpec::new(0.002, 0.05);
        // trapezoid on a wide grid, tails added analytically
        let cut = 4000.0 / noise.t_c;
        let n = 400_000;
        let h = 2.0 * cut / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let w = -cut + k as f64 * h;
            let weight = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += weight * noise.spectral_density(w);
        }
        let tail = 1.0 - 2.0 / PI * (cut * noise.t_c).atan();
        let var = acc * h / (2.0 * PI) / (1.0 - tail);
        let target = noise.sigma_phase().powi(2);
        assert!((var / target - 1.0).abs() < 1e-6, "{var} vs {target}");
    }

    #[test]
    fn default_band_keeps_most_variance() {
        let noise = NoiseSpec::new(0.002, 0.05);
        assert!((noise.band_limit - 400.0).abs() < 1e-9);
        assert!(noise.band_variance_fraction() > 0.95);
    }
}
