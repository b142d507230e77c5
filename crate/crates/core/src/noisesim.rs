// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte Carlo averages of the transition probability under noisy flux.
//!
//! Noise paths are band-limited sums of cosines with random phases,
//! synthesized on a half-step grid with one inverse FFT that returns the
//! value and its exact derivative together. Each trajectory starts in the
//! first excited state of the static Hamiltonian and is propagated in the
//! span of its lowest eigenstates.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::basis::{CMatrix, C64};
use crate::error::{Error, Result};
use crate::netlist::{FluxDrive, Tone};
use crate::noise::NoiseSpec;
use crate::par::{map_indexed, Execution};
use crate::propagate::Propagator;
use crate::spectrum::{eigensystem, NumericModel};
use crate::units::flux_to_phase;

/// Default number of retained unperturbed levels.
pub const DEFAULT_LEVELS: usize = 6;
/// Number of contiguous trajectory batches used for standard errors.
pub const BATCHES: usize = 20;
/// Smallest accepted trajectory count for an averaged run.
pub const MIN_TRAJECTORIES: usize = 100;
/// Fit window starts at this multiple of the longest correlation time.
pub const FIT_START_FACTOR: f64 = 20.0;
/// Fit window ends at this fraction of the bootstrap decay time.
pub const FIT_END_FRACTION: f64 = 0.1;
/// Default upper bound on recorded samples per curve.
pub const DEFAULT_RECORDS: usize = 1000;

/// Largest step accepted for a noise spec: `min(t_c/20, 0.1/Ω)`.
pub fn max_time_step(noise: &NoiseSpec) -> f64 {
    (noise.t_c / 20.0).min(0.1 / noise.band_limit)
}

/// Sampled noise realisation on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    pub times: Vec<f64>,
    /// `δφₑ(t)`, rad.
    pub values: Vec<f64>,
    /// `δφ̇ₑ(t)`, rad/ns.
    pub derivatives: Vec<f64>,
    pub seed: u64,
}

impl NoisePath {
    pub fn zeros(samples: usize, spacing: f64) -> Self {
        Self {
            times: (0..samples).map(|k| k as f64 * spacing).collect(),
            values: vec![0.0; samples],
            derivatives: vec![0.0; samples],
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Spectral synthesizer for one noise spec on a fixed grid.
///
/// Lines sit at `ω_k = kΔω`, `k = 0..K`, with `Δω = 2π/P` for an FFT period
/// `P ≥ 2T`, enlarged until `K` reaches the mode count. Each line has
/// amplitude `2√(S(ω_k)Δω/2π)` (`√(2S(0)Δω/2π)` for the DC line), so the
/// autocorrelation is the band-limited one periodized with period `P`.
/// Without the DC line the variance of `∫δφ dt` over a time `t` would fall
/// short by the fraction `t/P`.
#[derive(Clone)]
pub struct NoiseSynth {
    noise: NoiseSpec,
    spacing: f64,
    samples: usize,
    omegas: Vec<f64>,
    amplitudes: Vec<f64>,
    plan: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for NoiseSynth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NoiseSynth")
            .field("noise", &self.noise)
            .field("spacing", &self.spacing)
            .field("samples", &self.samples)
            .field("modes", &self.omegas.len())
            .field("fft_len", &self.plan.len())
            .finish()
    }
}

impl NoiseSynth {
    /// Synthesizer for `samples` points spaced by `spacing` ns.
    pub fn new(noise: &NoiseSpec, samples: usize, spacing: f64) -> Result<Self> {
        if spacing.is_nan() || spacing <= 0.0 || samples == 0 {
            return Err(Error::InvalidSetting(format!(
                "noise grid needs positive spacing and samples, got {spacing} ns x {samples}"
            )));
        }
        if noise.t_c.is_nan()
            || noise.t_c <= 0.0
            || noise.band_limit.is_nan()
            || noise.band_limit <= 0.0
            || noise.sigma < 0.0
        {
            return Err(Error::InvalidSetting(format!(
                "noise needs t_c > 0, band_limit > 0, sigma >= 0; got {noise:?}"
            )));
        }
        if noise.band_limit * spacing >= PI {
            return Err(Error::TimeStepTooCoarse {
                dt: spacing,
                limit: PI / noise.band_limit,
            });
        }
        let span = (samples - 1) as f64 * spacing;
        let period = (2.0 * span).max(noise.mode_count as f64 * 2.0 * PI / noise.band_limit);
        let mut fft_len = ((period / spacing).ceil() as usize).max(2).next_power_of_two();
        let mut d_omega = 2.0 * PI / (fft_len as f64 * spacing);
        while ((noise.band_limit / d_omega).floor() as usize) < noise.mode_count {
            fft_len *= 2;
            d_omega = 2.0 * PI / (fft_len as f64 * spacing);
        }
        let modes = (noise.band_limit / d_omega).floor() as usize;
        let omegas: Vec<f64> = (0..=modes).map(|k| k as f64 * d_omega).collect();
        let amplitudes = omegas
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                // the DC line has half the weight of a ± pair
                let lines = if k == 0 { 2.0 } else { 4.0 };
                (lines * noise.spectral_density(w) * d_omega / (2.0 * PI)).sqrt()
            })
            .collect();
        let plan = FftPlanner::new().plan_fft_inverse(fft_len);
        Ok(Self {
            noise: *noise,
            spacing,
            samples,
            omegas,
            amplitudes,
            plan,
        })
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn fft_len(&self) -> usize {
        self.plan.len()
    }

    /// Line frequencies, rad/ns.
    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    /// Line amplitudes, rad.
    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// Variance carried by the synthesized lines, rad².
    pub fn variance(&self) -> f64 {
        self.amplitudes.iter().map(|a| 0.5 * a * a).sum()
    }

    /// Draws one path: values and derivatives.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
        let n = self.plan.len();
        let mut buf = vec![C64::new(0.0, 0.0); n];
        // y = x + i ẋ has spectrum a(1 − ω)/2 at +k and a*(1 + ω)/2 at −k.
        for (k, (&w, &amp)) in self.omegas.iter().zip(&self.amplitudes).enumerate() {
            let theta = 2.0 * PI * rng.random::<f64>();
            if k == 0 {
                buf[0] += amp * theta.cos();
                continue;
            }
            let a = C64::from_polar(amp, theta);
            buf[k] += a * (0.5 * (1.0 - w));
            buf[n - k] += a.conj() * (0.5 * (1.0 + w));
        }
        self.plan.process(&mut buf);
        buf.truncate(self.samples);
        buf.into_iter().map(|z| (z.re, z.im)).unzip()
    }

    /// Path seeded by `seed` on stream 0.
    pub fn path(&self, seed: u64) -> NoisePath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (values, derivatives) = self.sample(&mut rng);
        NoisePath {
            times: (0..self.samples).map(|k| k as f64 * self.spacing).collect(),
            values,
            derivatives,
            seed,
        }
    }
}

/// One noise realisation on `[0, T]` with grid spacing `dt`.
pub fn sample_noise_path(noise: &NoiseSpec, duration: f64, dt: f64, seed: u64) -> Result<NoisePath> {
    let limit = max_time_step(noise);
    if dt > limit {
        return Err(Error::TimeStepTooCoarse { dt, limit });
    }
    let samples = steps(duration, dt)? + 1;
    Ok(NoiseSynth::new(noise, samples, dt)?.path(seed))
}

fn steps(duration: f64, dt: f64) -> Result<usize> {
    if duration.is_nan() || duration <= 0.0 || dt.is_nan() || dt <= 0.0 || dt > duration {
        return Err(Error::InvalidSetting(format!(
            "need 0 < dt <= T, got dt = {dt} ns, T = {duration} ns"
        )));
    }
    Ok((duration / dt).round() as usize)
}

/// State the trajectories start from, in the unperturbed eigenbasis.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialState {
    /// `|e⁰⟩`.
    #[default]
    Excited,
    /// `(|g⁰⟩ + |e⁰⟩)/√2`.
    Superposition,
    /// Explicit amplitudes on the retained levels.
    Custom(Vec<C64>),
}

/// Run parameters of an averaged simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSettings {
    /// Total time `T`, ns.
    pub duration: f64,
    /// Propagation step, ns.
    pub dt: f64,
    pub trajectories: usize,
    pub base_seed: u64,
    /// Record every this many steps; `None` picks a stride for at most
    /// [`DEFAULT_RECORDS`] samples.
    pub record_every: Option<usize>,
    pub initial: InitialState,
    /// Fit window overrides, ns.
    pub fit_start: Option<f64>,
    pub fit_end: Option<f64>,
    pub execution: Execution,
}

impl SimulationSettings {
    pub fn new(duration: f64, dt: f64, trajectories: usize, base_seed: u64) -> Self {
        Self {
            duration,
            dt,
            trajectories,
            base_seed,
            record_every: None,
            initial: InitialState::Excited,
            fit_start: None,
            fit_end: None,
            execution: Execution::default(),
        }
    }

    fn stride(&self, steps: usize) -> usize {
        self.record_every
            .unwrap_or_else(|| steps.div_ceil(DEFAULT_RECORDS))
            .max(1)
    }
}

/// Observables of a single trajectory at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `|⟨g⁰|ψ(t)⟩|²`.
    pub ground: Vec<f64>,
    /// `|⟨ψ(0)|ψ(t)⟩|²`.
    pub survival: Vec<f64>,
    /// `⟨g⁰|ψ(t)⟩⟨ψ(t)|e⁰⟩`.
    pub coherence: Vec<C64>,
    /// Amplitudes on the retained levels, when requested.
    pub states: Vec<Vec<C64>>,
    pub norm_drift: f64,
}

/// Ordinary least-squares line with batch-means standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// 1/ns.
    pub slope: f64,
    /// Dimensionless.
    pub offset: f64,
    pub slope_se: f64,
    pub offset_se: f64,
    /// Window `[start, end]`, ns.
    pub window: (f64, f64),
    pub points: usize,
}

/// Averaged curves of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSimResult {
    pub times: Vec<f64>,
    /// `⟨C(0,t)⟩ = 1 − ⟨|⟨g⁰|ψ(t)⟩|²⟩`.
    pub avg_prob: Vec<f64>,
    /// `1 − avg_prob`, the fitted quantity.
    pub transition: Vec<f64>,
    /// Standard error of `avg_prob` from batch means.
    pub stderr: Vec<f64>,
    /// `⟨|⟨ψ(0)|ψ(t)⟩|²⟩`.
    pub survival: Vec<f64>,
    /// `2|⟨ρ_eg(t)⟩|`, equal to 1 at `t = 0` for the superposition start.
    pub coherence: Vec<f64>,
    pub trajectory_count: usize,
    pub fit: LinearFit,
    /// Unperturbed `ω_eg`, rad/ns.
    pub omega_eg: f64,
    pub max_norm_drift: f64,
}

/// Least-squares `y = slope·t + offset` on `start ≤ t ≤ end`.
pub fn fit_line(times: &[f64], values: &[f64], start: f64, end: f64) -> Result<(f64, f64, usize)> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= start && **t <= end)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 3 {
        return Err(Error::EmptyFitWindow { start, end });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stv: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - mv)).sum();
    let slope = stv / stt;
    Ok((slope, mv - slope * mt, pts.len()))
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Trajectory engine for one model, drive set and basis truncation.
#[derive(Debug, Clone)]
pub struct Simulator {
    propagator: Propagator,
    /// Retained unperturbed eigenvectors, columns.
    basis: CMatrix,
    energies: Vec<f64>,
    static_phases: Vec<f64>,
    noise: Vec<Option<NoiseSpec>>,
    tones: Vec<Vec<Tone>>,
}

impl Simulator {
    /// `dynamics` is propagated in the span of the lowest `levels`
    /// eigenvectors of `reference` at the static working point (`None`
    /// keeps the full basis). Usually both models are the same.
    pub fn new(
        dynamics: &NumericModel,
        reference: &NumericModel,
        drives: &[FluxDrive],
        levels: Option<usize>,
    ) -> Result<Self> {
        if drives.len() != dynamics.meshes() || drives.len() != reference.meshes() {
            return Err(Error::Dimension(format!(
                "{} drives for models with {} and {} meshes",
                drives.len(),
                dynamics.meshes(),
                reference.meshes()
            )));
        }
        if dynamics.dimension != reference.dimension {
            return Err(Error::Dimension(format!(
                "dynamics dimension {} differs from reference dimension {}",
                dynamics.dimension, reference.dimension
            )));
        }
        let levels = levels.unwrap_or(reference.dimension);
        if levels < 2 {
            return Err(Error::InvalidSetting(format!("need at least 2 levels, got {levels}")));
        }
        let static_phases: Vec<f64> = drives.iter().map(|d| flux_to_phase(d.static_value)).collect();
        let eig = eigensystem(&reference.hamiltonian(&static_phases, &[]), levels)?;
        let projected = dynamics.project(&eig.vectors);
        Ok(Self {
            propagator: Propagator::new(&projected),
            basis: eig.vectors,
            energies: eig.values,
            static_phases,
            noise: drives.iter().map(|d| d.noise).collect(),
            tones: drives.iter().map(|d| d.tones.clone()).collect(),
        })
    }

    /// Same model as dynamics and reference.
    pub fn for_model(model: &NumericModel, drives: &[FluxDrive], levels: Option<usize>) -> Result<Self> {
        Self::new(model, model, drives, levels)
    }

    pub fn levels(&self) -> usize {
        self.basis.ncols()
    }

    /// Retained eigenvectors of the reference model, as columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn omega_eg(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    pub fn meshes(&self) -> usize {
        self.static_phases.len()
    }

    /// Checks the step and band preconditions against every noisy mesh.
    pub fn check(&self, dt: f64) -> Result<()> {
        for n in self.noise.iter().flatten() {
            let limit = max_time_step(n);
            if dt > limit {
                return Err(Error::TimeStepTooCoarse { dt, limit });
            }
            if n.band_limit < self.omega_eg() {
                return Err(Error::BandTooNarrow {
                    band_limit: n.band_limit,
                    omega: self.omega_eg(),
                });
            }
        }
        Ok(())
    }

    fn initial_vector(&self, initial: &InitialState) -> Result<Vec<C64>> {
        let l = self.levels();
        let mut psi = vec![C64::new(0.0, 0.0); l];
        match initial {
            InitialState::Excited => psi[1] = C64::new(1.0, 0.0),
            InitialState::Superposition => {
                psi[0] = C64::new(0.5f64.sqrt(), 0.0);
                psi[1] = C64::new(0.5f64.sqrt(), 0.0);
            }
            InitialState::Custom(v) => {
                if v.len() != l {
                    return Err(Error::Dimension(format!(
                        "initial state has {} entries, expected {l}",
                        v.len()
                    )));
                }
                let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm.is_nan() || norm <= 0.0 {
                    return Err(Error::InvalidSetting("initial state has zero norm".into()));
                }
                psi.iter_mut().zip(v).for_each(|(p, x)| *p = x / norm);
            }
        }
        Ok(psi)
    }

    /// Synthesizers for the noisy meshes on the half-step grid.
    pub fn synthesizers(&self, duration: f64, dt: f64) -> Result<Vec<Option<NoiseSynth>>> {
        let samples = 2 * steps(duration, dt)? + 1;
        self.noise
            .iter()
            .map(|n| n.as_ref().map(|n| NoiseSynth::new(n, samples, dt / 2.0)).transpose())
            .collect()
    }

    /// Propagates one realisation. `paths[j]` holds mesh `j`'s noise on the
    /// half-step grid (spacing `dt/2`, `2N + 1` samples); `None` is noiseless.
    pub fn evolve(
        &self,
        paths: &[Option<&NoisePath>],
        dt: f64,
        initial: &InitialState,
        record_every: usize,
        keep_states: bool,
    ) -> Result<Trajectory> {
        let f = self.meshes();
        if paths.len() != f {
            return Err(Error::Dimension(format!("{} paths for {f} meshes", paths.len())));
        }
        let samples = paths.iter().flatten().map(|p| p.len()).next();
        let samples = match samples {
            Some(s) => s,
            None => {
                return Err(Error::InvalidSetting(
                    "evolve needs at least one path to fix the grid; use NoisePath::zeros".into(),
                ))
            }
        };
        if samples < 3 || samples % 2 == 0 || paths.iter().flatten().any(|p| p.len() != samples) {
            return Err(Error::InvalidSetting(format!(
                "paths must share an odd sample count of at least 3, got {samples}"
            )));
        }
        let n_steps = (samples - 1) / 2;
        let stride = record_every.max(1);
        let h = dt / 2.0;
        let psi0 = self.initial_vector(initial)?;
        let mut psi = psi0.clone();
        let mut prop = self.propagator.clone();
        let mut phi = vec![0.0; f];
        let mut phi_dot = vec![0.0; f];
        let capacity = n_steps / stride + 1;
        let mut out = Trajectory {
            times: Vec::with_capacity(capacity),
            ground: Vec::with_capacity(capacity),
            survival: Vec::with_capacity(capacity),
            coherence: Vec::with_capacity(capacity),
            states: Vec::new(),
            norm_drift: 0.0,
        };
        let record = |k: usize, psi: &[C64], out: &mut Trajectory| {
            let overlap: C64 = psi0.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
            out.times.push(k as f64 * dt);
            out.ground.push(psi[0].norm_sqr());
            out.survival.push(overlap.norm_sqr());
            out.coherence.push(psi[0] * psi[1].conj());
            if keep_states {
                out.states.push(psi.to_vec());
            }
        };
        record(0, &psi, &mut out);
        for k in 0..n_steps {
            let m = 2 * k + 1;
            let t = m as f64 * h;
            for j in 0..f {
                let (mut v, mut d) = match paths[j] {
                    Some(p) => (p.values[m], p.derivatives[m]),
                    None => (0.0, 0.0),
                };
                for tone in &self.tones[j] {
                    let amp = flux_to_phase(tone.amplitude);
                    let arg = tone.frequency * t + tone.phase;
                    v += amp * arg.cos();
                    d -= amp * tone.frequency * arg.sin();
                }
                phi[j] = self.static_phases[j] + v;
                phi_dot[j] = d;
            }
            prop.step(&mut psi, &phi, &phi_dot, dt);
            if (k + 1) % stride == 0 {
                record(k + 1, &psi, &mut out);
            }
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        out.norm_drift = (norm - 1.0).abs();
        Ok(out)
    }

    /// Trajectory `index` of a seeded run.
    pub fn trajectory(
        &self,
        synths: &[Option<NoiseSynth>],
        settings: &SimulationSettings,
        index: usize,
        keep_states: bool,
    ) -> Result<Trajectory> {
        let n_steps = steps(settings.duration, settings.dt)?;
        let mut rng = ChaCha8Rng::seed_from_u64(settings.base_seed);
        rng.set_stream(index as u64);
        let paths: Vec<NoisePath> = synths
            .iter()
            .map(|s| match s {
                Some(s) => {
                    let (values, derivatives) = s.sample(&mut rng);
                    NoisePath {
                        times: Vec::new(),
                        values,
                        derivatives,
                        seed: settings.base_seed,
                    }
                }
                None => NoisePath {
                    times: Vec::new(),
                    values: vec![0.0; 2 * n_steps + 1],
                    derivatives: vec![0.0; 2 * n_steps + 1],
                    seed: settings.base_seed,
                },
            })
            .collect();
        let refs: Vec<Option<&NoisePath>> = paths.iter().map(Some).collect();
        self.evolve(
            &refs,
            settings.dt,
            &settings.initial,
            settings.stride(n_steps),
            keep_states,
        )
    }

    /// Averaged transition probability with a linear fit.
    pub fn run(&self, settings: &SimulationSettings) -> Result<NoiseSimResult> {
        let n = settings.trajectories;
        if n < MIN_TRAJECTORIES {
            return Err(Error::InvalidSetting(format!(
                "need at least {MIN_TRAJECTORIES} trajectories, got {n}"
            )));
        }
        self.check(settings.dt)?;
        let synths = self.synthesizers(settings.duration, settings.dt)?;
        let mut batches: Vec<Sums> = Vec::with_capacity(BATCHES);
        let mut drift: f64 = 0.0;
        for b in 0..BATCHES {
            let (lo, hi) = (b * n / BATCHES, (b + 1) * n / BATCHES);
            let results = map_indexed(settings.execution, hi - lo, |i| {
                self.trajectory(&synths, settings, lo + i, false)
            });
            let mut sums: Option<Sums> = None;
            for r in results {
                let tr = r?;
                drift = drift.max(tr.norm_drift);
                match sums.as_mut() {
                    Some(s) => s.add(&tr),
                    None => sums = Some(Sums::from(&tr)),
                }
            }
            if let Some(s) = sums {
                batches.push(s);
            }
        }
        let times = batches[0].times.clone();
        let mut total = batches[0].clone();
        for b in &batches[1..] {
            total.merge(b);
        }
        let inv = 1.0 / n as f64;
        let transition: Vec<f64> = total.ground.iter().map(|x| x * inv).collect();
        let avg_prob: Vec<f64> = transition.iter().map(|p| 1.0 - p).collect();
        let survival = total.survival.iter().map(|x| x * inv).collect();
        let coherence = total.coherence.iter().map(|z| 2.0 * z.norm() * inv).collect();
        let batch_curves: Vec<Vec<f64>> = batches
            .iter()
            .map(|b| b.ground.iter().map(|x| x / b.count as f64).collect())
            .collect();
        let stderr = (0..times.len())
            .map(|k| mean_and_se(&batch_curves.iter().map(|c| c[k]).collect::<Vec<_>>()).1)
            .collect();

        let t_c = self.noise.iter().flatten().map(|n| n.t_c).fold(0.0, f64::max);
        let start = settings.fit_start.unwrap_or(FIT_START_FACTOR * t_c);
        let end = match settings.fit_end {
            Some(e) => e,
            None => {
                let (boot, _, _) = fit_line(&times, &transition, start, settings.duration)?;
                if boot > 0.0 {
                    settings.duration.min(FIT_END_FRACTION / boot)
                } else {
                    settings.duration
                }
            }
        };
        let (slope, offset, points) = fit_line(&times, &transition, start, end)?;
        let per_batch = batch_curves
            .iter()
            .map(|c| fit_line(&times, c, start, end))
            .collect::<Result<Vec<_>>>()?;
        let slopes: Vec<f64> = per_batch.iter().map(|f| f.0).collect();
        let offsets: Vec<f64> = per_batch.iter().map(|f| f.1).collect();
        Ok(NoiseSimResult {
            times,
            avg_prob,
            transition,
            stderr,
            survival,
            coherence,
            trajectory_count: n,
            fit: LinearFit {
                slope,
                offset,
                slope_se: mean_and_se(&slopes).1,
                offset_se: mean_and_se(&offsets).1,
                window: (start, end),
                points,
            },
            omega_eg: self.omega_eg(),
            max_norm_drift: drift,
        })
    }
}

#[derive(Debug, Clone)]
struct Sums {
    times: Vec<f64>,
    ground: Vec<f64>,
    survival: Vec<f64>,
    coherence: Vec<C64>,
    count: usize,
}

impl Sums {
    fn from(t: &Trajectory) -> Self {
        Self {
            times: t.times.clone(),
            ground: t.ground.clone(),
            survival: t.survival.clone(),
            coherence: t.coherence.clone(),
            count: 1,
        }
    }

    fn add(&mut self, t: &Trajectory) {
        self.ground.iter_mut().zip(&t.ground).for_each(|(a, b)| *a += b);
        self.survival.iter_mut().zip(&t.survival).for_each(|(a, b)| *a += b);
        self.coherence.iter_mut().zip(&t.coherence).for_each(|(a, b)| *a += b);
        self.count += 1;
    }

    fn merge(&mut self, o: &Sums) {
        self.ground.iter_mut().zip(&o.ground).for_each(|(a, b)| *a += b);
        self.survival.iter_mut().zip(&o.survival).for_each(|(a, b)| *a += b);
        self.coherence.iter_mut().zip(&o.coherence).for_each(|(a, b)| *a += b);
        self.count += o.count;
    }
}

/// Averaged run of `model` under `drives`, truncated to `levels`.
pub fn averaged_transition_probability(
    model: &NumericModel,
    drives: &[FluxDrive],
    levels: Option<usize>,
    settings: &SimulationSettings,
) -> Result<NoiseSimResult> {
    Simulator::for_model(model, drives, levels)?.run(settings)
}

/// `Σ_d η̄_dj ⟨g|n_d|e⟩` for mesh `j`.
pub fn drive_element(drive: &DMatrix<f64>, n_ge: &[C64], mesh: usize) -> C64 {
    (0..drive.nrows()).map(|d| n_ge[d] * drive[(d, mesh)]).sum()
}

/// Offset of the averaged transition probability, `2|c|²σ_φ²`, for the
/// drive element `c` built from irrotational eigenstates.
pub fn offset_target(c: C64, noise: &NoiseSpec) -> f64 {
    2.0 * c.norm_sqr() * noise.sigma_phase().powi(2)
}

/// First-order two-level expectation of `|⟨g|ψ(t)⟩|²`, averaged exactly
/// over the synthesizer's random phases.
///
/// `d = ⟨g|∂H/∂φₑ|e⟩` and `c = Σ_d η̄_d⟨g|n_d|e⟩` in the simulated frame.
pub fn two_level_prediction(d: C64, c: C64, omega_eg: f64, synth: &NoiseSynth, times: &[f64]) -> Vec<f64> {
    let i = C64::new(0.0, 1.0);
    let kernel = |x: f64, t: f64| {
        if (x * t).abs() < 1e-8 {
            t * t
        } else {
            let s = (0.5 * x * t).sin();
            4.0 * s * s / (x * x)
        }
    };
    let weights: Vec<(f64, f64, f64)> = synth
        .omegas()
        .iter()
        .zip(synth.amplitudes())
        .map(|(&w, &a)| {
            let q = 0.25 * a * a;
            (w, q * (d - i * w * c).norm_sqr(), q * (d + i * w * c).norm_sqr())
        })
        .collect();
    times
        .iter()
        .map(|&t| {
            weights
                .iter()
                .map(|&(w, plus, minus)| plus * kernel(w + omega_eg, t) + minus * kernel(w - omega_eg, t))
                .sum()
        })
        .collect()
}

/// Pure-dephasing envelope from the adiabatic phase
/// `ϕ(t) = ∫ (ω′δφ + ω″δφ²/2) dt`, averaged over seeded paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingCurve {
    pub times: Vec<f64>,
    /// `|⟨e^{−iϕ(t)}⟩|`.
    pub envelope: Vec<f64>,
    pub paths: usize,
}

/// Monte Carlo of the adiabatic phase for a single noisy mesh.
#[allow(clippy::too_many_arguments)]
pub fn dephasing_monte_carlo(
    slope: f64,
    curvature: f64,
    noise: &NoiseSpec,
    duration: f64,
    dt: f64,
    paths: usize,
    base_seed: u64,
    record_every: usize,
    execution: Execution,
) -> Result<DephasingCurve> {
    const CHUNK: usize = 64;
    let n_steps = steps(duration, dt)?;
    let synth = NoiseSynth::new(noise, n_steps + 1, dt)?;
    let stride = record_every.max(1);
    let records = n_steps / stride + 1;
    let chunks = paths.div_ceil(CHUNK);
    let sums = map_indexed(execution, chunks, |c| {
        let mut acc = vec![C64::new(0.0, 0.0); records];
        for p in c * CHUNK..((c + 1) * CHUNK).min(paths) {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
            rng.set_stream(p as u64);
            let (x, _) = synth.sample(&mut rng);
            let rate = |v: f64| slope * v + 0.5 * curvature * v * v;
            let mut phase = 0.0;
            acc[0] += C64::new(1.0, 0.0);
            for k in 0..n_steps {
                phase += 0.5 * dt * (rate(x[k]) + rate(x[k + 1]));
                if (k + 1) % stride == 0 {
                    acc[(k + 1) / stride] += C64::from_polar(1.0, -phase);
                }
            }
        }
        acc
    });
    let mut total = vec![C64::new(0.0, 0.0); records];
    for s in sums {
        total.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
    }
    Ok(DephasingCurve {
        times: (0..records).map(|k| (k * stride) as f64 * dt).collect(),
        envelope: total.iter().map(|z| z.norm() / paths as f64).collect(),
        paths,
    })
}
