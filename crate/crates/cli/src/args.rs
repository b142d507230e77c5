// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line arguments and their value parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fluxquant::basis::{DEFAULT_CHARGE_CUTOFF, DEFAULT_OSCILLATOR_LEVELS};
use fluxquant::irrotational::Gauge;
use fluxquant::noisesim::DEFAULT_LEVELS;
use fluxquant::topology::DEFAULT_AUX_EPSILON;

use crate::report::Format;

#[derive(Debug, Parser)]
#[command(
    name = "fluxquant",
    version,
    about = "Quantize superconducting circuit loops under time-dependent flux"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Symbolic Hamiltonian: transform, charging matrix, terms, drive couplings.
    Quantize(QuantizeArgs),
    /// Eigenvalues and matrix elements over a flux grid.
    Spectrum(SpectrumArgs),
    /// Golden-rule relaxation and dephasing rates over a flux grid.
    Rates(SpectrumArgs),
    /// Noise-averaged transition probability by Monte Carlo.
    Simulate(SimulateArgs),
    /// Spectrum, element, slope and offset consistency across gauges.
    CheckGauge(CheckGaugeArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Quantize(_) => "quantize",
            Command::Spectrum(_) => "spectrum",
            Command::Rates(_) => "rates",
            Command::Simulate(_) => "simulate",
            Command::CheckGauge(_) => "check-gauge",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Netlist file.
    pub netlist: PathBuf,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Table, env = "FLUXQUANT_FORMAT")]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Auxiliary capacitance scale for inductors, fF.
    #[arg(long, default_value_t = DEFAULT_AUX_EPSILON, env = "FLUXQUANT_AUX_EPSILON")]
    pub aux_epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct QuantizeArgs {
    #[command(flatten)]
    pub common: Common,
    /// `irrotational`, `split`, `closure=ID[,ID...]` or a loop pair `m_l,m_r`.
    #[arg(long, default_value = "irrotational", value_parser = parse_gauge, allow_hyphen_values = true)]
    pub gauge: GaugeArg,
}

#[derive(Debug, Clone, Args)]
pub struct BasisArgs {
    /// Charge-basis cutoff for periodic modes.
    #[arg(long, default_value_t = DEFAULT_CHARGE_CUTOFF, env = "FLUXQUANT_CHARGE_CUTOFF")]
    pub charge_cutoff: usize,
    /// Oscillator levels for extended modes.
    #[arg(long, default_value_t = DEFAULT_OSCILLATOR_LEVELS, env = "FLUXQUANT_OSCILLATOR_LEVELS")]
    pub oscillator_levels: usize,
}

#[derive(Debug, Clone, Default, Args)]
pub struct NoiseArgs {
    /// Noise standard deviation, Phi0.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Noise correlation time, ns.
    #[arg(long)]
    pub tc: Option<f64>,
    /// Band limit in units of 1/t_c.
    #[arg(long)]
    pub band_factor: Option<f64>,
    /// Minimum number of spectral lines.
    #[arg(long)]
    pub modes: Option<usize>,
    /// Meshes that receive the overrides (repeatable). Default: meshes that
    /// already carry noise, or every mesh if none does.
    #[arg(long = "noise-mesh")]
    pub meshes: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "irrotational", value_parser = parse_gauge, allow_hyphen_values = true)]
    pub gauge: GaugeArg,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Number of eigenpairs to report.
    #[arg(long, default_value_t = 4)]
    pub eigenpairs: usize,
    /// `[MESH=]START:STOP:COUNT` in Phi0, repeatable; the grid is the
    /// product of all sweeps. Unnamed sweeps bind to meshes in order.
    #[arg(long = "flux-sweep", value_parser = parse_sweep, allow_hyphen_values = true)]
    pub sweeps: Vec<Sweep>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Evaluate flux points on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub basis: BasisArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Retained unperturbed levels.
    #[arg(long, default_value_t = DEFAULT_LEVELS, env = "FLUXQUANT_LEVELS")]
    pub levels: usize,
    /// Total time, ns.
    #[arg(long, default_value_t = 5.0)]
    pub duration: f64,
    /// Time step, ns. Default: half the largest admissible step.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub trajectories: usize,
    #[arg(long, default_value_t = 1, env = "FLUXQUANT_SEED")]
    pub seed: u64,
    /// Fit window start, ns.
    #[arg(long)]
    pub fit_start: Option<f64>,
    /// Fit window end, ns.
    #[arg(long)]
    pub fit_end: Option<f64>,
    /// Run trajectories on one thread.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Initial {
    Excited,
    Superposition,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "irrotational", value_parser = parse_gauge, allow_hyphen_values = true)]
    pub gauge: GaugeArg,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum, default_value_t = Initial::Excited)]
    pub initial: Initial,
    /// Record every this many steps. Default: at most 1000 records.
    #[arg(long)]
    pub record_every: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckGaugeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub run: RunArgs,
    /// z-score bound for the statistical properties.
    #[arg(long, default_value_t = 3.0, env = "FLUXQUANT_Z_THRESHOLD")]
    pub z_threshold: f64,
    /// Relative tolerance for spectrum and element invariance.
    #[arg(long, default_value_t = 1e-9, env = "FLUXQUANT_SPECTRUM_TOL")]
    pub spectrum_tol: f64,
    /// Number of eigenvalues compared across gauges.
    #[arg(long, default_value_t = 4)]
    pub eigenpairs: usize,
    /// Skip the Monte Carlo properties.
    #[arg(long)]
    pub no_simulation: bool,
}

/// Parsed `--gauge` value with its spelling for the report.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeArg {
    pub gauge: Gauge,
    pub text: String,
}

pub fn parse_gauge(s: &str) -> Result<GaugeArg, String> {
    let t = s.trim();
    let gauge = match t {
        "irrotational" | "irr" => Gauge::Irrotational,
        "split" | "inductive-split" => Gauge::InductiveSplit,
        _ if t.starts_with("closure=") => {
            let ids: Vec<String> = t["closure=".len()..]
                .split(',')
                .map(|x| x.trim().to_string())
                .filter(|x| !x.is_empty())
                .collect();
            if ids.is_empty() {
                return Err("closure gauge needs at least one branch id".into());
            }
            Gauge::Closure(ids)
        }
        _ => {
            let parts: Vec<&str> = t.split(',').collect();
            let [a, b] = parts[..] else {
                return Err(format!(
                    "expected irrotational, split, closure=IDS or m_l,m_r; got `{s}`"
                ));
            };
            let m_l: f64 = a.trim().parse().map_err(|_| format!("bad m_l `{a}`"))?;
            let m_r: f64 = b.trim().parse().map_err(|_| format!("bad m_r `{b}`"))?;
            if !m_l.is_finite() || !m_r.is_finite() {
                return Err("gauge pair must be finite".into());
            }
            Gauge::Pair { m_l, m_r }
        }
    };
    Ok(GaugeArg {
        text: gauge.label(),
        gauge,
    })
}

/// One axis of a flux grid, Phi0.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub mesh: Option<String>,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.start + step * k as f64).collect()
    }
}

pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (mesh, range) = match s.split_once('=') {
        Some((m, r)) => (Some(m.trim().to_string()), r),
        None => (None, s),
    };
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected [MESH=]START:STOP:COUNT, got `{s}`"));
    };
    let start: f64 = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
    let stop: f64 = b.trim().parse().map_err(|_| format!("bad stop `{b}`"))?;
    let count: usize = n.trim().parse().map_err(|_| format!("bad count `{n}`"))?;
    if count == 0 {
        return Err("sweep count must be at least 1".into());
    }
    if !start.is_finite() || !stop.is_finite() {
        return Err("sweep bounds must be finite".into());
    }
    Ok(Sweep {
        mesh,
        start,
        stop,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn gauge_spellings() {
        assert_eq!(parse_gauge("irr").unwrap().gauge, Gauge::Irrotational);
        assert_eq!(parse_gauge("0,-1").unwrap().gauge, Gauge::Pair { m_l: 0.0, m_r: -1.0 });
        assert_eq!(
            parse_gauge("closure=j1,j3").unwrap().gauge,
            Gauge::Closure(vec!["j1".into(), "j3".into()])
        );
        assert!(parse_gauge("1,2,3").is_err());
        assert!(parse_gauge("closure=").is_err());
    }

    #[test]
    fn sweep_grid() {
        let s = parse_sweep("left=0:0.5:3").unwrap();
        assert_eq!(s.mesh.as_deref(), Some("left"));
        assert_eq!(s.values(), vec![0.0, 0.25, 0.5]);
        assert_eq!(parse_sweep("-0.1:0.1:1").unwrap().values(), vec![-0.1]);
        assert!(parse_sweep("0:1").is_err());
        assert!(parse_sweep("0:1:0").is_err());
    }
}
