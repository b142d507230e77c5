// Copyright 2026 The fluxquant Authors
// SPDX-License-Identifier: Apache-2.0

//! Command implementations. Each returns a report and an exit status.

use std::path::Path;

use fluxquant::basis::{BasisSpec, C64};
use fluxquant::hamiltonian::{build_symbolic, SymbolicHamiltonian, TermKind};
use fluxquant::irrotational::{transform_for, Gauge, IrrotationalTransform};
use fluxquant::netlist::{parse_netlist, validate, CircuitNetlist, FluxDrive};
use fluxquant::noise::{NoiseSpec, DEFAULT_BAND_FACTOR};
use fluxquant::noisesim::{
    drive_element, max_time_step, offset_target, two_level_prediction, InitialState, NoiseSimResult,
    SimulationSettings, Simulator,
};
use fluxquant::par::{map_indexed, Execution};
use fluxquant::spectrum::{dephasing_envelope, flux_derivative_element, t1_rate, NumericModel, Spectrum};
use fluxquant::units::{angular_to_ghz, flux_to_phase};
use fluxquant::Error;

use crate::args::{
    parse_gauge, BasisArgs, CheckGaugeArgs, Common, GaugeArg, Initial, NoiseArgs, QuantizeArgs, RunArgs, SimulateArgs,
    SpectrumArgs, Sweep,
};
use crate::report::{col, Column, Report, Value};

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

const DIMENSIONLESS: &str = "dimensionless";
const COUNT: &str = "count";

/// A failed run: exit status and a message naming the failing operation.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

/// Exit status for a library error.
pub fn classify(e: &Error) -> u8 {
    match e {
        Error::IllConditioned { .. }
        | Error::SingularTransform
        | Error::RankDeficient { .. }
        | Error::EmptyFitWindow { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn op(name: &'static str) -> impl Fn(Error) -> Failure {
    move |e| Failure {
        code: classify(&e),
        message: format!("{name}: {e}"),
    }
}

pub struct Outcome {
    pub report: Report,
    pub code: u8,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Self { report, code: 0 }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load(path: &Path) -> Result<CircuitNetlist, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("reading netlist `{}`: {e}", path.display())))?;
    let netlist = parse_netlist(&text)
        .map_err(|e| Failure::validation(format!("netlist::parse_netlist: `{}`: {e}", path.display())))?;
    check(&netlist, path)?;
    Ok(netlist)
}

fn check(netlist: &CircuitNetlist, path: &Path) -> Result<(), Failure> {
    let violations = validate(netlist);
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = violations
        .iter()
        .map(|v| format!("netlist::validate: `{}`: {}", path.display(), v.message))
        .collect();
    Err(Failure::validation(lines.join("\n")))
}

fn positive(name: &str, x: f64) -> Result<(), Failure> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Failure::validation(format!(
            "invalid --{name}: must be positive, got {x}"
        )))
    }
}

/// Applies noise overrides to the selected meshes, then revalidates.
fn apply_noise(netlist: &mut CircuitNetlist, args: &NoiseArgs, path: &Path) -> Result<(), Failure> {
    for (name, v) in [
        ("sigma", args.sigma),
        ("tc", args.tc),
        ("band-factor", args.band_factor),
    ] {
        if let Some(x) = v {
            if name == "sigma" {
                if !(x.is_finite() && x >= 0.0) {
                    return Err(Failure::validation(format!(
                        "invalid --sigma: must be non-negative, got {x}"
                    )));
                }
            } else {
                positive(name, x)?;
            }
        }
    }
    if args.modes == Some(0) {
        return Err(Failure::validation("invalid --modes: must be at least 1"));
    }
    let targets: Vec<usize> = if args.meshes.is_empty() {
        let noisy: Vec<usize> = (0..netlist.mesh_count())
            .filter(|&j| netlist.meshes[j].drive.noise.is_some())
            .collect();
        if noisy.is_empty() {
            (0..netlist.mesh_count()).collect()
        } else {
            noisy
        }
    } else {
        args.meshes
            .iter()
            .map(|id| {
                netlist
                    .mesh_index(id)
                    .ok_or_else(|| Failure::validation(format!("invalid --noise-mesh: unknown mesh `{id}`")))
            })
            .collect::<Result<_, _>>()?
    };
    let touched = args.sigma.is_some() || args.tc.is_some() || args.band_factor.is_some() || args.modes.is_some();
    if !touched {
        return Ok(());
    }
    for j in targets {
        let mesh = &mut netlist.meshes[j];
        let base = match (mesh.drive.noise, args.sigma, args.tc) {
            (Some(n), _, _) => n,
            (None, Some(s), Some(t)) => NoiseSpec::new(s, t),
            (None, _, _) => {
                return Err(Failure::validation(format!(
                    "mesh `{}` has no noise; give both --sigma and --tc",
                    mesh.id
                )))
            }
        };
        let factor = args.band_factor.unwrap_or(if mesh.drive.noise.is_some() {
            base.band_limit * base.t_c
        } else {
            DEFAULT_BAND_FACTOR
        });
        let t_c = args.tc.unwrap_or(base.t_c);
        let n = NoiseSpec::new(args.sigma.unwrap_or(base.sigma), t_c)
            .with_band_limit(factor / t_c)
            .with_mode_count(args.modes.unwrap_or(base.mode_count));
        mesh.drive.noise = Some(n);
    }
    check(netlist, path)
}

fn common_config(r: &mut Report, command: &str, common: &Common, netlist: &CircuitNetlist, gauge: Option<&str>) {
    let mut p = r.pairs("config");
    p.text("command", command)
        .text("netlist", common.netlist.display().to_string())
        .text("circuit", netlist.name.clone());
    if let Some(g) = gauge {
        p.text("gauge", g);
    }
    p.text("format", common.format.name())
        .add("aux_epsilon", common.aux_epsilon, "fF");
    for m in &netlist.meshes {
        p.add(format!("flux.{}", m.id), m.drive.static_value, "Phi0");
        if let Some(n) = m.drive.noise {
            p.add(format!("noise.{}.sigma", m.id), n.sigma, "Phi0")
                .add(format!("noise.{}.tc", m.id), n.t_c, "ns")
                .add(format!("noise.{}.band_limit", m.id), n.band_limit, "rad/ns")
                .add(format!("noise.{}.modes", m.id), n.mode_count, COUNT);
        }
    }
}

fn basis_config(r: &mut Report, b: &BasisArgs) {
    r.pairs("basis")
        .add("charge_cutoff", b.charge_cutoff, COUNT)
        .add("oscillator_levels", b.oscillator_levels, COUNT);
}

fn transform(netlist: &CircuitNetlist, gauge: &Gauge, aux: f64) -> Result<IrrotationalTransform, Failure> {
    positive("aux-epsilon", aux)?;
    transform_for(netlist, gauge, aux).map_err(op("irrotational::transform_for"))
}

fn symbolic(netlist: &CircuitNetlist, t: &IrrotationalTransform) -> Result<SymbolicHamiltonian, Failure> {
    build_symbolic(netlist, t).map_err(op("hamiltonian::build_symbolic"))
}

fn numeric(netlist: &CircuitNetlist, gauge: &Gauge, aux: f64, b: &BasisArgs) -> Result<NumericModel, Failure> {
    let t = transform(netlist, gauge, aux)?;
    let h = symbolic(netlist, &t)?;
    let basis = BasisSpec::auto(&h, b.charge_cutoff, b.oscillator_levels);
    NumericModel::new(&h, &basis).map_err(op("spectrum::NumericModel::new"))
}

fn noises(netlist: &CircuitNetlist) -> Vec<Option<NoiseSpec>> {
    netlist.meshes.iter().map(|m| m.drive.noise).collect()
}

fn drives(netlist: &CircuitNetlist) -> Vec<FluxDrive> {
    netlist.meshes.iter().map(|m| m.drive.clone()).collect()
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

// ---------------------------------------------------------------------------
// quantize
// ---------------------------------------------------------------------------

fn matrix_table(
    m: &nalgebra::DMatrix<f64>,
    row_labels: &[String],
    col_labels: &[String],
    unit: &'static str,
) -> (Vec<Column>, Vec<(String, Vec<Value>)>) {
    let columns = col_labels.iter().map(|c| col(c.clone(), unit)).collect();
    let rows = (0..m.nrows())
        .map(|i| {
            (
                row_labels[i].clone(),
                (0..m.ncols()).map(|j| Value::Num(m[(i, j)])).collect(),
            )
        })
        .collect();
    (columns, rows)
}

fn dof_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("phi{i}")).collect()
}

pub fn quantize(args: &QuantizeArgs) -> Result<Outcome, Failure> {
    let netlist = load(&args.common.netlist)?;
    let t = transform(&netlist, &args.gauge.gauge, args.common.aux_epsilon)?;
    let h = symbolic(&netlist, &t)?;
    let mut r = Report::new();
    common_config(&mut r, "quantize", &args.common, &netlist, Some(&args.gauge.text));

    let branches: Vec<String> = netlist.branches.iter().map(|b| b.id.clone()).collect();
    let meshes: Vec<String> = netlist.meshes.iter().map(|m| m.id.clone()).collect();
    let dofs = dof_labels(t.dofs());
    r.pairs("circuit")
        .add("branches", t.branches(), COUNT)
        .add("meshes", t.meshes(), COUNT)
        .add("dofs", t.dofs(), COUNT)
        .add("irrotational_residual", t.irrotational_residual(), DIMENSIONLESS);

    let mut rows = dofs.clone();
    rows.extend(meshes.iter().map(|m| format!("mesh.{m}")));
    let (c, v) = matrix_table(&t.m_plus, &rows, &branches, DIMENSIONLESS);
    r.table("transform", c, v);
    let (c, v) = matrix_table(&t.m_plus_inv, &branches, &rows, DIMENSIONLESS);
    r.table("transform_inverse", c, v);
    let (c, v) = matrix_table(&t.c_eff, &rows, &rows, "fF");
    r.table("effective_capacitance", c, v);
    let charge_labels: Vec<String> = (1..=t.dofs()).map(|i| format!("n{i}")).collect();
    let (c, v) = matrix_table(&h.charging_ghz(), &charge_labels, &charge_labels, "GHz");
    r.table("charging", c, v);

    let mut columns = vec![col("kind", ""), col("branch", ""), col("energy", "GHz")];
    columns.extend(dofs.iter().map(|d| col(format!("coeff.{d}"), DIMENSIONLESS)));
    columns.extend(meshes.iter().map(|m| col(format!("flux_weight.{m}"), DIMENSIONLESS)));
    columns.push(col("expression", ""));
    let rows = h
        .terms
        .iter()
        .enumerate()
        .map(|(i, term)| {
            let mut v: Vec<Value> = vec![
                match term.kind {
                    TermKind::Cosine => "cosine".into(),
                    TermKind::Quadratic => "quadratic".into(),
                },
                term.branch.as_str().into(),
                term.energy_ghz().into(),
            ];
            v.extend(term.dof_coeffs.iter().map(|&x| Value::Num(x)));
            v.extend(term.flux_weights.iter().map(|&x| Value::Num(x)));
            v.push(term.to_string().into());
            ((i + 1).to_string(), v)
        })
        .collect();
    r.table("terms", columns, rows);
    let (c, v) = matrix_table(&h.drive_coupling, &dofs, &meshes, DIMENSIONLESS);
    r.table("drive_coupling", c, v);
    Ok(Outcome::ok(r))
}

// ---------------------------------------------------------------------------
// spectrum and rates
// ---------------------------------------------------------------------------

/// Flux grid over all meshes (Phi0), first sweep outermost.
fn flux_grid(netlist: &CircuitNetlist, sweeps: &[Sweep]) -> Result<Vec<Vec<f64>>, Failure> {
    let n = netlist.mesh_count();
    let mut axes: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut bound = vec![false; n];
    for s in sweeps.iter().filter(|s| s.mesh.is_some()) {
        let id = s.mesh.as_deref().unwrap_or_default();
        let j = netlist
            .mesh_index(id)
            .ok_or_else(|| Failure::validation(format!("invalid --flux-sweep: unknown mesh `{id}`")))?;
        if bound[j] {
            return Err(Failure::validation(format!(
                "invalid --flux-sweep: mesh `{id}` swept twice"
            )));
        }
        bound[j] = true;
    }
    for s in sweeps {
        let j = match &s.mesh {
            Some(id) => netlist.mesh_index(id).unwrap_or_default(),
            None => {
                let j = (0..n).find(|&j| !bound[j]).ok_or_else(|| {
                    Failure::validation(format!("invalid --flux-sweep: more sweeps than the {n} meshes"))
                })?;
                bound[j] = true;
                j
            }
        };
        axes.push((j, s.values()));
    }
    let base: Vec<f64> = netlist.meshes.iter().map(|m| m.drive.static_value).collect();
    let mut grid = vec![base];
    for (j, values) in &axes {
        grid = grid
            .iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q[*j] = v;
                    q
                })
            })
            .collect();
    }
    Ok(grid)
}

struct Prepared {
    netlist: CircuitNetlist,
    model: NumericModel,
    grid: Vec<Vec<f64>>,
    spectra: Vec<Spectrum>,
}

fn prepare(args: &SpectrumArgs, command: &str, r: &mut Report, pairs: usize) -> Result<Prepared, Failure> {
    let mut netlist = load(&args.common.netlist)?;
    apply_noise(&mut netlist, &args.noise, &args.common.netlist)?;
    let grid = flux_grid(&netlist, &args.sweeps)?;
    if pairs < 2 {
        return Err(Failure::validation(format!(
            "invalid --eigenpairs: need at least 2, got {pairs}"
        )));
    }
    let model = numeric(&netlist, &args.gauge.gauge, args.common.aux_epsilon, &args.basis)?;
    if pairs > model.dimension {
        return Err(op("spectrum::Spectrum::compute")(Error::TooManyEigenpairs {
            requested: pairs,
            dimension: model.dimension,
        }));
    }
    common_config(r, command, &args.common, &netlist, Some(&args.gauge.text));
    basis_config(r, &args.basis);
    r.pairs("grid")
        .add("points", grid.len(), COUNT)
        .add("eigenpairs", pairs, COUNT)
        .add("dimension", model.dimension, COUNT);
    let spectra = map_indexed(execution(args.sequential), grid.len(), |i| {
        let phases: Vec<f64> = grid[i].iter().map(|&f| flux_to_phase(f)).collect();
        Spectrum::compute(&model, &phases, pairs)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(op("spectrum::Spectrum::compute"))?;
    Ok(Prepared {
        netlist,
        model,
        grid,
        spectra,
    })
}

fn flux_columns(netlist: &CircuitNetlist) -> Vec<Column> {
    netlist
        .meshes
        .iter()
        .map(|m| col(format!("flux.{}", m.id), "Phi0"))
        .collect()
}

pub fn spectrum(args: &SpectrumArgs) -> Result<Outcome, Failure> {
    let mut r = Report::new();
    let p = prepare(args, "spectrum", &mut r, args.eigenpairs)?;
    let mut columns = flux_columns(&p.netlist);
    columns.extend((0..args.eigenpairs).map(|k| col(format!("E{k}"), "GHz")));
    columns.push(col("omega_eg", "GHz"));
    columns.extend((1..=p.model.dofs()).map(|d| col(format!("n_ge.{d}"), DIMENSIONLESS)));
    columns.extend(p.netlist.meshes.iter().map(|m| col(format!("d.{}", m.id), "GHz/Phi0")));
    let mut rows = Vec::with_capacity(p.grid.len());
    for (i, (flux, s)) in p.grid.iter().zip(&p.spectra).enumerate() {
        let mut v: Vec<Value> = flux.iter().map(|&x| x.into()).collect();
        v.extend(s.eigenvalues.iter().map(|&e| Value::Num(angular_to_ghz(e))));
        v.push(angular_to_ghz(s.omega_eg).into());
        v.extend(s.elements.n_ge.iter().map(|z| Value::Num(z.norm())));
        v.extend(s.elements.flux_derivative.iter().map(|z| Value::Num(z.norm())));
        rows.push(((i + 1).to_string(), v));
    }
    r.table("points", columns, rows);
    Ok(Outcome::ok(r))
}

/// `|d + iωc|`, the frame-independent relaxation element of one mesh.
fn invariant_element(model: &NumericModel, s: &Spectrum, mesh: usize) -> Result<(C64, C64, C64), Failure> {
    let d = flux_derivative_element(model, s, mesh).map_err(op("spectrum::flux_derivative_element"))?;
    let c = drive_element(&model.drive, &s.elements.n_ge, mesh);
    Ok((d, c, d + C64::new(0.0, s.omega_eg) * c))
}

pub fn rates(args: &SpectrumArgs) -> Result<Outcome, Failure> {
    let mut r = Report::new();
    let p = prepare(args, "rates", &mut r, args.eigenpairs.max(2))?;
    let noise = noises(&p.netlist);
    let noisy: Vec<usize> = (0..noise.len()).filter(|&j| noise[j].is_some()).collect();
    if noisy.is_empty() {
        return Err(Failure::validation(
            "rates: no mesh carries noise; add a noise clause or give --sigma and --tc",
        ));
    }
    let mut columns = flux_columns(&p.netlist);
    columns.push(col("omega_eg", "GHz"));
    for &j in &noisy {
        let id = &p.netlist.meshes[j].id;
        columns.extend([
            col(format!("d.{id}"), "GHz/Phi0"),
            col(format!("c.{id}"), DIMENSIONLESS),
            col(format!("gamma1.{id}"), "1/ns"),
            col(format!("gamma1_naive.{id}"), "1/ns"),
            col(format!("slope.{id}"), "GHz/Phi0"),
        ]);
    }
    columns.extend([
        col("gamma1", "1/ns"),
        col("gamma_phi", "1/ns"),
        col("static_factor", DIMENSIONLESS),
        col("t1", "ns"),
        col("t2", "ns"),
    ]);
    let mut rows = Vec::with_capacity(p.grid.len());
    for (i, (flux, s)) in p.grid.iter().zip(&p.spectra).enumerate() {
        let mut v: Vec<Value> = flux.iter().map(|&x| x.into()).collect();
        v.push(angular_to_ghz(s.omega_eg).into());
        let env = dephasing_envelope(&p.model, s, &noise).map_err(op("spectrum::dephasing_envelope"))?;
        let mut gamma1 = 0.0;
        for &j in &noisy {
            let n = noise[j].expect("noisy mesh");
            let (d, c, inv) = invariant_element(&p.model, s, j)?;
            let g = t1_rate(inv, &n, s.omega_eg);
            gamma1 += g;
            v.extend([
                Value::Num(d.norm()),
                Value::Num(c.norm()),
                Value::Num(g),
                Value::Num(t1_rate(d, &n, s.omega_eg)),
                Value::Num(env.slopes[j]),
            ]);
        }
        let t2 = 1.0 / (0.5 * gamma1 + env.rate);
        v.extend([
            Value::Num(gamma1),
            Value::Num(env.rate),
            Value::Num(env.static_factor),
            Value::Num(1.0 / gamma1),
            Value::Num(t2),
        ]);
        rows.push(((i + 1).to_string(), v));
    }
    r.table("points", columns, rows);
    Ok(Outcome::ok(r))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimRun {
    result: NoiseSimResult,
    dt: f64,
    /// Golden-rule rate from the frame-independent element, 1/ns.
    gamma1: f64,
    /// `Σ_j 2|c_j|²σ_φj²` with `c` built from irrotational eigenstates.
    offset_target: f64,
    /// Two-level expectation on the recorded times (single noisy mesh, no tones).
    two_level: Option<Vec<f64>>,
    omega_eg: f64,
}

fn validate_run(run: &RunArgs) -> Result<(), Failure> {
    positive("duration", run.duration)?;
    if let Some(dt) = run.dt {
        positive("dt", dt)?;
    }
    if run.levels < 2 {
        return Err(Failure::validation(format!(
            "invalid --levels: need at least 2, got {}",
            run.levels
        )));
    }
    for (name, v) in [("fit-start", run.fit_start), ("fit-end", run.fit_end)] {
        if let Some(x) = v {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Failure::validation(format!(
                    "invalid --{name}: must be non-negative, got {x}"
                )));
            }
        }
    }
    Ok(())
}

fn default_dt(netlist: &CircuitNetlist) -> Result<f64, Failure> {
    netlist
        .meshes
        .iter()
        .filter_map(|m| m.drive.noise.as_ref())
        .map(|n| 0.5 * max_time_step(n))
        .reduce(f64::min)
        .ok_or_else(|| {
            Failure::validation("simulate: no mesh carries noise; add a noise clause or give --sigma and --tc")
        })
}

fn run_gauge(
    netlist: &CircuitNetlist,
    gauge: &Gauge,
    aux: f64,
    run: &RunArgs,
    initial: InitialState,
    record_every: Option<usize>,
) -> Result<SimRun, Failure> {
    let dt = match run.dt {
        Some(dt) => dt,
        None => default_dt(netlist)?,
    };
    let noise = noises(netlist);
    let phases = netlist.static_phases();
    let model = numeric(netlist, gauge, aux, &run.basis)?;
    let irr = numeric(netlist, &Gauge::Irrotational, aux, &run.basis)?;
    if model.dofs() != irr.dofs() {
        return Err(Failure::validation(format!(
            "simulate: gauge `{}` has {} dofs, the irrotational frame has {}",
            gauge.label(),
            model.dofs(),
            irr.dofs()
        )));
    }
    if run.levels > model.dimension {
        return Err(Failure::validation(format!(
            "invalid --levels: {} exceeds the basis dimension {}",
            run.levels, model.dimension
        )));
    }
    let s = Spectrum::compute(&model, &phases, 2).map_err(op("spectrum::Spectrum::compute"))?;
    let s_irr = Spectrum::compute(&irr, &phases, 2).map_err(op("spectrum::Spectrum::compute"))?;
    let mut gamma1 = 0.0;
    let mut target = 0.0;
    for (j, n) in noise.iter().enumerate() {
        if let Some(n) = n {
            let (_, _, inv) = invariant_element(&model, &s, j)?;
            gamma1 += t1_rate(inv, n, s.omega_eg);
            target += offset_target(drive_element(&model.drive, &s_irr.elements.n_ge, j), n);
        }
    }

    let drives = drives(netlist);
    let sim = Simulator::for_model(&model, &drives, Some(run.levels)).map_err(op("noisesim::Simulator::new"))?;
    let mut settings = SimulationSettings::new(run.duration, dt, run.trajectories, run.seed);
    settings.record_every = record_every;
    settings.initial = initial;
    settings.fit_start = run.fit_start;
    settings.fit_end = run.fit_end;
    settings.execution = execution(run.sequential);
    let result = sim
        .run(&settings)
        .map_err(op("noisesim::averaged_transition_probability"))?;

    let noisy: Vec<usize> = (0..noise.len()).filter(|&j| noise[j].is_some()).collect();
    let toneless = drives.iter().all(|d| d.tones.is_empty());
    let two_level = match noisy[..] {
        [j] if toneless && settings.initial == InitialState::Excited => {
            let synths = sim
                .synthesizers(run.duration, dt)
                .map_err(op("noisesim::NoiseSynth::new"))?;
            let synth = synths[j].as_ref().expect("noisy mesh has a synthesizer");
            let d = flux_derivative_element(&model, &s, j).map_err(op("spectrum::flux_derivative_element"))?;
            let c = drive_element(&model.drive, &s.elements.n_ge, j);
            Some(two_level_prediction(d, c, s.omega_eg, synth, &result.times))
        }
        _ => None,
    };
    Ok(SimRun {
        omega_eg: s.omega_eg,
        result,
        dt,
        gamma1,
        offset_target: target,
        two_level,
    })
}

fn run_config(r: &mut Report, run: &RunArgs, dt: f64) {
    basis_config(r, &run.basis);
    let mut p = r.pairs("run");
    p.add("levels", run.levels, COUNT)
        .add("duration", run.duration, "ns")
        .add("dt", dt, "ns")
        .add("trajectories", run.trajectories, COUNT)
        .add("seed", run.seed as usize, COUNT);
    if let Some(x) = run.fit_start {
        p.add("fit_start", x, "ns");
    }
    if let Some(x) = run.fit_end {
        p.add("fit_end", x, "ns");
    }
}

fn z(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY * diff.signum()
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, Failure> {
    validate_run(&args.run)?;
    let mut netlist = load(&args.common.netlist)?;
    apply_noise(&mut netlist, &args.run.noise, &args.common.netlist)?;
    let initial = match args.initial {
        Initial::Excited => InitialState::Excited,
        Initial::Superposition => InitialState::Superposition,
    };
    let out = run_gauge(
        &netlist,
        &args.gauge.gauge,
        args.common.aux_epsilon,
        &args.run,
        initial,
        args.record_every,
    )?;
    let mut r = Report::new();
    common_config(&mut r, "simulate", &args.common, &netlist, Some(&args.gauge.text));
    run_config(&mut r, &args.run, out.dt);
    let res = &out.result;
    let fit = &res.fit;
    let mut p = r.pairs("summary");
    p.add("omega_eg", angular_to_ghz(out.omega_eg), "GHz")
        .add("trajectories", res.trajectory_count, COUNT)
        .add("fit_start", fit.window.0, "ns")
        .add("fit_end", fit.window.1, "ns")
        .add("fit_points", fit.points, COUNT)
        .add("slope", fit.slope, "1/ns")
        .add("slope_se", fit.slope_se, "1/ns")
        .add("offset", fit.offset, DIMENSIONLESS)
        .add("offset_se", fit.offset_se, DIMENSIONLESS)
        .add("slope_target", out.gamma1, "1/ns")
        .add("slope_z", z(fit.slope - out.gamma1, fit.slope_se), DIMENSIONLESS)
        .add("offset_target", out.offset_target, DIMENSIONLESS)
        .add(
            "offset_z",
            z(fit.offset - out.offset_target, fit.offset_se),
            DIMENSIONLESS,
        )
        .add("max_norm_drift", res.max_norm_drift, DIMENSIONLESS);
    if let Some(pred) = &out.two_level {
        if let Ok((s, o, _)) = fluxquant::noisesim::fit_line(&res.times, pred, fit.window.0, fit.window.1) {
            p.add("two_level_slope", s, "1/ns")
                .add("two_level_offset", o, DIMENSIONLESS);
        }
    }
    let mut columns = vec![
        col("t", "ns"),
        col("avg_prob", DIMENSIONLESS),
        col("stderr", DIMENSIONLESS),
        col("transition", DIMENSIONLESS),
        col("coherence", DIMENSIONLESS),
    ];
    if out.two_level.is_some() {
        columns.push(col("two_level", DIMENSIONLESS));
    }
    let rows = (0..res.times.len())
        .map(|k| {
            let mut v = vec![
                Value::Num(res.times[k]),
                Value::Num(res.avg_prob[k]),
                Value::Num(res.stderr[k]),
                Value::Num(res.transition[k]),
                Value::Num(res.coherence[k]),
            ];
            if let Some(pred) = &out.two_level {
                v.push(Value::Num(pred[k]));
            }
            v
        })
        .collect();
    r.csv("curve", columns, rows);
    Ok(Outcome::ok(r))
}

// ---------------------------------------------------------------------------
// check-gauge
// ---------------------------------------------------------------------------

/// Frames compared by `check-gauge`.
fn gauge_family(netlist: &CircuitNetlist) -> Vec<GaugeArg> {
    let mut out = vec![parse_gauge("irrotational").expect("known spelling")];
    if netlist.mesh_count() == 1 && netlist.meshes[0].members.len() == 2 {
        out.push(parse_gauge("1,0").expect("known spelling"));
        out.push(parse_gauge("0,-1").expect("known spelling"));
        return out;
    }
    for pick in [0usize, usize::MAX] {
        let ids: Vec<String> = netlist
            .meshes
            .iter()
            .map(|m| {
                let k = pick.min(m.members.len() - 1);
                m.members[k].branch.clone()
            })
            .collect();
        let mut unique = ids.clone();
        unique.sort();
        unique.dedup();
        if unique.len() == ids.len() {
            let g = Gauge::Closure(ids);
            if !out.iter().any(|a| a.gauge == g) {
                out.push(GaugeArg {
                    text: g.label(),
                    gauge: g,
                });
            }
        }
    }
    out
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn check_gauge(args: &CheckGaugeArgs) -> Result<Outcome, Failure> {
    validate_run(&args.run)?;
    positive("z-threshold", args.z_threshold)?;
    positive("spectrum-tol", args.spectrum_tol)?;
    let mut netlist = load(&args.common.netlist)?;
    apply_noise(&mut netlist, &args.run.noise, &args.common.netlist)?;
    let family = gauge_family(&netlist);
    let aux = args.common.aux_epsilon;
    let phases = netlist.static_phases();
    let noise = noises(&netlist);
    let simulate = !args.no_simulation && noise.iter().any(Option::is_some);
    let dt = match (args.run.dt, simulate) {
        (Some(dt), _) => dt,
        (None, true) => default_dt(&netlist)?,
        (None, false) => 0.0,
    };

    let mut spectra = Vec::new();
    for g in &family {
        let model = numeric(&netlist, &g.gauge, aux, &args.run.basis)?;
        if args.eigenpairs < 2 || args.eigenpairs > model.dimension {
            return Err(Failure::validation(format!(
                "invalid --eigenpairs: need 2..={}, got {}",
                model.dimension, args.eigenpairs
            )));
        }
        let s = Spectrum::compute(&model, &phases, args.eigenpairs).map_err(op("spectrum::Spectrum::compute"))?;
        let elements = (0..model.meshes())
            .map(|j| invariant_element(&model, &s, j).map(|e| e.2.norm()))
            .collect::<Result<Vec<_>, _>>()?;
        spectra.push((s, elements));
    }
    let runs = if simulate {
        let mut v = Vec::new();
        for g in &family {
            v.push(run_gauge(
                &netlist,
                &g.gauge,
                aux,
                &args.run,
                InitialState::Excited,
                None,
            )?);
        }
        v
    } else {
        Vec::new()
    };

    let mut r = Report::new();
    common_config(&mut r, "check-gauge", &args.common, &netlist, None);
    run_config(&mut r, &args.run, dt);
    r.pairs("tolerances")
        .add("z_threshold", args.z_threshold, DIMENSIONLESS)
        .add("spectrum_tol", args.spectrum_tol, DIMENSIONLESS)
        .add("eigenpairs", args.eigenpairs, COUNT);

    let mut columns = vec![col("gauge", ""), col("omega_eg", "GHz")];
    columns.extend(
        netlist
            .meshes
            .iter()
            .map(|m| col(format!("element.{}", m.id), "GHz/Phi0")),
    );
    if simulate {
        columns.extend([
            col("slope", "1/ns"),
            col("slope_se", "1/ns"),
            col("slope_target", "1/ns"),
            col("offset", DIMENSIONLESS),
            col("offset_se", DIMENSIONLESS),
            col("offset_target", DIMENSIONLESS),
        ]);
    }
    let rows = family
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let (s, el) = &spectra[i];
            let mut v: Vec<Value> = vec![g.text.clone().into(), angular_to_ghz(s.omega_eg).into()];
            v.extend(el.iter().map(|&x| Value::Num(x)));
            if let Some(run) = runs.get(i) {
                let f = &run.result.fit;
                v.extend([
                    Value::Num(f.slope),
                    Value::Num(f.slope_se),
                    Value::Num(run.gamma1),
                    Value::Num(f.offset),
                    Value::Num(f.offset_se),
                    Value::Num(run.offset_target),
                ]);
            }
            ((i + 1).to_string(), v)
        })
        .collect();
    r.table("gauges", columns, rows);

    let reference = &spectra[0];
    let scale = reference.0.transitions().iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut spectrum_dev: f64 = 0.0;
    let mut element_dev: f64 = 0.0;
    for (s, el) in &spectra[1..] {
        for (a, b) in s.transitions().iter().zip(reference.0.transitions()) {
            spectrum_dev = spectrum_dev.max((a - b).abs() / scale);
        }
        for (a, b) in el.iter().zip(&reference.1) {
            element_dev = element_dev.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut all = true;
    let mut p = r.pairs("properties");
    let pass = spectrum_dev <= args.spectrum_tol;
    all &= pass;
    p.text("spectrum_invariance", verdict(pass))
        .add("spectrum_invariance.deviation", spectrum_dev, DIMENSIONLESS);
    let pass = element_dev <= args.spectrum_tol;
    all &= pass;
    p.text("element_invariance", verdict(pass))
        .add("element_invariance.deviation", element_dev, DIMENSIONLESS);
    if simulate {
        let mut worst: f64 = 0.0;
        for a in 0..runs.len() {
            for b in a + 1..runs.len() {
                let (fa, fb) = (&runs[a].result.fit, &runs[b].result.fit);
                let se = (fa.slope_se.powi(2) + fb.slope_se.powi(2)).sqrt();
                worst = worst.max(z(fa.slope - fb.slope, se).abs());
            }
        }
        let pass = worst <= args.z_threshold;
        all &= pass;
        p.text("slope_invariance", verdict(pass))
            .add("slope_invariance.max_z", worst, DIMENSIONLESS);
        let worst = runs
            .iter()
            .map(|x| z(x.result.fit.slope - x.gamma1, x.result.fit.slope_se).abs())
            .fold(0.0, f64::max);
        let pass = worst <= args.z_threshold;
        all &= pass;
        p.text("slope_golden_rule", verdict(pass))
            .add("slope_golden_rule.max_z", worst, DIMENSIONLESS);
        for (g, x) in family.iter().zip(&runs) {
            let zz = z(x.result.fit.offset - x.offset_target, x.result.fit.offset_se).abs();
            let pass = zz <= args.z_threshold;
            all &= pass;
            p.text(format!("offset_law.{}", g.text), verdict(pass)).add(
                format!("offset_law.{}.z", g.text),
                zz,
                DIMENSIONLESS,
            );
        }
    } else {
        p.text("slope_invariance", "SKIPPED")
            .text("slope_golden_rule", "SKIPPED")
            .text("offset_law", "SKIPPED");
    }
    p.text("overall", verdict(all));
    Ok(Outcome {
        report: r,
        code: if all { 0 } else { EXIT_NUMERICAL },
    })
}
