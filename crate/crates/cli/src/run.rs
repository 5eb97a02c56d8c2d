//! `run`, `sweep` and `validate`.

use std::path::Path;

use darwinics::sim::{
    force_history, integrate, ledger_report, scattering_run, IntegrateOptions, LedgerReport, ScatterMode, ScatteringResult,
    Trajectory,
};
use darwinics::Vec3;
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::output::{emit, ensure_dir, Cell, Format, Manifest, OutputFile, Table};
use crate::scenario::{Kind, Mode, Output, Resolved, RunSpec, Scenario, UnitSystem};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: std::path::PathBuf,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub format: Format,
}

/// Loads a scenario and applies the command-line overrides.
pub fn load(path: &Path, opts: &RunOptions) -> CliResult<Scenario> {
    if let Some(t) = opts.tol {
        if !(t > 0.0) {
            return Err(CliError::validation("--tol", format!("must be positive, got {t}")));
        }
    }
    let mut s = Scenario::load(path)?.with_tol(opts.tol);
    if let Some(seed) = opts.seed {
        s.seed = seed;
    }
    Ok(s)
}

fn xyz(table: &mut Table, prefix: &str, unit: &str) {
    for c in ["x", "y", "z"] {
        table.column(format!("{prefix}_{c}"), unit);
    }
}

fn push3(row: &mut Vec<Cell>, v: Vec3, k: f64) {
    row.extend(v.to_array().map(|x| Cell::Num(x * k)));
}

fn trajectory_table(s: &Scenario, traj: &Trajectory) -> Table {
    let u = &s.units;
    let with_bodies = s.outputs.contains(&Output::Trajectory);
    let with_ledger = s.outputs.contains(&Output::Ledger);
    let mut t = Table::default();
    t.column("t", u.label(Kind::Time));
    if with_bodies {
        for b in &traj.bodies {
            xyz(&mut t, &format!("{}_r", b.name), u.label(Kind::Length));
            xyz(&mut t, &format!("{}_v", b.name), u.label(Kind::Velocity));
        }
    }
    if with_ledger {
        for name in ["p_mech", "p_can", "p_field"] {
            xyz(&mut t, name, u.label(Kind::Momentum));
        }
        t.column("energy", u.label(Kind::Energy));
    }
    let (kl, kv, kp, ke) = (u.factor(Kind::Length), u.factor(Kind::Velocity), u.factor(Kind::Momentum), u.factor(Kind::Energy));
    for (i, &time) in traj.times.iter().enumerate() {
        let mut row = vec![Cell::Num(time * u.factor(Kind::Time))];
        if with_bodies {
            for b in &traj.bodies {
                push3(&mut row, b.positions[i], kl);
                push3(&mut row, b.velocities[i], kv);
            }
        }
        if with_ledger {
            let l = &traj.ledger;
            push3(&mut row, l.mechanical[i], kp);
            push3(&mut row, l.canonical[i], kp);
            push3(&mut row, l.field[i], kp);
            row.push(Cell::Num(l.energy[i] * ke));
        }
        t.push(row);
    }
    t
}

fn ledger_summary(u: &UnitSystem, r: &LedgerReport, traj: &Trajectory) -> serde_json::Value {
    let (kp, ke) = (u.factor(Kind::Momentum), u.factor(Kind::Energy));
    let p = |v: Vec3| (v * kp).to_array();
    json!({
        "units": { "momentum": u.label(Kind::Momentum), "energy": u.label(Kind::Energy) },
        "canonical_drift": r.canonical_drift * kp,
        "canonical_drift_rel": r.canonical_drift_rel,
        "energy_drift": r.energy_drift * ke,
        "energy_drift_rel": r.energy_drift_rel,
        "mechanical_change": r.mechanical_change * kp,
        "mechanical_delta": p(r.mechanical_delta),
        "field_delta": p(r.field_delta),
        "balance_residual": r.balance_residual,
        "balance_ratio": r.balance_ratio,
        "steps": traj.stats,
    })
}

fn scattering_columns(u: &UnitSystem, names: &[String]) -> Table {
    let mut t = Table::default();
    t.column("index", u.label(Kind::Dimensionless));
    t.column("mode", "none");
    t.column("scatter", "none");
    t.column("impact_parameter", u.label(Kind::Length));
    t.column("speed", u.label(Kind::Velocity));
    t.column("coupling", u.label(Kind::Dimensionless));
    for n in names {
        xyz(&mut t, &format!("impulse_{n}"), u.label(Kind::Momentum));
    }
    for n in names {
        xyz(&mut t, &format!("displacement_{n}"), u.label(Kind::Length));
    }
    t.column("deflection", u.label(Kind::Angle));
    t.column("impulse_error", u.label(Kind::Momentum));
    t.column("displacement_error", u.label(Kind::Length));
    t
}

struct Point {
    impact_parameter: f64,
    speed: f64,
    coupling: f64,
    mode: Mode,
}

fn scattering_row(u: &UnitSystem, index: usize, p: &Point, r: &ScatteringResult) -> Vec<Cell> {
    let (kp, kl) = (u.factor(Kind::Momentum), u.factor(Kind::Length));
    let scatter = match r.mode {
        ScatterMode::ImpulseApprox => "impulse-approx",
        ScatterMode::Full => "full",
    };
    let mut row = vec![
        Cell::Num(index as f64),
        Cell::Text(p.mode.name().into()),
        Cell::Text(scatter.into()),
        Cell::Num(p.impact_parameter),
        Cell::Num(p.speed),
        Cell::Num(p.coupling),
    ];
    for v in &r.impulses {
        push3(&mut row, *v, kp);
    }
    for v in &r.displacements {
        push3(&mut row, *v, kl);
    }
    row.push(Cell::Num(r.deflection));
    row.push(Cell::Num(r.impulse_error * kp));
    row.push(Cell::Num(r.displacement_error * kl));
    row
}

fn scatter(resolved: &Resolved) -> CliResult<ScatteringResult> {
    let RunSpec::Scattering { mode, .. } = resolved.run else {
        return Err(CliError::validation("run.kind", "expected a scattering run"));
    };
    let setup = resolved.scattering_setup().expect("scattering run");
    scattering_run(&resolved.system, &setup, mode).map_err(|e| CliError::from_run("scattering", e))
}

fn body_names(s: &Scenario) -> Vec<String> {
    s.bodies.iter().map(|b| b.name.clone()).collect()
}

pub fn run(path: &Path, opts: &RunOptions) -> CliResult<()> {
    let scenario = load(path, opts)?;
    if scenario.sweep.is_some() {
        info!("ignoring the sweep block; use `sweep` to run the grid");
    }
    let resolved = scenario.resolve()?;
    ensure_dir(&opts.out)?;
    let u = scenario.units;
    let mut outputs = Vec::new();
    let summary = match resolved.run {
        RunSpec::Trajectory { t_start, t_end, samples } => {
            info!("integrating {} from {t_start} to {t_end}", resolved.system.provider.name());
            let io = IntegrateOptions { ode: resolved.integrator, samples: None }.sampled(t_start, t_end, samples);
            let traj = integrate(&resolved.system, t_start, t_end, &io).map_err(|e| CliError::from_run("integration", e))?;
            let report = ledger_report(&traj).map_err(|e| CliError::from_run("ledger", e))?;
            outputs.push(trajectory_table(&scenario, &traj).write(&opts.out, "trajectory", opts.format)?);
            json!({ "provider": traj.provider, "ledger": ledger_summary(&u, &report, &traj) })
        }
        RunSpec::Scattering { history_samples, .. } => {
            let RunSpec::Scattering { impact_parameter, speed, .. } = scenario.run else { unreachable!() };
            let point = Point {
                impact_parameter,
                speed,
                coupling: 1.0,
                mode: scenario.mode,
            };
            let r = scatter(&resolved)?;
            let mut t = scattering_columns(&u, &body_names(&scenario));
            t.push(scattering_row(&u, 0, &point, &r));
            outputs.push(t.write(&opts.out, "scattering", opts.format)?);
            if scenario.outputs.contains(&Output::Forces) && history_samples >= 2 {
                outputs.push(force_table(&scenario, &resolved, history_samples)?.write(&opts.out, "forces", opts.format)?);
            }
            json!({ "provider": resolved.system.provider, "scattering": t.to_json() })
        }
    };
    write_manifest("run", scenario, outputs, summary, &opts.out)
}

/// Straight-path force on each body over ±20 impact parameters.
fn force_table(s: &Scenario, resolved: &Resolved, samples: usize) -> CliResult<Table> {
    let setup = resolved.scattering_setup().expect("scattering run");
    let half = 20.0 * setup.impact_parameter / setup.speed;
    let times: Vec<f64> = (0..samples).map(|i| -half + 2.0 * half * i as f64 / (samples - 1) as f64).collect();
    let forces = force_history(&resolved.system, &setup, &times).map_err(|e| CliError::from_run("force history", e))?;
    let u = &s.units;
    let mut t = Table::default();
    t.column("t", u.label(Kind::Time));
    for n in body_names(s) {
        xyz(&mut t, &format!("force_{n}"), u.label(Kind::Force));
    }
    let kf = u.factor(Kind::Force);
    for (time, f) in times.iter().zip(forces) {
        let mut row = vec![Cell::Num(*time)];
        push3(&mut row, f[0], kf);
        push3(&mut row, f[1], kf);
        t.push(row);
    }
    Ok(t)
}

fn write_manifest(command: &str, scenario: Scenario, outputs: Vec<OutputFile>, summary: serde_json::Value, out: &Path) -> CliResult<()> {
    let m = Manifest::new(command, scenario, outputs, summary);
    let path = m.write(out)?;
    let mut listing = format!("{}\n", path.display());
    for o in &m.outputs {
        listing.push_str(&format!("{}\n", out.join(&o.file).display()));
    }
    emit(&listing)
}

fn grid_axis(name: &str, list: &Option<Vec<f64>>, base: f64) -> CliResult<Vec<f64>> {
    match list {
        None => Ok(vec![base]),
        Some(v) if v.is_empty() => Err(CliError::validation(&format!("sweep.{name}"), "empty grid")),
        Some(v) => Ok(v.clone()),
    }
}

pub fn sweep(path: &Path, opts: &RunOptions) -> CliResult<()> {
    let scenario = load(path, opts)?;
    let Some(spec) = scenario.sweep.clone() else {
        return Err(CliError::validation("sweep", "the scenario has no sweep block"));
    };
    let RunSpec::Scattering { impact_parameter, speed, .. } = scenario.run else {
        return Err(CliError::validation("run.kind", "sweeps need a scattering run"));
    };
    let bs = grid_axis("impact_parameter", &spec.impact_parameter, impact_parameter)?;
    let vs = grid_axis("speed", &spec.speed, speed)?;
    let ks = grid_axis("coupling", &spec.coupling, 1.0)?;
    let modes = match &spec.modes {
        None => vec![scenario.mode],
        Some(m) if m.is_empty() => return Err(CliError::validation("sweep.modes", "empty grid")),
        Some(m) => m.clone(),
    };
    let mut points = Vec::new();
    for &b in &bs {
        for &v in &vs {
            for &k in &ks {
                for &mode in &modes {
                    points.push(Point { impact_parameter: b, speed: v, coupling: k, mode });
                }
            }
        }
    }
    // resolve everything up front so validation errors come before any work
    let resolved: Vec<Resolved> = points
        .iter()
        .map(|p| {
            let mut s = scenario.clone();
            if let RunSpec::Scattering { impact_parameter, speed, .. } = &mut s.run {
                *impact_parameter = p.impact_parameter;
                *speed = p.speed;
            }
            s.resolve_with(p.mode, p.coupling)
        })
        .collect::<CliResult<_>>()?;
    ensure_dir(&opts.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation("--workers", e.to_string()))?;
    info!("sweeping {} grid points", points.len());
    let results: Vec<ScatteringResult> = pool.install(|| resolved.par_iter().map(scatter).collect::<CliResult<_>>())?;
    let u = scenario.units;
    let mut t = scattering_columns(&u, &body_names(&scenario));
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        t.push(scattering_row(&u, i, p, r));
    }
    let outputs = vec![t.write(&opts.out, "sweep", opts.format)?];
    write_manifest("sweep", scenario, outputs, json!({ "points": points.len() }), &opts.out)
}

/// Parses and checks a scenario, then evaluates the equations of motion at
/// the initial state and at `probes` seeded random perturbations of it.
pub fn validate(path: &Path, opts: &RunOptions, probes: usize) -> CliResult<()> {
    let scenario = load(path, opts)?;
    let resolved = scenario.resolve()?;
    if let Some(spec) = &scenario.sweep {
        for (name, list) in [("impact_parameter", &spec.impact_parameter), ("speed", &spec.speed), ("coupling", &spec.coupling)] {
            grid_axis(name, list, 1.0)?;
        }
        if spec.modes.as_ref().is_some_and(|m| m.is_empty()) {
            return Err(CliError::validation("sweep.modes", "empty grid"));
        }
        for m in spec.modes.iter().flatten() {
            m.provider(scenario.system)?;
        }
    }
    let sys = &resolved.system;
    let y0 = sys.initial_state().map_err(|e| CliError::invalid("bodies", e))?;
    let scale = sys.context.singular_radius * 1e9;
    let speed = sys.bodies.iter().map(|b| b.body.velocity().norm()).fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut dy = vec![0.0; y0.len()];
    let mut evaluated = 0;
    for probe in 0..=probes {
        let mut y = y0.clone();
        if probe > 0 {
            for i in 0..2 {
                for c in 0..2 {
                    y[3 * i + c] += 0.01 * scale * rng.gen_range(-1.0..1.0);
                    y[6 + 3 * i + c] += 0.01 * speed * rng.gen_range(-1.0..1.0);
                }
            }
        }
        match sys.derivative(&y, &mut dy) {
            Ok(()) if dy.iter().all(|x| x.is_finite()) => evaluated += 1,
            Ok(()) => return Err(CliError::Numeric(format!("non-finite derivative at probe {probe}"))),
            Err(e) => return Err(CliError::from_run(&format!("probe {probe}"), e)),
        }
    }
    let report = json!({
        "scenario": path.display().to_string(),
        "system": scenario.system,
        "mode": scenario.mode,
        "provider": sys.provider,
        "probes": evaluated,
        "seed": scenario.seed,
        "status": "ok",
    });
    match opts.format {
        Format::Json => emit(&format!("{report:#}\n")),
        Format::Csv => emit(&format!(
            "ok: {} {} via {} ({evaluated} states evaluated, seed {})\n",
            scenario.system,
            scenario.mode.name(),
            sys.provider.name(),
            scenario.seed
        )),
    }
}
