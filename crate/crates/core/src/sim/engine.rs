//! Trajectory integration and conservation summaries.

use serde::{Deserialize, Serialize};

use super::integrator::{solve, OdeConfig, OdeStats};
use super::system::{DynamicalSystem, LedgerPoint, Provider};
use crate::error::{Error, Result};
use crate::vector::Vec3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BodySeries {
    pub name: String,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerSeries {
    pub mechanical: Vec<Vec3>,
    pub canonical: Vec<Vec3>,
    pub field: Vec<Vec3>,
    pub energy: Vec<f64>,
}

impl LedgerSeries {
    fn push(&mut self, p: LedgerPoint) {
        self.mechanical.push(p.mechanical);
        self.canonical.push(p.canonical);
        self.field.push(p.field);
        self.energy.push(p.energy);
    }
}

/// Largest ledger excursions seen over all accepted steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepExtremes {
    pub canonical: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub provider: Provider,
    pub times: Vec<f64>,
    pub bodies: Vec<BodySeries>,
    pub ledger: LedgerSeries,
    pub stats: OdeStats,
    pub step_extremes: StepExtremes,
    /// Packed state at the last sample.
    pub final_state: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrateOptions {
    pub ode: OdeConfig,
    /// Sample times; every accepted step when absent.
    pub samples: Option<Vec<f64>>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions { ode: OdeConfig::default(), samples: None }
    }
}

impl IntegrateOptions {
    pub fn with_tol(tol: f64) -> Self {
        IntegrateOptions { ode: OdeConfig::with_tol(tol), samples: None }
    }

    /// `count` evenly spaced samples over [t0, t1] (inclusive).
    pub fn sampled(mut self, t0: f64, t1: f64, count: usize) -> Self {
        let n = count.max(2);
        self.samples = Some((0..n).map(|i| if i + 1 == n { t1 } else { t0 + (t1 - t0) * i as f64 / (n - 1) as f64 }).collect());
        self
    }
}

pub fn integrate(sys: &DynamicalSystem, t0: f64, t1: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    let y0 = sys.initial_state()?;
    let origin = sys.ledger(&y0)?;
    let mut extremes = StepExtremes::default();
    let sol = solve(
        |_, y, dy| sys.derivative(y, dy),
        t0,
        &y0,
        t1,
        opts.samples.as_deref(),
        &opts.ode,
        |_, y| {
            let p = sys.ledger(y)?;
            extremes.canonical = extremes.canonical.max((p.canonical - origin.canonical).norm());
            extremes.energy = extremes.energy.max((p.energy - origin.energy).abs());
            Ok(())
        },
    )?;
    let mut bodies: Vec<BodySeries> = sys
        .bodies
        .iter()
        .map(|b| BodySeries { name: b.name.clone(), positions: Vec::new(), velocities: Vec::new() })
        .collect();
    let mut ledger = LedgerSeries::default();
    for y in &sol.y {
        for (series, b) in bodies.iter_mut().zip(sys.bodies_at(y)?) {
            series.positions.push(b.position());
            series.velocities.push(b.velocity());
        }
        ledger.push(sys.ledger(y)?);
    }
    Ok(Trajectory {
        provider: sys.provider,
        times: sol.t,
        bodies,
        ledger,
        stats: sol.stats,
        step_extremes: extremes,
        final_state: sol.y.last().cloned().unwrap_or(y0),
    })
}

/// Drift of the conserved quantities and the momentum balance of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    /// max |p_can(t) − p_can(t₀)| over samples and accepted steps.
    pub canonical_drift: f64,
    /// Relative to max(|p_can(t₀)|, max |p_mech|).
    pub canonical_drift_rel: f64,
    pub energy_drift: f64,
    pub energy_drift_rel: f64,
    /// max |p_mech(t) − p_mech(t₀)|
    pub mechanical_change: f64,
    pub mechanical_delta: Vec3,
    pub field_delta: Vec3,
    /// max |d p_mech/dt + d p_field/dt| / max |d p_mech/dt| by central differences.
    pub balance_residual: f64,
    /// Least-squares ratio of d p_mech/dt to −d p_field/dt; absent when the field momentum does not change.
    pub balance_ratio: Option<f64>,
}

pub fn ledger_report(traj: &Trajectory) -> Result<LedgerReport> {
    let l = &traj.ledger;
    let n = traj.times.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty trajectory".into()));
    }
    let (p0, e0, m0, f0) = (l.canonical[0], l.energy[0], l.mechanical[0], l.field[0]);
    let sample_can = l.canonical.iter().map(|p| (*p - p0).norm()).fold(0.0, f64::max);
    let canonical_drift = sample_can.max(traj.step_extremes.canonical);
    let energy_drift = l.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max).max(traj.step_extremes.energy);
    let mechanical_change = l.mechanical.iter().map(|p| (*p - m0).norm()).fold(0.0, f64::max);
    let pscale = l.mechanical.iter().map(|p| p.norm()).fold(p0.norm(), f64::max);
    let kinetic_scale = traj
        .bodies
        .iter()
        .flat_map(|b| b.velocities.iter())
        .map(|v| v.norm_squared())
        .fold(0.0, f64::max);
    let escale = e0.abs().max(kinetic_scale);
    let rel = |x: f64, s: f64| if s > 0.0 { x / s } else { x };

    let (mut worst, mut mech_rate, mut dot, mut norm) = (0.0f64, 0.0f64, 0.0, 0.0);
    for i in 1..n.saturating_sub(1) {
        let dt = traj.times[i + 1] - traj.times[i - 1];
        if dt <= 0.0 {
            continue;
        }
        let dm = (l.mechanical[i + 1] - l.mechanical[i - 1]) / dt;
        let df = (l.field[i + 1] - l.field[i - 1]) / dt;
        worst = worst.max((dm + df).norm());
        mech_rate = mech_rate.max(dm.norm());
        dot += dm.dot(-df);
        norm += df.norm_squared();
    }
    Ok(LedgerReport {
        canonical_drift,
        canonical_drift_rel: rel(canonical_drift, pscale),
        energy_drift,
        energy_drift_rel: rel(energy_drift, escale),
        mechanical_change,
        mechanical_delta: l.mechanical[n - 1] - m0,
        field_delta: l.field[n - 1] - f0,
        balance_residual: if mech_rate > 0.0 { worst / mech_rate } else { worst },
        balance_ratio: (norm > 0.0).then(|| dot / norm),
    })
}

/// Integrate forward, reverse velocities and magnetic sources, integrate
/// again for the same time, and return the largest mismatch with the
/// initial state relative to the position and speed scales.
pub fn time_reversal_error(sys: &DynamicalSystem, duration: f64, opts: &IntegrateOptions) -> Result<f64> {
    let forward = integrate(sys, 0.0, duration, &IntegrateOptions { samples: None, ..opts.clone() })?;
    let end = sys.at_state(&forward.final_state)?.time_reversed();
    let back = integrate(&end, 0.0, duration, &IntegrateOptions { samples: None, ..opts.clone() })?;
    let returned = end.at_state(&back.final_state)?.time_reversed();
    let (mut dr, mut dv, mut rs, mut vs) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (a, b) in sys.bodies.iter().zip(&returned.bodies) {
        dr = dr.max((a.body.position() - b.body.position()).norm());
        dv = dv.max((a.body.velocity() - b.body.velocity()).norm());
        rs = rs.max(a.body.position().norm());
        vs = vs.max(a.body.velocity().norm());
    }
    let sep = (sys.bodies[0].body.position() - sys.bodies[1].body.position()).norm();
    Ok((dr / rs.max(sep)).max(if vs > 0.0 { dv / vs } else { dv }))
}
