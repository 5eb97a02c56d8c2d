//! Fly-by of the first body past the second.

use serde::{Deserialize, Serialize};

use super::engine::{integrate, IntegrateOptions};
use super::system::{DynamicalSystem, Provider};
use crate::error::{Error, Result};
use crate::quadrature::{integrate as quad, QuadConfig};
use crate::vector::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScatterMode {
    ImpulseApprox,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScatteringSetup {
    pub impact_parameter: f64,
    pub speed: f64,
    /// Start and end separation along the path, in impact parameters.
    pub cutoff: f64,
    /// Extrapolate the cutoff to infinity from runs at `cutoff`, 2·`cutoff` and 4·`cutoff`.
    pub extrapolate: bool,
    pub tol: f64,
    pub quad: QuadConfig,
}

impl Default for ScatteringSetup {
    fn default() -> Self {
        ScatteringSetup {
            impact_parameter: 1.0,
            speed: 1.0,
            cutoff: 200.0,
            extrapolate: true,
            tol: 1e-10,
            quad: QuadConfig::with_rel_tol(1e-10),
        }
    }
}

impl ScatteringSetup {
    pub fn new(impact_parameter: f64, speed: f64) -> Self {
        ScatteringSetup { impact_parameter, speed, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatteringResult {
    pub mode: ScatterMode,
    pub impact_parameter: f64,
    pub speed: f64,
    /// Net mechanical impulse on each body.
    pub impulses: Vec<Vec3>,
    /// Offset of each body's outgoing asymptote from its unperturbed path,
    /// taken at the time of closest approach.
    pub displacements: Vec<Vec3>,
    /// Angle between the projectile's outgoing and incoming velocity.
    pub deflection: f64,
    pub impulse_error: f64,
    pub displacement_error: f64,
}

struct Raw {
    impulses: [Vec3; 2],
    displacements: [Vec3; 2],
    impulse_error: f64,
    displacement_error: f64,
}

/// Places the projectile (body 0) at `target + (−L, b, 0)` moving along x̂
/// and the target (body 1) at rest.
fn placed(sys: &DynamicalSystem, setup: &ScatteringSetup, half_time: f64) -> DynamicalSystem {
    let mut s = sys.clone();
    let target = s.bodies[1].body.position();
    let start = target + Vec3::new(-setup.speed * half_time, setup.impact_parameter, 0.0);
    s.bodies[0].body.set_state(start, Vec3::X * setup.speed);
    s.bodies[1].body.set_state(target, Vec3::ZERO);
    s
}

/// Forces on both bodies while the projectile follows the unperturbed
/// straight path `target + (v·t, b, 0)` and the target stays at rest.
struct StraightPassage {
    free: DynamicalSystem,
    masses: [f64; 2],
    target: Vec3,
    impact_parameter: f64,
    speed: f64,
}

impl StraightPassage {
    fn new(sys: &DynamicalSystem, setup: &ScatteringSetup) -> Self {
        let base = placed(sys, setup, 0.0);
        let masses = [base.bodies[0].mass(), base.bodies[1].mass()];
        let target = base.bodies[1].body.position();
        // forces on both bodies, including one the scenario holds fixed
        let mut free = base;
        if free.provider != Provider::HiddenMomentum {
            for spec in &mut free.bodies {
                spec.dynamic = true;
            }
        }
        StraightPassage { free, masses, target, impact_parameter: setup.impact_parameter, speed: setup.speed }
    }

    fn force(&self, t: f64) -> Result<[Vec3; 2]> {
        let mut bodies = [self.free.bodies[0].body, self.free.bodies[1].body];
        bodies[0].set_state(self.target + Vec3::new(self.speed * t, self.impact_parameter, 0.0), Vec3::X * self.speed);
        let a = self.free.accelerations(&bodies)?;
        Ok([a[0] * self.masses[0], a[1] * self.masses[1]])
    }
}

/// Force on each body at the given times of an unperturbed passage, closest
/// approach at t = 0.
pub fn force_history(sys: &DynamicalSystem, setup: &ScatteringSetup, times: &[f64]) -> Result<Vec<[Vec3; 2]>> {
    sys.validate()?;
    let passage = StraightPassage::new(sys, setup);
    times.iter().map(|&t| passage.force(t)).collect()
}

fn impulse_approx(sys: &DynamicalSystem, setup: &ScatteringSetup, half_time: f64) -> Result<Raw> {
    let passage = StraightPassage::new(sys, setup);
    let masses = passage.masses;
    let width = setup.impact_parameter / setup.speed;
    let inner = (10.0 * width).min(half_time);
    let pieces = [(-half_time, -inner), (-inner, inner), (inner, half_time)];
    let mut impulses = [Vec3::ZERO; 2];
    let mut moments = [Vec3::ZERO; 2];
    let (mut impulse_error, mut displacement_error) = (0.0f64, 0.0f64);
    for i in 0..2 {
        let (mut ie, mut de) = (0.0, 0.0);
        for &(a, b) in pieces.iter().filter(|(a, b)| b > a) {
            let r = quad(|t| Ok(passage.force(t)?[i]), a, b, &setup.quad)?;
            impulses[i] = impulses[i] + r.value;
            ie += r.error;
            let r = quad(|t| Ok(passage.force(t)?[i] * (-t / masses[i])), a, b, &setup.quad)?;
            moments[i] = moments[i] + r.value;
            de += r.error;
        }
        impulse_error = impulse_error.max(ie);
        displacement_error = displacement_error.max(de);
    }
    Ok(Raw { impulses, displacements: moments, impulse_error, displacement_error })
}

fn full(sys: &DynamicalSystem, setup: &ScatteringSetup, half_time: f64) -> Result<Raw> {
    let s = placed(sys, setup, half_time);
    let opts = IntegrateOptions::with_tol(setup.tol).sampled(-half_time, half_time, 2);
    let traj = integrate(&s, -half_time, half_time, &opts)?;
    let mut impulses = [Vec3::ZERO; 2];
    let mut displacements = [Vec3::ZERO; 2];
    for (i, b) in traj.bodies.iter().enumerate() {
        let m = s.bodies[i].mass();
        let (x0, v0) = (b.positions[0], b.velocities[0]);
        let (x1, v1) = (*b.positions.last().unwrap(), *b.velocities.last().unwrap());
        impulses[i] = (v1 - v0) * m;
        displacements[i] = x1 - v1 * half_time - x0 - v0 * half_time;
    }
    // the local tolerance bounds each state component per unit of time
    let impulse_error = (0..2).map(|i| s.bodies[i].mass() * setup.tol * (1.0 + setup.speed)).fold(0.0, f64::max);
    let displacement_error = setup.tol * (2.0 * half_time) * (1.0 + setup.speed);
    Ok(Raw { impulses, displacements, impulse_error, displacement_error })
}

pub fn scattering_run(sys: &DynamicalSystem, setup: &ScatteringSetup, mode: ScatterMode) -> Result<ScatteringResult> {
    sys.validate()?;
    if !(setup.impact_parameter > 0.0 && setup.speed > 0.0) {
        return Err(Error::InvalidInput("impact parameter and speed must be positive".into()));
    }
    if setup.cutoff < 20.0 {
        return Err(Error::InvalidInput(format!("cutoff {} is below 20 impact parameters", setup.cutoff)));
    }
    if setup.speed >= sys.context.c() {
        return Err(Error::OutOfRegime("projectile speed is not below c".into()));
    }
    if mode == ScatterMode::ImpulseApprox && sys.provider == Provider::Hamiltonian {
        return Err(Error::InvalidInput("the impulse approximation needs a force provider".into()));
    }
    let run = |l: f64| {
        let half_time = l * setup.impact_parameter / setup.speed;
        match mode {
            ScatterMode::ImpulseApprox => impulse_approx(sys, setup, half_time),
            ScatterMode::Full => full(sys, setup, half_time),
        }
    };
    let near = run(setup.cutoff)?;
    let (impulses, displacements, ie, de) = if setup.extrapolate {
        let mid = run(2.0 * setup.cutoff)?;
        let far = run(4.0 * setup.cutoff)?;
        let ex = |a: Vec3, b: Vec3, c: Vec3| Vec3::new(tail(a.x, b.x, c.x), tail(a.y, b.y, c.y), tail(a.z, b.z, c.z));
        let imp: Vec<Vec3> = (0..2).map(|i| ex(near.impulses[i], mid.impulses[i], far.impulses[i])).collect();
        let dis: Vec<Vec3> =
            (0..2).map(|i| ex(near.displacements[i], mid.displacements[i], far.displacements[i])).collect();
        let ie = (0..2).map(|i| (imp[i] - far.impulses[i]).norm()).fold(0.0, f64::max) + far.impulse_error;
        let de = (0..2).map(|i| (dis[i] - far.displacements[i]).norm()).fold(0.0, f64::max) + far.displacement_error;
        (imp, dis, ie, de)
    } else {
        (near.impulses.to_vec(), near.displacements.to_vec(), near.impulse_error, near.displacement_error)
    };
    let p0 = sys.bodies[0].mass() * setup.speed;
    let outgoing = Vec3::X * p0 + impulses[0];
    let deflection = outgoing.cross(Vec3::X).norm().atan2(outgoing.dot(Vec3::X));
    Ok(ScatteringResult {
        mode,
        impact_parameter: setup.impact_parameter,
        speed: setup.speed,
        impulses,
        displacements,
        deflection,
        impulse_error: ie,
        displacement_error: de,
    })
}

/// Limit of a sequence taken at cutoffs L, 2L, 4L whose tail falls off as a
/// power of 1/L, with the power estimated from the three values.
fn tail(a: f64, b: f64, c: f64) -> f64 {
    let (d1, d2) = (b - a, c - b);
    let noise = 64.0 * f64::EPSILON * a.abs().max(b.abs()).max(c.abs());
    if d2.abs() <= noise || d1.abs() <= noise {
        return c;
    }
    let q = d2 / d1;
    // accept tails between 1/L^0.5 and 1/L^4
    if !(1.0 / 16.0..=std::f64::consts::FRAC_1_SQRT_2).contains(&q) {
        return c;
    }
    c + d2 * q / (1.0 - q)
}
