//! Plane-wave phases (1/ħ)∫p·dx for charges circling flux lines, moments
//! circling line charges, and composite particles whose constituents feel
//! different forces.
//!
//! A closed path is treated as an interferometer: it is split into two arms
//! sharing the first vertex, and the phase is arm A minus arm B. Vector
//! parts then equal the loop integral, while kinetic parts cancel for arms
//! of equal length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dipole_vector_potential, solenoid_vector_potential, wire_electric_field, Context, LineCharge, LineSolenoid, MagneticDipole, PointCharge};
use crate::quadrature::{integrate, QuadConfig};
use crate::unconstrained::{straight_path_displacement, straight_path_impulse, ForceField, StraightPath};
use crate::vector::Vec3;

/// Polygonal path traversed at constant speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyPath {
    pub vertices: Vec<Vec3>,
    pub closed: bool,
    #[serde(default = "unit_speed")]
    pub speed: f64,
}

fn unit_speed() -> f64 {
    1.0
}

impl PolyPath {
    pub fn new(vertices: Vec<Vec3>, closed: bool) -> Result<Self> {
        let p = PolyPath {
            vertices,
            closed,
            speed: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn open(vertices: Vec<Vec3>) -> Result<Self> {
        Self::new(vertices, false)
    }

    pub fn closed(vertices: Vec<Vec3>) -> Result<Self> {
        Self::new(vertices, true)
    }

    /// Counterclockwise regular polygon in the plane z = `center.z`.
    pub fn regular(center: Vec3, radius: f64, sides: usize) -> Result<Self> {
        if sides < 3 || !(radius > 0.0) {
            return Err(Error::InvalidInput("a regular polygon needs ≥ 3 sides and a positive radius".into()));
        }
        let vertices = (0..sides)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / sides as f64;
                center + Vec3::new(a.cos(), a.sin(), 0.0) * radius
            })
            .collect();
        Self::closed(vertices)
    }

    pub fn with_speed(mut self, speed: f64) -> Result<Self> {
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(Error::InvalidInput(format!("speed must be positive, got {speed}")));
        }
        self.speed = speed;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let v = &self.vertices;
        if v.len() < 2 || (self.closed && v.len() < 3) {
            return Err(Error::InvalidInput("path needs at least two vertices (three if closed)".into()));
        }
        if v.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("non-finite vertex".into()));
        }
        if self.segments().any(|(a, b)| a == b) {
            return Err(Error::InvalidInput("consecutive vertices coincide".into()));
        }
        if self.closed {
            for i in 0..v.len() {
                if v[i + 1..].contains(&v[i]) {
                    return Err(Error::InvalidInput(format!("closed path repeats vertex {i}")));
                }
            }
        }
        if !(self.speed > 0.0) {
            return Err(Error::InvalidInput("speed must be positive".into()));
        }
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        let n = self.vertices.len();
        let count = if self.closed { n } else { n - 1 };
        (0..count).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.vertices.reverse();
        out
    }

    /// Joins two open paths; `other` must start where `self` ends.
    pub fn concat(&self, other: &PolyPath) -> Result<Self> {
        if self.closed || other.closed {
            return Err(Error::InvalidInput("only open paths concatenate".into()));
        }
        if self.vertices.last() != other.vertices.first() {
            return Err(Error::InvalidInput("paths do not share an endpoint".into()));
        }
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices[1..]);
        let mut out = PolyPath::open(vertices)?;
        out.speed = self.speed;
        Ok(out)
    }

    /// Splits a closed path at vertex `split` into the arm v₀…v_split and
    /// the arm v₀, v_{n−1}, …, v_split.
    pub fn arms_at(&self, split: usize) -> Result<(PolyPath, PolyPath)> {
        let n = self.vertices.len();
        if !self.closed || split == 0 || split >= n {
            return Err(Error::InvalidInput("arms need a closed path and 0 < split < n".into()));
        }
        let a = self.vertices[..=split].to_vec();
        let mut b = vec![self.vertices[0]];
        b.extend(self.vertices[split..].iter().rev());
        let mut a = PolyPath::open(a)?;
        let mut b = PolyPath::open(b)?;
        a.speed = self.speed;
        b.speed = self.speed;
        Ok((a, b))
    }

    /// Split at the middle vertex.
    pub fn arms(&self) -> Result<(PolyPath, PolyPath)> {
        self.arms_at(self.vertices.len() / 2)
    }

    /// Net number of counterclockwise turns about the vertical line
    /// through `axis`, for closed paths.
    pub fn winding_number(&self, axis: Vec3) -> Result<i64> {
        if !self.closed {
            return Err(Error::InvalidInput("winding number needs a closed path".into()));
        }
        let total: f64 = self
            .segments()
            .map(|(a, b)| {
                let (u, v) = ((a - axis).in_plane(), (b - axis).in_plane());
                u.cross(v).z.atan2(u.dot(v))
            })
            .sum();
        Ok((total / std::f64::consts::TAU).round() as i64)
    }

    /// Error if any segment passes within `radius` of the vertical axis.
    fn check_axis(&self, axis: Vec3, radius: f64) -> Result<()> {
        for (i, (a, b)) in self.segments().enumerate() {
            let (u, d) = ((a - axis).in_plane(), (b - a).in_plane());
            let dd = d.norm_squared();
            let t = if dd > 0.0 { (-u.dot(d) / dd).clamp(0.0, 1.0) } else { 0.0 };
            if (u + d * t).norm() < radius {
                return Err(Error::AxisCrossing { segment: i });
            }
        }
        Ok(())
    }
}

/// Decomposed phase in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub phase: f64,
    /// From mv (or Σp₀) along the path.
    pub kinetic: f64,
    /// From qA or μ×E/c along the path.
    pub potential: f64,
    /// From momentum transferred by forces along the path.
    pub force: f64,
}

impl PhaseResult {
    pub fn new(kinetic: f64, potential: f64, force: f64) -> Self {
        PhaseResult {
            phase: kinetic + potential + force,
            kinetic,
            potential,
            force,
        }
    }
}

fn line_integral(path: &PolyPath, f: impl Fn(Vec3) -> Result<Vec3>, cfg: &QuadConfig) -> Result<f64> {
    let mut total = 0.0;
    for (a, b) in path.segments() {
        let d = b - a;
        total += integrate(|s| Ok(f(a + d * s)?.dot(d)), 0.0, 1.0, cfg)?.value;
    }
    Ok(total)
}

fn line_cfg() -> QuadConfig {
    QuadConfig::with_rel_tol(1e-13)
}

/// Kinetic phase (m·speed/ħ)·length, as an interferometer difference for
/// closed paths.
fn kinetic_phase(ctx: &Context, path: &PolyPath, mass: f64) -> Result<f64> {
    let k = mass * path.speed / ctx.hbar();
    if path.closed {
        let (a, b) = path.arms()?;
        Ok(k * (a.length() - b.length()))
    } else {
        Ok(k * path.length())
    }
}

fn require_stationary(v: Vec3, what: &str) -> Result<()> {
    if v != Vec3::ZERO {
        return Err(Error::InvalidInput(format!("the {what} must be stationary for a phase integral")));
    }
    Ok(())
}

/// (q/ħc)∫A_s·dx along any path.
pub fn ab_vector_phase(ctx: &Context, path: &PolyPath, s: &LineSolenoid, q: f64) -> Result<f64> {
    path.check_axis(s.axis_point, ctx.singular_radius)?;
    let k = q / (ctx.hbar() * ctx.c());
    Ok(k * line_integral(path, |x| solenoid_vector_potential(ctx, s, x), &line_cfg())?)
}

/// Phase of a charge taken around a stationary flux line.
pub fn ab_phase(ctx: &Context, path: &PolyPath, s: &LineSolenoid, charge: &PointCharge) -> Result<PhaseResult> {
    require_stationary(s.velocity, "solenoid")?;
    if !path.closed {
        return Err(Error::InvalidInput("the A-B phase needs a closed path".into()));
    }
    let potential = ab_vector_phase(ctx, path, s, charge.charge)?;
    Ok(PhaseResult::new(kinetic_phase(ctx, path, charge.mass)?, potential, 0.0))
}

/// (1/ħc)∫(μ×E_w)·dx along any path.
pub fn ac_vector_phase(ctx: &Context, path: &PolyPath, w: &LineCharge, mu: Vec3) -> Result<f64> {
    path.check_axis(w.axis_point, ctx.singular_radius)?;
    let k = 1.0 / (ctx.hbar() * ctx.c());
    Ok(k * line_integral(path, |x| Ok(mu.cross(wire_electric_field(ctx, w, x)?)), &line_cfg())?)
}

/// Phase of a magnetic moment taken around a stationary line charge.
pub fn ac_phase(ctx: &Context, path: &PolyPath, w: &LineCharge, dipole: &MagneticDipole) -> Result<PhaseResult> {
    require_stationary(w.velocity, "line charge")?;
    if !path.closed {
        return Err(Error::InvalidInput("the A-C phase needs a closed path".into()));
    }
    let potential = ac_vector_phase(ctx, path, w, dipole.moment)?;
    Ok(PhaseResult::new(kinetic_phase(ctx, path, dipole.mass)?, potential, 0.0))
}

/// How the flux line is resolved into magnetic constituents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constituents {
    /// Dipole density κ per unit length along the whole axis, summed in
    /// closed form.
    Continuum,
    /// `count` equal dipoles spread over |z − z₀| < `half_length`, with z₀
    /// the mean height of the path.
    Slices { count: usize, half_length: f64 },
}

/// Summed vector potential of the solenoid's constituents at `x`.
pub fn constituent_vector_potential(ctx: &Context, s: &LineSolenoid, constituents: &Constituents, z0: f64, x: Vec3) -> Result<Vec3> {
    let kappa = ctx.moment_density.per_length(s.flux, &ctx.units);
    match *constituents {
        Constituents::Continuum => {
            let (rho, r) = ctx.axial_separation(s.axis_point, x)?;
            Ok(Vec3::Z.cross(rho) * (2.0 * kappa / (r * r)))
        }
        Constituents::Slices { count, half_length } => {
            if count == 0 || !(half_length > 0.0) {
                return Err(Error::InvalidInput("slices need a positive count and half-length".into()));
            }
            let dz = 2.0 * half_length / count as f64;
            let mu = Vec3::Z * (kappa * dz);
            let mut a = Vec3::ZERO;
            for k in 0..count {
                let z = z0 - half_length + (k as f64 + 0.5) * dz;
                let at = Vec3::new(s.axis_point.x, s.axis_point.y, z);
                a += dipole_vector_potential(ctx, mu, at, x)?;
            }
            Ok(a)
        }
    }
}

/// (1/ħ)∮(mv + qΣA_j)·dx with the constituents of the flux line each
/// contributing their own vector potential.
pub fn unconstrained_ab_phase(
    ctx: &Context,
    path: &PolyPath,
    s: &LineSolenoid,
    charge: &PointCharge,
    constituents: &Constituents,
) -> Result<PhaseResult> {
    require_stationary(s.velocity, "solenoid")?;
    if !path.closed {
        return Err(Error::InvalidInput("the A-B phase needs a closed path".into()));
    }
    path.check_axis(s.axis_point, ctx.singular_radius)?;
    let z0 = path.vertices.iter().map(|v| v.z).sum::<f64>() / path.vertices.len() as f64;
    let k = charge.charge / (ctx.hbar() * ctx.c());
    let potential = k * line_integral(path, |x| constituent_vector_potential(ctx, s, constituents, z0, x), &line_cfg())?;
    Ok(PhaseResult::new(kinetic_phase(ctx, path, charge.mass)?, potential, 0.0))
}

/// One arm of a composite-particle interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeArm {
    pub path: StraightPath,
    /// Σ p₀ⱼ over the constituents. Only the sum enters the phase, so how
    /// it is shared (equally, by default) does not matter.
    pub momentum: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositePhase {
    pub arms: [PhaseResult; 2],
    /// arms[0] − arms[1]
    pub difference: f64,
    /// False when the arms are unbounded: their kinetic parts are then
    /// infinite but identical and are left out.
    pub kinetic_included: bool,
}

/// (1/ħ)∫Σp₀ⱼ·dx + (1/ħ)∫[∫F_total dt]·dx for each arm, the arms passing
/// the source on opposite sides.
pub fn composite_force_phase(
    ctx: &Context,
    arms: &[CompositeArm; 2],
    force: &ForceField,
    cfg: &QuadConfig,
) -> Result<CompositePhase> {
    let anchor = force.anchor();
    let planar = force.is_planar();
    let mut sides = [0.0; 2];
    for (i, arm) in arms.iter().enumerate() {
        let (tc, d) = arm.path.closest_approach(anchor, planar);
        if d < ctx.singular_radius {
            return Err(Error::AxisCrossing { segment: i });
        }
        let offset = arm.path.at(tc).position - anchor;
        sides[i] = arm.path.velocity.cross(offset).z.signum();
    }
    if sides[0] == sides[1] {
        return Err(Error::InvalidInput("arms must pass the source on opposite sides".into()));
    }
    let bounded = arms.iter().all(|a| a.path.t_min.is_finite() && a.path.t_max.is_finite());
    if !bounded {
        let same = arms[0].momentum == arms[1].momentum
            && arms[0].path.velocity == arms[1].path.velocity
            && arms[0].path.t_min == arms[1].path.t_min
            && arms[0].path.t_max == arms[1].path.t_max;
        if !same {
            return Err(Error::InvalidInput(
                "unbounded arms must share momentum, velocity and time range".into(),
            ));
        }
    }
    let hbar = ctx.hbar();
    let mut out = [PhaseResult::default(); 2];
    for (i, arm) in arms.iter().enumerate() {
        let p = &arm.path;
        if !bounded {
            // Momentum transfer must return to zero for the folded moment
            // to be the arm's force phase.
            let imp = straight_path_impulse(force, p, cfg)?;
            if imp.value.norm() > 1e-6 * imp.magnitude.max(f64::MIN_POSITIVE) {
                return Err(Error::OutOfRegime("net impulse along an unbounded arm makes its force phase diverge".into()));
            }
        }
        let moment = straight_path_displacement(force, p, 1.0, cfg)?.value;
        let force_phase = p.velocity.dot(moment) / hbar;
        let kinetic = if bounded {
            arm.momentum.dot(p.at(p.t_max).position - p.at(p.t_min).position) / hbar
        } else {
            0.0
        };
        out[i] = PhaseResult::new(kinetic, 0.0, force_phase);
    }
    Ok(CompositePhase {
        arms: out,
        difference: out[0].phase - out[1].phase,
        kinetic_included: bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MomentDensity;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn ctx() -> Context {
        Context::nondimensional(20.0).with_hbar(0.3)
    }

    fn square(center: Vec3, half: f64) -> PolyPath {
        PolyPath::closed(vec![
            center + Vec3::new(half, -half, 0.0),
            center + Vec3::new(half, half, 0.0),
            center + Vec3::new(-half, half, 0.0),
            center + Vec3::new(-half, -half, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn path_validation() {
        assert!(PolyPath::open(vec![Vec3::ZERO]).is_err());
        assert!(PolyPath::open(vec![Vec3::ZERO, Vec3::ZERO]).is_err());
        assert!(PolyPath::closed(vec![Vec3::ZERO, Vec3::X, Vec3::ZERO, Vec3::Y]).is_err());
        assert!(PolyPath::closed(vec![Vec3::ZERO, Vec3::X]).is_err());
        let p = square(Vec3::ZERO, 1.0);
        assert_eq!(p.length(), 8.0);
        assert_eq!(p.winding_number(Vec3::ZERO).unwrap(), 1);
        assert_eq!(p.reversed().winding_number(Vec3::ZERO).unwrap(), -1);
        assert_eq!(p.winding_number(Vec3::X * 3.0).unwrap(), 0);
        let (a, b) = p.arms().unwrap();
        assert_eq!(a.vertices.first(), b.vertices.first());
        assert_eq!(a.vertices.last(), b.vertices.last());
        assert!(p.clone().with_speed(0.0).is_err());
    }

    #[test]
    fn ab_unit_winding() {
        let c = ctx();
        let s = LineSolenoid::stationary(2.7, Vec3::new(0.1, -0.2, 0.0));
        let q = PointCharge::new(-1.3, 0.8, Vec3::ZERO, Vec3::ZERO);
        let want = q.charge * s.flux / (c.hbar() * c.c());
        for path in [square(Vec3::ZERO, 1.0), PolyPath::regular(Vec3::new(0.3, 0.0, 0.5), 2.0, 17).unwrap()] {
            let r = ab_phase(&c, &path, &s, &q).unwrap();
            assert!((r.potential - want).abs() < 1e-12 * want.abs());
            assert!((r.phase - r.kinetic - r.potential - r.force).abs() < 1e-15);
        }
        // Symmetric square: kinetic parts of the two arms cancel.
        let r = ab_phase(&c, &square(Vec3::new(0.1, -0.2, 0.0), 1.0), &s, &q).unwrap();
        assert!(r.kinetic.abs() < 1e-12);
        let r = ab_phase(&c, &square(Vec3::new(5.0, 0.0, 0.0), 1.0), &s, &q).unwrap();
        assert!(r.potential.abs() < 1e-12 * want.abs());
    }

    #[test]
    fn ab_double_winding() {
        let c = ctx();
        let s = LineSolenoid::stationary(1.0, Vec3::ZERO);
        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
        // Two turns at different radii joined by radial steps.
        let n = 12;
        let mut v = Vec::new();
        for turn in 0..2 {
            let r = 1.0 + turn as f64;
            for k in 0..n {
                let a = std::f64::consts::TAU * (k as f64 + 0.25 * turn as f64) / n as f64;
                v.push(Vec3::new(a.cos(), a.sin(), 0.0) * r);
            }
        }
        let path = PolyPath::closed(v).unwrap();
        assert_eq!(path.winding_number(Vec3::ZERO).unwrap(), 2);
        let r = ab_phase(&c, &path, &s, &q).unwrap();
        let want = 2.0 * q.charge * s.flux / (c.hbar() * c.c());
        assert!((r.potential - want).abs() < 1e-10 * want);
    }

    #[test]
    fn ab_additive_reversible_and_deformation_invariant() {
        let c = ctx();
        let s = LineSolenoid::stationary(1.7, Vec3::ZERO);
        let a = PolyPath::open(vec![Vec3::new(2.0, -1.0, 0.0), Vec3::new(2.0, 1.0, 0.3), Vec3::new(-1.0, 2.0, 0.0)]).unwrap();
        let b = PolyPath::open(vec![Vec3::new(-1.0, 2.0, 0.0), Vec3::new(-2.0, -2.0, 1.0)]).unwrap();
        let pa = ab_vector_phase(&c, &a, &s, 1.0).unwrap();
        let pb = ab_vector_phase(&c, &b, &s, 1.0).unwrap();
        let pab = ab_vector_phase(&c, &a.concat(&b).unwrap(), &s, 1.0).unwrap();
        assert!((pab - pa - pb).abs() < 1e-13);
        assert!((ab_vector_phase(&c, &a.reversed(), &s, 1.0).unwrap() + pa).abs() < 1e-13);

        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let reference = PolyPath::regular(Vec3::ZERO, 1.5, 10).unwrap();
        let base = ab_phase(&c, &reference, &s, &q).unwrap().potential;
        for _ in 0..5 {
            let mut p = reference.clone();
            for v in &mut p.vertices {
                let r = v.norm() * rng.gen_range(0.5..1.5);
                *v = v.normalized().unwrap() * r + Vec3::Z * rng.gen_range(-1.0..1.0);
            }
            let phi = ab_phase(&c, &p, &s, &q).unwrap().potential;
            assert!((phi - base).abs() < 1e-9 * base.abs());
        }
    }

    #[test]
    fn ab_axis_crossing() {
        let c = ctx();
        let s = LineSolenoid::stationary(1.0, Vec3::ZERO);
        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
        let p = PolyPath::closed(vec![Vec3::new(-1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]).unwrap();
        assert!(matches!(ab_phase(&c, &p, &s, &q), Err(Error::AxisCrossing { segment: 0 })));
        let moving = LineSolenoid::new(1.0, Vec3::ZERO, 1.0, Vec3::X);
        assert!(ab_phase(&c, &square(Vec3::ZERO, 1.0), &moving, &q).is_err());
    }

    #[test]
    fn dispersionless() {
        let c = ctx();
        let s = LineSolenoid::stationary(1.0, Vec3::ZERO);
        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
        let p = PolyPath::closed(vec![Vec3::new(1.0, -1.0, 0.0), Vec3::new(2.0, 1.0, 0.0), Vec3::new(-1.0, 1.5, 0.0)]).unwrap();
        let slow = ab_phase(&c, &p, &s, &q).unwrap();
        let fast = ab_phase(&c, &p.clone().with_speed(2.0).unwrap(), &s, &q).unwrap();
        assert_eq!(slow.potential, fast.potential);
        assert!(slow.kinetic != 0.0);
        assert!((fast.kinetic - 2.0 * slow.kinetic).abs() < 1e-12 * slow.kinetic.abs());
    }

    #[test]
    fn ac_unit_winding_and_planar_moment() {
        let c = ctx();
        let w = LineCharge::stationary(0.9, Vec3::new(0.2, 0.1, 0.0));
        let d = MagneticDipole::new(Vec3::Z * 1.4, 1.0, Vec3::ZERO, Vec3::ZERO);
        let want = 4.0 * PI * w.density * d.moment.z / (c.hbar() * c.c());
        let r = ac_phase(&c, &PolyPath::regular(Vec3::ZERO, 1.0, 9).unwrap(), &w, &d).unwrap();
        assert!((r.potential - want).abs() < 1e-12 * want);
        let flat = MagneticDipole::new(Vec3::new(0.8, -0.6, 0.0), 1.0, Vec3::ZERO, Vec3::ZERO);
        let r = ac_phase(&c, &PolyPath::regular(Vec3::ZERO, 1.0, 9).unwrap(), &w, &flat).unwrap();
        assert!(r.potential.abs() < 1e-14);
        let r = ac_phase(&c, &square(Vec3::X * 4.0, 1.0), &w, &d).unwrap();
        assert!(r.potential.abs() < 1e-12 * want);
    }

    #[test]
    fn unconstrained_ab_equals_constrained() {
        let c = ctx();
        let s = LineSolenoid::stationary(2.1, Vec3::new(0.3, 0.0, 0.0));
        let q = PointCharge::new(0.7, 1.1, Vec3::ZERO, Vec3::ZERO);
        let p = PolyPath::regular(Vec3::new(0.0, 0.2, 0.4), 1.6, 11).unwrap();
        let con = ab_phase(&c, &p, &s, &q).unwrap();
        let unc = unconstrained_ab_phase(&c, &p, &s, &q, &Constituents::Continuum).unwrap();
        assert!((con.phase - unc.phase).abs() < 1e-12 * con.phase.abs());
        let mut last = f64::INFINITY;
        for (count, half) in [(200, 20.0), (800, 80.0), (3200, 320.0)] {
            let sl = unconstrained_ab_phase(&c, &p, &s, &q, &Constituents::Slices { count, half_length: half }).unwrap();
            let err = (sl.potential - con.potential).abs();
            assert!(err < last / 4.0);
            last = err;
        }
        assert!(last < 1e-4 * con.potential.abs());
        let none = LineSolenoid::stationary(0.0, s.axis_point);
        let r = unconstrained_ab_phase(&c, &p, &none, &q, &Constituents::Continuum).unwrap();
        assert_eq!(r.potential, 0.0);
        assert_eq!(r.phase, r.kinetic);
    }

    #[test]
    fn printed_density_breaks_the_identity_by_c() {
        let c = ctx().with_moment_density(MomentDensity::Printed);
        let s = LineSolenoid::stationary(1.0, Vec3::ZERO);
        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
        let p = PolyPath::regular(Vec3::ZERO, 1.0, 8).unwrap();
        let con = ab_phase(&c, &p, &s, &q).unwrap().potential;
        let unc = unconstrained_ab_phase(&c, &p, &s, &q, &Constituents::Continuum).unwrap().potential;
        assert!((unc / con - c.c()).abs() < 1e-10 * c.c());
    }

    fn ac_arms(c: &Context, lambda: f64, b: f64) -> (ForceField, [CompositeArm; 2], f64) {
        let mu = 0.6;
        let w = LineCharge::stationary(lambda, Vec3::ZERO);
        let d = MagneticDipole::new(Vec3::Z * mu, 2.0, Vec3::ZERO, Vec3::ZERO);
        let f = ForceField::ac_on_loop(*c, d, w);
        let v = 1.5;
        let arm = |y: f64| CompositeArm {
            path: StraightPath::full_passage(Vec3::ZERO, y, v).unwrap(),
            momentum: Vec3::X * (d.mass * v),
        };
        (f, [arm(b), arm(-b)], 2.0 * PI * lambda * mu / (c.hbar() * c.c()))
    }

    #[test]
    fn composite_force_phase_per_arm_and_difference() {
        let c = ctx();
        let (f, arms, unit) = ac_arms(&c, 0.8, 0.7);
        let r = composite_force_phase(&c, &arms, &f, &QuadConfig::default()).unwrap();
        assert!(!r.kinetic_included);
        // Arm above the wire picks up −2πλμ/ħc, the arm below +2πλμ/ħc.
        assert!((r.arms[0].force + unit).abs() < 1e-8 * unit);
        assert!((r.arms[1].force - unit).abs() < 1e-8 * unit);
        assert!((r.difference.abs() - 2.0 * unit).abs() < 1e-8 * unit);
        // The closed loop out along arm 0 and back along arm 1 circles the
        // wire clockwise.
        let loop_path = PolyPath::closed(vec![
            Vec3::new(-1e4, 0.7, 0.0),
            Vec3::new(1e4, 0.7, 0.0),
            Vec3::new(1e4, -0.7, 0.0),
            Vec3::new(-1e4, -0.7, 0.0),
        ])
        .unwrap();
        let w = LineCharge::stationary(0.8, Vec3::ZERO);
        let d = MagneticDipole::new(Vec3::Z * 0.6, 2.0, Vec3::ZERO, Vec3::ZERO);
        let closed = ac_phase(&c, &loop_path, &w, &d).unwrap().potential;
        assert!((r.difference - closed).abs() < 1e-6 * closed.abs());
    }

    #[test]
    fn composite_force_phase_edge_cases() {
        let c = ctx();
        let (f, arms, _) = ac_arms(&c, 0.0, 0.7);
        let r = composite_force_phase(&c, &arms, &f, &QuadConfig::default()).unwrap();
        assert_eq!(r.difference, 0.0);
        let (f, arms, _) = ac_arms(&c, 1.0, 0.7);
        assert!(composite_force_phase(&c, &[arms[0], arms[0]], &f, &QuadConfig::default()).is_err());
        let mut through = arms;
        through[1].path.start = Vec3::ZERO;
        assert!(matches!(
            composite_force_phase(&c, &through, &f, &QuadConfig::default()),
            Err(Error::AxisCrossing { segment: 1 })
        ));
        // Bounded arms carry their kinetic parts and approach the limit.
        let mut bounded = arms;
        for a in &mut bounded {
            a.path.t_min = -1e5;
            a.path.t_max = 1e5;
        }
        let r = composite_force_phase(&c, &bounded, &f, &QuadConfig::default()).unwrap();
        assert!(r.kinetic_included);
        assert_eq!(r.arms[0].kinetic, r.arms[1].kinetic);
        let unit = 2.0 * PI * 0.6 / (c.hbar() * c.c());
        assert!((r.difference.abs() - 2.0 * unit).abs() < 1e-4 * unit);
    }
}
