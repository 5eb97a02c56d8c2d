//! Forces for the unconstrained description, where every constituent of an
//! extended source feels its own Lorentz force, plus straight-path impulse
//! and displacement integrals.
//!
//! Sign convention: the force on a loop is ∇(μ·B) with B the field of the
//! moving charge, and the force on a charge is (q/c) v×B of the dipole
//! field (extended by the moving-dipole electric term when the loop moves).
//! The A-B and A-C forces are the line integrals of the loop force.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Context, LineCharge, LineSolenoid, MagneticDipole, PointCharge, System};
use crate::quadrature::{integrate_mapped, QuadConfig, QuadResult};
use crate::vector::Vec3;

/// Unconstrained force on a dipole from a moving point charge.
pub fn force_on_loop_from_charge(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<Vec3> {
    let (s, r) = ctx.separation(charge.position, dipole.position)?;
    let a = dipole.moment.cross(charge.velocity - dipole.velocity);
    let r3 = r * r * r;
    Ok((a / r3 - s * (3.0 * a.dot(s) / (r3 * r * r))) * (charge.charge / ctx.c()))
}

/// Unconstrained force on a point charge from a dipole.
pub fn force_on_charge_from_loop(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<Vec3> {
    let (s, r) = ctx.separation(charge.position, dipole.position)?;
    let w = dipole.velocity - charge.velocity;
    let mu = dipole.moment;
    let r3 = r * r * r;
    Ok((w.cross(mu) / r3 + s.cross(w) * (3.0 * s.dot(mu) / (r3 * r * r))) * (charge.charge / ctx.c()))
}

/// Loop force for a dipole μẑ at rest and a charge moving along x̂ with
/// speed `v`, `rel` being the charge position relative to the dipole.
pub fn loop_force_axial_frame(ctx: &Context, mu: f64, q: f64, v: f64, rel: Vec3) -> Result<Vec3> {
    let (_, r) = ctx.separation(Vec3::ZERO, rel)?;
    let (x, y, z) = (rel.x, rel.y, rel.z);
    let bracket = Vec3::new(x * y, y * y, y * z) * (3.0 / (r * r)) - Vec3::Y;
    Ok(bracket * (-mu * q * v / (ctx.c() * r * r * r)))
}

/// Charge force in the same frame as [`loop_force_axial_frame`].
pub fn charge_force_axial_frame(ctx: &Context, mu: f64, q: f64, v: f64, rel: Vec3) -> Result<Vec3> {
    let (_, r) = ctx.separation(Vec3::ZERO, rel)?;
    let (y, z) = (rel.y, rel.z);
    let bracket = Vec3::new(0.0, z * z, -y * z) * (3.0 / (r * r)) - Vec3::Y;
    Ok(bracket * (-mu * q * v / (ctx.c() * r * r * r)))
}

/// ∇_Δ (k a·Δ/ρ²) for in-plane Δ; the common form of the integrated
/// line-source forces.
fn planar_gradient(k: f64, a: Vec3, delta: Vec3, rho: f64) -> Vec3 {
    let a = a.in_plane();
    let r2 = rho * rho;
    (a / r2 - delta * (2.0 * a.dot(delta) / (r2 * r2))) * k
}

/// Zero: the solenoid has no field outside, so the charge feels nothing.
pub fn ab_force_on_charge(ctx: &Context, charge: &PointCharge, s: &LineSolenoid) -> Result<Vec3> {
    ctx.axial_separation(s.axis_point, charge.position)?;
    Ok(Vec3::ZERO)
}

/// Net force on the solenoid from a passing charge.
pub fn ab_force_on_solenoid(ctx: &Context, charge: &PointCharge, s: &LineSolenoid) -> Result<Vec3> {
    let (rho_vec, rho) = ctx.axial_separation(s.axis_point, charge.position)?;
    let kappa = ctx.moment_density.per_length(s.flux, &ctx.units);
    let u = charge.velocity - s.velocity;
    // Δ = r_s − r_q
    Ok(planar_gradient(2.0 * kappa * charge.charge / ctx.c(), Vec3::Z.cross(u), -rho_vec, rho))
}

/// Net force on the wire, (λ/c)(v_w − v_μ) × ∫B dz. The dipole field
/// integrated along the wire vanishes when μ is parallel to the wire, so the
/// result is exactly zero in that geometry; an in-plane moment component
/// leaves −∇(2μ·Δ/ρ²) behind.
pub fn ac_force_on_wire(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge) -> Result<Vec3> {
    let (delta, rho) = ctx.axial_separation(dipole.position, w.axis_point)?;
    let mu = dipole.moment.in_plane();
    if mu == Vec3::ZERO {
        return Ok(Vec3::ZERO);
    }
    let column_field = -planar_gradient(2.0, mu, delta, rho);
    Ok((w.velocity - dipole.velocity).cross(column_field) * (w.density / ctx.c()))
}

/// Net force on the dipole from a (relatively) moving line charge.
pub fn ac_force_on_loop(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge) -> Result<Vec3> {
    let (delta, rho) = ctx.axial_separation(w.axis_point, dipole.position)?;
    let u = w.velocity - dipole.velocity;
    Ok(planar_gradient(2.0 * w.density / ctx.c(), dipole.moment.cross(u), delta, rho))
}

/// Which body a force field acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    OnLoop,
    OnCharge,
    OnSolenoid,
    OnWire,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Target::OnLoop => "on_loop",
            Target::OnCharge => "on_charge",
            Target::OnSolenoid => "on_solenoid",
            Target::OnWire => "on_wire",
        };
        f.write_str(s)
    }
}

/// Position and velocity of the body that follows the straight path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub position: Vec3,
    pub velocity: Vec3,
}

type Eval = Box<dyn Fn(&Kinematics, f64) -> Result<Vec3> + Send + Sync>;

/// Force on `target` as a function of the moving body's kinematics and time.
pub struct ForceField {
    pub system: System,
    pub target: Target,
    /// Reference point of the fixed source, used to place the quadrature.
    anchor: Vec3,
    /// Line sources: only in-plane distance matters.
    planar: bool,
    eval: Eval,
}

impl fmt::Debug for ForceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceField")
            .field("system", &self.system)
            .field("target", &self.target)
            .field("anchor", &self.anchor)
            .finish()
    }
}

impl ForceField {
    pub fn custom(
        system: System,
        target: Target,
        anchor: Vec3,
        planar: bool,
        eval: impl Fn(&Kinematics, f64) -> Result<Vec3> + Send + Sync + 'static,
    ) -> Self {
        ForceField {
            system,
            target,
            anchor,
            planar,
            eval: Box::new(eval),
        }
    }

    pub fn zero(system: System, target: Target) -> Self {
        ForceField::custom(system, target, Vec3::ZERO, false, |_, _| Ok(Vec3::ZERO))
    }

    pub fn evaluate(&self, k: &Kinematics, t: f64) -> Result<Vec3> {
        (self.eval)(k, t)
    }

    pub fn anchor(&self) -> Vec3 {
        self.anchor
    }

    pub fn is_planar(&self) -> bool {
        self.planar
    }

    /// Charge moves, dipole held fixed; force on the dipole.
    pub fn mott_schwinger_on_loop(ctx: Context, charge: PointCharge, dipole: MagneticDipole) -> Self {
        ForceField::custom(System::MottSchwinger, Target::OnLoop, dipole.position, false, move |k, _| {
            let q = PointCharge::new(charge.charge, charge.mass, k.position, k.velocity);
            force_on_loop_from_charge(&ctx, &q, &dipole)
        })
    }

    /// Charge moves, dipole held fixed; force on the charge.
    pub fn mott_schwinger_on_charge(ctx: Context, charge: PointCharge, dipole: MagneticDipole) -> Self {
        ForceField::custom(System::MottSchwinger, Target::OnCharge, dipole.position, false, move |k, _| {
            let q = PointCharge::new(charge.charge, charge.mass, k.position, k.velocity);
            force_on_charge_from_loop(&ctx, &q, &dipole)
        })
    }

    /// Charge moves past a fixed solenoid; force on the solenoid.
    pub fn ab_on_solenoid(ctx: Context, charge: PointCharge, s: LineSolenoid) -> Self {
        ForceField::custom(System::AharonovBohm, Target::OnSolenoid, s.axis_point, true, move |k, _| {
            let q = PointCharge::new(charge.charge, charge.mass, k.position, k.velocity);
            ab_force_on_solenoid(&ctx, &q, &s)
        })
    }

    pub fn ab_on_charge(ctx: Context, charge: PointCharge, s: LineSolenoid) -> Self {
        ForceField::custom(System::AharonovBohm, Target::OnCharge, s.axis_point, true, move |k, _| {
            let q = PointCharge::new(charge.charge, charge.mass, k.position, k.velocity);
            ab_force_on_charge(&ctx, &q, &s)
        })
    }

    /// Dipole moves past a fixed wire; force on the dipole.
    pub fn ac_on_loop(ctx: Context, dipole: MagneticDipole, w: LineCharge) -> Self {
        ForceField::custom(System::AharonovCasher, Target::OnLoop, w.axis_point, true, move |k, _| {
            let d = MagneticDipole::new(dipole.moment, dipole.mass, k.position, k.velocity);
            ac_force_on_loop(&ctx, &d, &w)
        })
    }

    pub fn ac_on_wire(ctx: Context, dipole: MagneticDipole, w: LineCharge) -> Self {
        ForceField::custom(System::AharonovCasher, Target::OnWire, w.axis_point, true, move |k, _| {
            let d = MagneticDipole::new(dipole.moment, dipole.mass, k.position, k.velocity);
            ac_force_on_wire(&ctx, &d, &w)
        })
    }
}

/// Uniform straight-line motion `start + velocity·t` for t in [t_min, t_max].
/// Either limit may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraightPath {
    pub start: Vec3,
    pub velocity: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl StraightPath {
    pub fn new(start: Vec3, velocity: Vec3, t_min: f64, t_max: f64) -> Result<Self> {
        if !(velocity.norm() > 0.0) || !velocity.is_finite() || !start.is_finite() {
            return Err(Error::InvalidInput("straight path needs a finite nonzero velocity".into()));
        }
        if !(t_min < t_max) || t_min.is_nan() || t_max.is_nan() {
            return Err(Error::InvalidInput(format!("empty time range [{t_min}, {t_max}]")));
        }
        Ok(StraightPath {
            start,
            velocity,
            t_min,
            t_max,
        })
    }

    /// Full passage along x̂ at impact parameter `b` (y offset) from `source`;
    /// closest approach at t = 0.
    pub fn full_passage(source: Vec3, b: f64, speed: f64) -> Result<Self> {
        StraightPath::new(source + Vec3::Y * b, Vec3::X * speed, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn at(&self, t: f64) -> Kinematics {
        Kinematics {
            position: self.start + self.velocity * t,
            velocity: self.velocity,
        }
    }

    /// Time of closest approach to `anchor` and that distance.
    pub fn closest_approach(&self, anchor: Vec3, planar: bool) -> (f64, f64) {
        let project = |v: Vec3| if planar { v.in_plane() } else { v };
        let d0 = project(self.start - anchor);
        let v = project(self.velocity);
        let v2 = v.norm_squared();
        let tc = if v2 > 0.0 { -d0.dot(v) / v2 } else { 0.0 };
        (tc, (d0 + v * tc).norm())
    }

    fn mapping(&self, f: &ForceField) -> (f64, f64) {
        let (tc, d) = self.closest_approach(f.anchor, f.planar);
        let speed = self.velocity.norm();
        let scale = if d > 0.0 { d / speed } else { 1.0 / speed };
        (tc, scale)
    }
}

/// ∫ F dt along the path.
pub fn straight_path_impulse(f: &ForceField, path: &StraightPath, cfg: &QuadConfig) -> Result<QuadResult<Vec3>> {
    let (tc, scale) = path.mapping(f);
    integrate_mapped(|t| f.evaluate(&path.at(t), t), path.t_min, path.t_max, tc, scale, cfg)
}

/// Position offset of a body of mass `mass`, initially at rest, that feels
/// `f` while the source follows `path`.
///
/// For a finite end time this is (1/m)∫(t_max − t)F dt. For a path open to
/// +∞ it is the offset of the asymptotic trajectory at closest approach,
/// −(1/m)∫(t − t_c)F dt, which is the net displacement whenever the net
/// impulse vanishes. A path infinite at both ends is folded about t_c so
/// the slowly decaying even part of F cancels exactly.
pub fn straight_path_displacement(
    f: &ForceField,
    path: &StraightPath,
    mass: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<Vec3>> {
    if !(mass > 0.0) {
        return Err(Error::InvalidInput(format!("mass must be positive, got {mass}")));
    }
    let (tc, scale) = path.mapping(f);
    let mut r = if path.t_max.is_finite() {
        let te = path.t_max;
        integrate_mapped(|t| Ok(f.evaluate(&path.at(t), t)? * (te - t)), path.t_min, te, tc, scale, cfg)?
    } else if path.t_min.is_infinite() {
        integrate_mapped(
            |tau| {
                let fp = f.evaluate(&path.at(tc + tau), tc + tau)?;
                let fm = f.evaluate(&path.at(tc - tau), tc - tau)?;
                Ok((fp - fm) * (-tau))
            },
            0.0,
            f64::INFINITY,
            0.0,
            scale,
            cfg,
        )?
    } else {
        integrate_mapped(|t| Ok(f.evaluate(&path.at(t), t)? * (tc - t)), path.t_min, path.t_max, tc, scale, cfg)?
    };
    r.value = r.value / mass;
    r.error /= mass;
    r.magnitude /= mass;
    Ok(r)
}
