//! Constrained description: each extended source moves as one rigid body,
//! so its equations of motion come from the integrated interaction
//! Lagrangian. Also the single-particle Hamiltonian and hidden-momentum
//! equations of motion for a dipole in an electrostatic field.
//!
//! The dipole moment is held fixed; there is no torque dynamics.

use serde::{Deserialize, Serialize};

use crate::darwin::{darwin_lagrangian, TwoBodyState};
use crate::error::{Error, Result};
use crate::lagrangian::{HamiltonianSystem, LagrangianSystem, StepConfig};
use crate::model::{
    coulomb_field, dipole_scalar_potential_moving, dipole_vector_potential, charge_magnetic_field,
    wire_electric_field, wire_field_jacobian, Context, LineCharge, LineSolenoid, MagneticDipole, PointCharge,
};
use crate::unconstrained::force_on_charge_from_loop;
use crate::vector::Vec3;

/// A static electric field with its Jacobian ∂Eᵢ/∂xⱼ.
pub trait ElectricField: Send + Sync {
    fn field(&self, ctx: &Context, r: Vec3) -> Result<Vec3>;

    /// Defaults to central differences with a step of 1e-5 of |r| (at
    /// least 1e-8).
    fn jacobian(&self, ctx: &Context, r: Vec3) -> Result<[[f64; 3]; 3]> {
        let h = 1e-5 * r.norm().max(1e-3);
        let mut j = [[0.0; 3]; 3];
        for (l, axis) in [Vec3::X, Vec3::Y, Vec3::Z].into_iter().enumerate() {
            let d = (self.field(ctx, r + axis * h)? - self.field(ctx, r - axis * h)?) / (2.0 * h);
            for (i, row) in j.iter_mut().enumerate() {
                row[l] = d[i];
            }
        }
        Ok(j)
    }
}

impl ElectricField for LineCharge {
    fn field(&self, ctx: &Context, r: Vec3) -> Result<Vec3> {
        wire_electric_field(ctx, self, r)
    }

    fn jacobian(&self, ctx: &Context, r: Vec3) -> Result<[[f64; 3]; 3]> {
        wire_field_jacobian(ctx, self, r)
    }
}

/// Coulomb field of a fixed point charge; varies along every axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticCharge {
    pub charge: f64,
    pub position: Vec3,
}

impl ElectricField for StaticCharge {
    fn field(&self, ctx: &Context, r: Vec3) -> Result<Vec3> {
        coulomb_field(ctx, self.charge, self.position, r)
    }

    fn jacobian(&self, ctx: &Context, r: Vec3) -> Result<[[f64; 3]; 3]> {
        let (d, rr) = ctx.separation(self.position, r)?;
        let r3 = rr * rr * rr;
        let r5 = r3 * rr * rr;
        let mut j = [[0.0; 3]; 3];
        for (i, row) in j.iter_mut().enumerate() {
            for (l, e) in row.iter_mut().enumerate() {
                let delta = if i == l { 1.0 } else { 0.0 };
                *e = self.charge * (delta / r3 - 3.0 * d[i] * d[l] / r5);
            }
        }
        Ok(j)
    }
}

fn apply(j: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    Vec3::new(
        j[0][0] * v.x + j[0][1] * v.y + j[0][2] * v.z,
        j[1][0] * v.x + j[1][1] * v.y + j[1][2] * v.z,
        j[2][0] * v.x + j[2][1] * v.y + j[2][2] * v.z,
    )
}

fn kinetic(m: f64, v: Vec3) -> f64 {
    0.5 * m * v.norm_squared()
}

fn split3(x: &[f64], i: usize) -> Vec3 {
    Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2])
}

// ---------------------------------------------------------------------------
// Mott-Schwinger

/// Interaction term by coupling the potentials of the dipole to the charge.
pub fn ms_interaction(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<f64> {
    let a = dipole_vector_potential(ctx, dipole.moment, dipole.position, charge.position)?;
    let phi = dipole_scalar_potential_moving(ctx, dipole.moment, dipole.velocity, dipole.position, charge.position)?;
    Ok(charge.charge / ctx.c() * charge.velocity.dot(a) - charge.charge * phi)
}

/// The same term by coupling μ·B + d·E of the moving dipole to the fields
/// of the charge, with d = v_μ × μ / c.
pub fn ms_interaction_field_route(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<f64> {
    let b = charge_magnetic_field(ctx, charge.charge, charge.velocity, charge.position, dipole.position)?;
    let e = coulomb_field(ctx, charge.charge, charge.position, dipole.position)?;
    let d = dipole.velocity.cross(dipole.moment) / ctx.c();
    Ok(dipole.moment.dot(b) + d.dot(e))
}

pub fn ms_lagrangian(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<f64> {
    Ok(kinetic(charge.mass, charge.velocity) + kinetic(dipole.mass, dipole.velocity) + ms_interaction(ctx, charge, dipole)?)
}

/// Closed-form constrained accelerations `(a_q, a_μ)`; the two forces are
/// equal and opposite.
pub fn ms_accelerations(ctx: &Context, charge: &PointCharge, dipole: &MagneticDipole) -> Result<(Vec3, Vec3)> {
    let f = force_on_charge_from_loop(ctx, charge, dipole)?;
    Ok((f / charge.mass, -f / dipole.mass))
}

/// Coordinates: charge (x, y, z), then dipole (x, y, z).
pub fn ms_system(ctx: Context, charge: PointCharge, dipole: MagneticDipole) -> Result<LagrangianSystem> {
    let length = (charge.position - dipole.position).norm();
    let speed = charge.velocity.norm().max(dipole.velocity.norm()).max(1e-6 * ctx.c());
    LagrangianSystem::new(
        LagrangianSystem::cartesian_labels(&["charge", "dipole"]),
        vec![charge.mass, charge.mass, charge.mass, dipole.mass, dipole.mass, dipole.mass],
        length,
        speed,
        move |q, v| {
            let c = PointCharge::new(charge.charge, charge.mass, split3(q, 0), split3(v, 0));
            let d = MagneticDipole::new(dipole.moment, dipole.mass, split3(q, 1), split3(v, 1));
            ms_interaction(&ctx, &c, &d)
        },
    )
}

/// Coordinates: body 1 (x, y, z), then body 2.
pub fn darwin_system(ctx: Context, s: TwoBodyState) -> Result<LagrangianSystem> {
    let (b1, b2) = (s.body1, s.body2);
    let length = (b1.position - b2.position).norm();
    let speed = b1.velocity.norm().max(b2.velocity.norm()).max(1e-6 * ctx.c());
    LagrangianSystem::new(
        LagrangianSystem::cartesian_labels(&["body1", "body2"]),
        vec![b1.mass, b1.mass, b1.mass, b2.mass, b2.mass, b2.mass],
        length,
        speed,
        move |q, v| {
            let st = TwoBodyState::new(
                PointCharge::new(b1.charge, b1.mass, split3(q, 0), split3(v, 0)),
                PointCharge::new(b2.charge, b2.mass, split3(q, 1), split3(v, 1)),
            );
            let t = kinetic(b1.mass, st.body1.velocity) + kinetic(b2.mass, st.body2.velocity);
            Ok(darwin_lagrangian(&ctx, &st)? - t)
        },
    )
}

// ---------------------------------------------------------------------------
// Aharonov-Bohm

/// (2κq/c)(v_q − v_s)·[ẑ × ρ̄]/ρ², ρ̄ the in-plane offset of the charge from
/// the axis and κ the solenoid moment per unit length.
pub fn ab_interaction(ctx: &Context, charge: &PointCharge, s: &LineSolenoid) -> Result<f64> {
    let (rho, r) = ctx.axial_separation(s.axis_point, charge.position)?;
    let kappa = ctx.moment_density.per_length(s.flux, &ctx.units);
    Ok(2.0 * kappa * charge.charge / ctx.c() * (charge.velocity - s.velocity).dot(Vec3::Z.cross(rho)) / (r * r))
}

/// `line_mass` is the mass given to the solenoid as a dynamic body.
pub fn ab_lagrangian(ctx: &Context, charge: &PointCharge, s: &LineSolenoid, line_mass: f64) -> Result<f64> {
    Ok(kinetic(charge.mass, charge.velocity) + kinetic(line_mass, s.velocity) + ab_interaction(ctx, charge, s)?)
}

/// Zero for both bodies: the interaction G = ẑ×ρ̄/ρ² is curl-free off the
/// axis, so its Euler–Lagrange contribution cancels identically.
pub fn ab_accelerations(ctx: &Context, charge: &PointCharge, s: &LineSolenoid) -> Result<(Vec3, Vec3)> {
    ctx.axial_separation(s.axis_point, charge.position)?;
    Ok((Vec3::ZERO, Vec3::ZERO))
}

/// Coordinates: charge (x, y, z), then solenoid (x, y, z).
pub fn ab_system(ctx: Context, charge: PointCharge, s: LineSolenoid, line_mass: f64) -> Result<LagrangianSystem> {
    let length = (charge.position - s.axis_point).in_plane().norm();
    let speed = charge.velocity.norm().max(s.velocity.norm()).max(1e-6 * ctx.c());
    LagrangianSystem::new(
        LagrangianSystem::cartesian_labels(&["charge", "solenoid"]),
        vec![charge.mass, charge.mass, charge.mass, line_mass, line_mass, line_mass],
        length,
        speed,
        move |q, v| {
            let c = PointCharge::new(charge.charge, charge.mass, split3(q, 0), split3(v, 0));
            let mut sol = s;
            sol.axis_point = split3(q, 1);
            sol.velocity = split3(v, 1);
            ab_interaction(&ctx, &c, &sol)
        },
    )
}

// ---------------------------------------------------------------------------
// Aharonov-Casher

/// (2λ/c)(v_w − v_μ)·[μ × (r_w − r_μ)]/ρ² with in-plane r_w − r_μ.
pub fn ac_interaction(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge) -> Result<f64> {
    let (d, r) = ctx.axial_separation(w.axis_point, dipole.position)?;
    let rw_minus_rmu = -d;
    Ok(2.0 * w.density / ctx.c() * (w.velocity - dipole.velocity).dot(dipole.moment.cross(rw_minus_rmu)) / (r * r))
}

/// (1/c)(v_μ − v_w)·(μ × E_w).
pub fn ac_interaction_field_form(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge) -> Result<f64> {
    let e = wire_electric_field(ctx, w, dipole.position)?;
    Ok((dipole.velocity - w.velocity).dot(dipole.moment.cross(e)) / ctx.c())
}

pub fn ac_lagrangian(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge, line_mass: f64) -> Result<f64> {
    Ok(kinetic(dipole.mass, dipole.velocity) + kinetic(line_mass, w.velocity) + ac_interaction(ctx, dipole, w)?)
}

/// Zero for both bodies when μ is parallel to the wire. A tilted moment
/// is outside the modelled geometry and is rejected.
pub fn ac_accelerations(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge) -> Result<(Vec3, Vec3)> {
    ctx.axial_separation(w.axis_point, dipole.position)?;
    let mu = dipole.moment;
    if mu.in_plane().norm() > 1e-12 * mu.norm() {
        return Err(Error::OutOfRegime(
            "closed-form A-C accelerations assume a moment parallel to the wire; use ac_system".into(),
        ));
    }
    Ok((Vec3::ZERO, Vec3::ZERO))
}

/// Coordinates: dipole (x, y, z), then wire (x, y, z).
pub fn ac_system(ctx: Context, dipole: MagneticDipole, w: LineCharge, line_mass: f64) -> Result<LagrangianSystem> {
    let length = (dipole.position - w.axis_point).in_plane().norm();
    let speed = dipole.velocity.norm().max(w.velocity.norm()).max(1e-6 * ctx.c());
    LagrangianSystem::new(
        LagrangianSystem::cartesian_labels(&["dipole", "wire"]),
        vec![dipole.mass, dipole.mass, dipole.mass, line_mass, line_mass, line_mass],
        length,
        speed,
        move |q, v| {
            let d = MagneticDipole::new(dipole.moment, dipole.mass, split3(q, 0), split3(v, 0));
            let mut wire = w;
            wire.axis_point = split3(q, 1);
            wire.velocity = split3(v, 1);
            ac_interaction(&ctx, &d, &wire)
        },
    )
}

/// A dipole of fixed moment in a static field: L = ½mv² + (1/c) v·(μ×E).
pub fn dipole_in_field_system<F: ElectricField + Clone + 'static>(
    ctx: Context,
    mu: Vec3,
    mass: f64,
    field: F,
    length_scale: f64,
    velocity_scale: f64,
) -> Result<LagrangianSystem> {
    LagrangianSystem::new(
        LagrangianSystem::cartesian_labels(&["dipole"]),
        vec![mass; 3],
        length_scale,
        velocity_scale,
        move |q, v| {
            let e = field.field(&ctx, split3(q, 0))?;
            Ok(split3(v, 0).dot(mu.cross(e)) / ctx.c())
        },
    )
}

// ---------------------------------------------------------------------------
// Hamiltonian and hidden momentum

/// Which form of the single-dipole Hamiltonian to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HamiltonianForm {
    /// p²/2m − (1/mc) μ·(E×p): the quadratic (μ×E)² term dropped.
    #[default]
    Truncated,
    /// (p − μ×E/c)²/2m, the exact Legendre transform of the Lagrangian.
    Exact,
}

pub fn ac_hamiltonian(
    ctx: &Context,
    r: Vec3,
    p: Vec3,
    mu: Vec3,
    field: &dyn ElectricField,
    mass: f64,
    form: HamiltonianForm,
) -> Result<f64> {
    let e = field.field(ctx, r)?;
    Ok(match form {
        HamiltonianForm::Truncated => p.norm_squared() / (2.0 * mass) - mu.dot(e.cross(p)) / (mass * ctx.c()),
        HamiltonianForm::Exact => (p - mu.cross(e) / ctx.c()).norm_squared() / (2.0 * mass),
    })
}

pub fn ac_hamiltonian_system<F: ElectricField + Clone + 'static>(
    ctx: Context,
    mu: Vec3,
    mass: f64,
    field: F,
    form: HamiltonianForm,
    length_scale: f64,
    momentum_scale: f64,
) -> Result<HamiltonianSystem> {
    HamiltonianSystem::new(
        LagrangianSystem::cartesian_labels(&["dipole"]),
        length_scale,
        momentum_scale,
        move |r, p| ac_hamiltonian(&ctx, split3(r, 0), split3(p, 0), mu, &field, mass, form),
    )
}

/// Acceleration from finite-difference Hamilton equations.
#[allow(clippy::too_many_arguments)]
pub fn hamilton_accelerations<F: ElectricField + Clone + 'static>(
    ctx: &Context,
    r: Vec3,
    p: Vec3,
    mu: Vec3,
    field: F,
    mass: f64,
    form: HamiltonianForm,
    cfg: &StepConfig,
) -> Result<Vec3> {
    let e = field.field(ctx, r)?;
    let grad = field_gradient_norm(ctx, &field, r)?;
    // Length over which E changes appreciably; |r| when E is uniform.
    let length = if grad > 0.0 && e.norm() > 0.0 { e.norm() / grad } else { r.norm().max(1.0) };
    let pscale = p.norm().max((mu.cross(e) / ctx.c()).norm()).max(f64::MIN_POSITIVE);
    let sys = ac_hamiltonian_system(*ctx, mu, mass, field, form, length, pscale)?;
    let flow = sys.flow(&r.to_array(), &p.to_array(), cfg)?;
    Ok(split3(&flow.rddot, 0))
}

fn field_gradient_norm(ctx: &Context, field: &dyn ElectricField, r: Vec3) -> Result<f64> {
    let j = field.jacobian(ctx, r)?;
    Ok(j.iter().flatten().map(|x| x * x).sum::<f64>().sqrt())
}

/// −(1/mc)(μ·∇)(v×E) = −(1/mc) v × (J μ), J = ∂E/∂x.
pub fn moment_gradient_acceleration(
    ctx: &Context,
    r: Vec3,
    v: Vec3,
    mu: Vec3,
    field: &dyn ElectricField,
    mass: f64,
) -> Result<Vec3> {
    let j = field.jacobian(ctx, r)?;
    Ok(-v.cross(apply(&j, mu)) / (mass * ctx.c()))
}

/// m a = ∇(μ·B′) − (1/c) d/dt(μ×E) with B′ = −v×E/c the field in the rest
/// frame of the dipole, evaluated term by term. For a curl- and
/// divergence-free E this equals [`moment_gradient_acceleration`].
pub fn hidden_momentum_accelerations(ctx: &Context, dipole: &MagneticDipole, field: &dyn ElectricField) -> Result<Vec3> {
    let j = field.jacobian(ctx, dipole.position)?;
    let (mu, v, c) = (dipole.moment, dipole.velocity, ctx.c());
    let column = |l: usize| Vec3::new(j[0][l], j[1][l], j[2][l]);
    // ∂_l [μ·B′] = −(1/c) μ·(v × ∂_l E)
    let grad = Vec3::new(
        -mu.dot(v.cross(column(0))) / c,
        -mu.dot(v.cross(column(1))) / c,
        -mu.dot(v.cross(column(2))) / c,
    );
    let hidden_rate = mu.cross(apply(&j, v)) / c;
    Ok((grad - hidden_rate) / dipole.mass)
}

/// Hidden momentum of a dipole in an electric field, μ×E/c.
pub fn dipole_hidden_momentum(ctx: &Context, mu: Vec3, e: Vec3) -> Vec3 {
    mu.cross(e) / ctx.c()
}

/// Legendre-transform consistency for a dipole next to a stationary wire.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreReport {
    /// ∂L/∂v by differencing.
    pub canonical_momentum: Vec3,
    /// |∂L/∂v − (mv + μ×E/c)|.
    pub momentum_residual: f64,
    /// p·v − L
    pub legendre_energy: f64,
    pub exact_hamiltonian: f64,
    pub truncated_hamiltonian: f64,
    /// |p·v − L − H_exact| / |H_exact|
    pub exact_residual: f64,
    /// |μ×E|²/2mc², the term the truncated form drops.
    pub dropped_term: f64,
}

pub fn legendre_check(ctx: &Context, dipole: &MagneticDipole, w: &LineCharge, cfg: &StepConfig) -> Result<LegendreReport> {
    if w.velocity != Vec3::ZERO {
        return Err(Error::InvalidInput("the Legendre check needs a stationary wire".into()));
    }
    let e = wire_electric_field(ctx, w, dipole.position)?;
    let m = dipole.mass;
    let (r, v) = (dipole.position, dipole.velocity);
    let sys = dipole_in_field_system(
        *ctx,
        dipole.moment,
        m,
        *w,
        (r - w.axis_point).in_plane().norm(),
        v.norm().max(1e-6 * ctx.c()),
    )?;
    let pd = Vec3::from(<[f64; 3]>::try_from(sys.canonical_momenta(&r.to_array(), &v.to_array(), cfg)?.as_slice()).unwrap());
    let hidden = dipole_hidden_momentum(ctx, dipole.moment, e);
    let p = v * m + hidden;
    let lagrangian = kinetic(m, v) + ac_interaction_field_form(ctx, dipole, w)?;
    let legendre_energy = p.dot(v) - lagrangian;
    let exact = ac_hamiltonian(ctx, r, p, dipole.moment, w, m, HamiltonianForm::Exact)?;
    let truncated = ac_hamiltonian(ctx, r, p, dipole.moment, w, m, HamiltonianForm::Truncated)?;
    Ok(LegendreReport {
        canonical_momentum: pd,
        momentum_residual: (pd - p).norm(),
        legendre_energy,
        exact_hamiltonian: exact,
        truncated_hamiltonian: truncated,
        exact_residual: (legendre_energy - exact).abs() / exact.abs().max(f64::MIN_POSITIVE),
        dropped_term: hidden.norm_squared() / (2.0 * m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::darwin::darwin_accelerations;
    use crate::lagrangian::numeric_euler_lagrange;
    use crate::model::MomentDensity;
    use crate::quadrature::{integrate_mapped, QuadConfig};
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand::rngs::StdRng {
        rand::rngs::StdRng::seed_from_u64(seed)
    }

    fn rvec(r: &mut impl Rng, s: f64) -> Vec3 {
        Vec3::new(r.gen_range(-s..s), r.gen_range(-s..s), r.gen_range(-s..s))
    }

    fn random_ms(r: &mut impl Rng) -> (PointCharge, MagneticDipole) {
        let q = PointCharge::new(r.gen_range(-2.0..2.0), r.gen_range(0.5..2.0), rvec(r, 1.0), rvec(r, 3.0));
        let mut pos = rvec(r, 1.0);
        if (pos - q.position).norm() < 0.5 {
            pos = q.position + Vec3::new(0.6, -0.3, 0.4);
        }
        let d = MagneticDipole::new(rvec(r, 1.5), r.gen_range(0.5..2.0), pos, rvec(r, 3.0));
        (q, d)
    }

    fn vec_of(x: &[f64], i: usize) -> Vec3 {
        split3(x, i)
    }

    #[test]
    fn ms_routes_agree() {
        let ctx = Context::nondimensional(30.0);
        let mut r = rng(71);
        for _ in 0..100 {
            let (q, d) = random_ms(&mut r);
            let a = ms_interaction(&ctx, &q, &d).unwrap();
            let b = ms_interaction_field_route(&ctx, &q, &d).unwrap();
            assert!((a - b).abs() <= 1e-13 * a.abs().max(b.abs()) + 1e-300, "{a} vs {b}");
        }
    }

    #[test]
    fn ms_kinetic_only_cases() {
        let ctx = Context::nondimensional(30.0);
        let v = Vec3::new(0.3, 0.1, -0.2);
        let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, v);
        let d = MagneticDipole::new(Vec3::Z, 2.0, Vec3::new(0.5, 0.5, 1.0), v);
        assert!(ms_interaction(&ctx, &q, &d).unwrap().abs() < 1e-17);
        let d = MagneticDipole::new(Vec3::Z, 2.0, Vec3::Z * 2.0, Vec3::X);
        assert!(ms_interaction(&ctx, &q, &d).unwrap().abs() < 1e-16);
        let (aq, am) = ms_accelerations(&ctx, &q, &MagneticDipole::new(Vec3::Z, 2.0, Vec3::X, v)).unwrap();
        assert_eq!((aq, am), (Vec3::ZERO, Vec3::ZERO));
    }

    #[test]
    fn ms_forces_pair_and_match_numeric_el() {
        let ctx = Context::nondimensional(30.0);
        let mut r = rng(73);
        for _ in 0..20 {
            let (q, d) = random_ms(&mut r);
            let (aq, am) = ms_accelerations(&ctx, &q, &d).unwrap();
            let fq = aq * q.mass;
            let fm = am * d.mass;
            assert!((fq + fm).norm() <= 1e-12 * fm.norm());
            let sys = ms_system(ctx, q, d).unwrap();
            let x = [q.position.to_array(), d.position.to_array()].concat();
            let v = [q.velocity.to_array(), d.velocity.to_array()].concat();
            let a = numeric_euler_lagrange(&sys, &x, &v, &StepConfig::default()).unwrap();
            assert!(vec_of(&a, 0).approx_eq(aq, 1e-12, 1e-6), "{} vs {aq}", vec_of(&a, 0));
            assert!(vec_of(&a, 1).approx_eq(am, 1e-12, 1e-6));
        }
    }

    #[test]
    fn numeric_el_reproduces_darwin_solver() {
        let mut r = rng(79);
        for _ in 0..10 {
            let c = r.gen_range(20.0..60.0);
            let ctx = Context::nondimensional(c);
            let s = TwoBodyState::new(
                PointCharge::new(r.gen_range(-2.0..2.0), r.gen_range(0.5..2.0), Vec3::ZERO, rvec(&mut r, 3.0)),
                PointCharge::new(r.gen_range(-2.0..2.0), r.gen_range(0.5..2.0), Vec3::new(1.0, 0.3, -0.2), rvec(&mut r, 3.0)),
            );
            let sys = darwin_system(ctx, s).unwrap();
            let x = [s.body1.position.to_array(), s.body2.position.to_array()].concat();
            let v = [s.body1.velocity.to_array(), s.body2.velocity.to_array()].concat();
            let a = numeric_euler_lagrange(&sys, &x, &v, &StepConfig::default()).unwrap();
            let exact = darwin_accelerations(&ctx, &s).unwrap();
            assert!(vec_of(&a, 0).approx_eq(exact.a1, 1e-12, 1e-6));
            assert!(vec_of(&a, 1).approx_eq(exact.a2, 1e-12, 1e-6));
        }
    }

    #[test]
    fn ab_interaction_is_z_integral_of_ms() {
        let mut r = rng(83);
        for density in [MomentDensity::Gaussian, MomentDensity::Printed] {
            let ctx = Context::nondimensional(20.0).with_moment_density(density);
            for _ in 0..10 {
                let s = LineSolenoid::new(r.gen_range(0.5..3.0), rvec(&mut r, 1.0), 1.0, rvec(&mut r, 2.0));
                let mut pos = rvec(&mut r, 2.0);
                if (pos - s.axis_point).in_plane().norm() < 0.4 {
                    pos += Vec3::X;
                }
                let q = PointCharge::new(r.gen_range(-2.0..2.0), 1.0, pos, rvec(&mut r, 3.0));
                let kappa = density.per_length(s.flux, &ctx.units);
                let oracle = integrate_mapped(
                    |z| {
                        let d = MagneticDipole::new(Vec3::Z * kappa, 1.0, s.axis_point + Vec3::Z * z, s.velocity);
                        ms_interaction(&ctx, &q, &d)
                    },
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    q.position.z,
                    1.0,
                    &QuadConfig::with_rel_tol(1e-12),
                )
                .unwrap()
                .value;
                let l = ab_interaction(&ctx, &q, &s).unwrap();
                assert!((l - oracle).abs() < 1e-9 * l.abs().max(1e-12), "{l} vs {oracle}");
            }
        }
    }

    #[test]
    fn ab_stationary_solenoid_reduces_to_vector_potential() {
        use crate::model::solenoid_vector_potential;
        let ctx = Context::nondimensional(20.0);
        let s = LineSolenoid::stationary(2.5, Vec3::new(0.2, 0.1, 0.0));
        let q = PointCharge::new(1.3, 1.0, Vec3::new(1.0, -0.7, 0.4), Vec3::new(0.5, 2.0, -1.0));
        let a = solenoid_vector_potential(&ctx, &s, q.position).unwrap();
        let want = q.charge / ctx.c() * q.velocity.dot(a);
        assert!((ab_interaction(&ctx, &q, &s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn ac_forms_agree() {
        let ctx = Context::nondimensional(20.0);
        let mut r = rng(89);
        for _ in 0..100 {
            let w = LineCharge::new(r.gen_range(-2.0..2.0), rvec(&mut r, 1.0), 1.0, rvec(&mut r, 2.0));
            let mut pos = rvec(&mut r, 2.0);
            if (pos - w.axis_point).in_plane().norm() < 0.3 {
                pos += Vec3::Y;
            }
            let d = MagneticDipole::new(rvec(&mut r, 1.5), 1.0, pos, rvec(&mut r, 3.0));
            let a = ac_interaction(&ctx, &d, &w).unwrap();
            let b = ac_interaction_field_form(&ctx, &d, &w).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-300);
        }
        let w = LineCharge::new(1.0, Vec3::ZERO, 1.0, Vec3::X);
        let d = MagneticDipole::new(Vec3::Z, 1.0, Vec3::Y, Vec3::X);
        assert_eq!(ac_interaction(&ctx, &d, &w).unwrap(), 0.0);
    }

    #[test]
    fn constrained_ab_and_ac_forces_vanish_by_differencing() {
        let ctx = Context::nondimensional(20.0);
        let mut r = rng(97);
        for _ in 0..20 {
            let s = LineSolenoid::new(2.0, Vec3::ZERO, 3.0, Vec3::new(0.4, -0.2, 0.0));
            let rho = r.gen_range(0.5..3.0);
            let th = r.gen_range(0.0..std::f64::consts::TAU);
            let q = PointCharge::new(1.0, 1.0, Vec3::new(rho * th.cos(), rho * th.sin(), 0.3), rvec(&mut r, 3.0));
            let sys = ab_system(ctx, q, s, 3.0).unwrap();
            let x = [q.position.to_array(), s.axis_point.to_array()].concat();
            let v = [q.velocity.to_array(), s.velocity.to_array()].concat();
            let a = numeric_euler_lagrange(&sys, &x, &v, &StepConfig::default()).unwrap();
            let naive = 2.0 * ctx.moment_density.per_length(2.0, &ctx.units) * q.velocity.norm() / (ctx.c() * rho * rho);
            assert!(a.iter().all(|x| x.abs() < 1e-8 * naive), "{a:?}");

            let w = LineCharge::new(1.5, Vec3::ZERO, 3.0, Vec3::new(-0.3, 0.5, 0.0));
            let d = MagneticDipole::new(Vec3::Z * 0.8, 1.0, q.position, rvec(&mut r, 3.0));
            let sys = ac_system(ctx, d, w, 3.0).unwrap();
            let x = [d.position.to_array(), w.axis_point.to_array()].concat();
            let v = [d.velocity.to_array(), w.velocity.to_array()].concat();
            let a = numeric_euler_lagrange(&sys, &x, &v, &StepConfig::default()).unwrap();
            let naive = 2.0 * 1.5 * 0.8 * (d.velocity - w.velocity).norm() / (ctx.c() * rho * rho);
            assert!(a.iter().all(|x| x.abs() < 1e-8 * naive), "{a:?}");
        }
    }

    #[test]
    fn tilted_moment_ac_is_not_force_free() {
        let ctx = Context::nondimensional(20.0);
        let w = LineCharge::stationary(1.0, Vec3::ZERO);
        let d = MagneticDipole::new(Vec3::new(0.6, 0.0, 0.8), 1.0, Vec3::new(1.0, 0.5, 0.0), Vec3::new(0.0, 2.0, 0.0));
        assert!(matches!(ac_accelerations(&ctx, &d, &w), Err(Error::OutOfRegime(_))));
        let sys = ac_system(ctx, d, w, 1.0).unwrap();
        let x = [d.position.to_array(), w.axis_point.to_array()].concat();
        let v = [d.velocity.to_array(), w.velocity.to_array()].concat();
        let a = numeric_euler_lagrange(&sys, &x, &v, &StepConfig::default()).unwrap();
        assert!(vec_of(&a, 0).norm() > 1e-4);
    }

    #[test]
    fn hamiltonian_and_hidden_momentum_vanish_in_ac_geometry() {
        let ctx = Context::nondimensional(50.0);
        let w = LineCharge::stationary(1.2, Vec3::ZERO);
        let d = MagneticDipole::new(Vec3::Z * 0.7, 2.0, Vec3::new(1.0, -0.4, 0.3), Vec3::new(0.5, 1.5, 0.0));
        assert_eq!(moment_gradient_acceleration(&ctx, d.position, d.velocity, d.moment, &w, d.mass).unwrap(), Vec3::ZERO);
        assert!(hidden_momentum_accelerations(&ctx, &d, &w).unwrap().norm() < 1e-16);
        let still = MagneticDipole::new(Vec3::new(0.3, 0.2, 0.7), 2.0, d.position, Vec3::ZERO);
        assert_eq!(hidden_momentum_accelerations(&ctx, &still, &w).unwrap(), Vec3::ZERO);
    }

    #[test]
    fn hidden_momentum_chain_equals_final_line() {
        let ctx = Context::nondimensional(40.0);
        let mut r = rng(101);
        for _ in 0..30 {
            let field = StaticCharge {
                charge: r.gen_range(-2.0..2.0),
                position: rvec(&mut r, 0.5),
            };
            let pos = field.position + rvec(&mut r, 1.0).normalized().unwrap() * r.gen_range(0.8..2.0);
            let d = MagneticDipole::new(rvec(&mut r, 1.0), 1.5, pos, rvec(&mut r, 2.0));
            let chain = hidden_momentum_accelerations(&ctx, &d, &field).unwrap();
            let last = moment_gradient_acceleration(&ctx, d.position, d.velocity, d.moment, &field, d.mass).unwrap();
            assert!(chain.approx_eq(last, 1e-14, 1e-10), "{chain} vs {last}");
        }
    }

    #[test]
    fn exact_hamilton_flow_matches_lagrangian_and_first_order_form() {
        let ctx = Context::nondimensional(40.0);
        let mut r = rng(103);
        for _ in 0..10 {
            let field = StaticCharge {
                charge: r.gen_range(0.5..2.0),
                position: Vec3::ZERO,
            };
            let pos = rvec(&mut r, 1.0).normalized().unwrap() * r.gen_range(1.0..2.0);
            let (mu, m, v) = (rvec(&mut r, 1.0), 1.3, rvec(&mut r, 2.0));
            let e = field.field(&ctx, pos).unwrap();
            let p = v * m + dipole_hidden_momentum(&ctx, mu, e);
            let cfg = StepConfig::default();
            let ham = hamilton_accelerations(&ctx, pos, p, mu, field, m, HamiltonianForm::Exact, &cfg).unwrap();
            let sys = dipole_in_field_system(ctx, mu, m, field, pos.norm(), v.norm()).unwrap();
            let el = numeric_euler_lagrange(&sys, &pos.to_array(), &v.to_array(), &cfg).unwrap();
            let el = Vec3::from(<[f64; 3]>::try_from(el.as_slice()).unwrap());
            let first = moment_gradient_acceleration(&ctx, pos, v, mu, &field, m).unwrap();
            assert!(ham.approx_eq(el, 1e-12, 1e-6), "{ham} vs {el}");
            assert!(el.approx_eq(first, 1e-12, 1e-6), "{el} vs {first}");
        }
    }

    #[test]
    fn truncated_flow_differs_by_dropped_gradient() {
        let ctx = Context::nondimensional(40.0);
        let field = StaticCharge {
            charge: 1.5,
            position: Vec3::ZERO,
        };
        let (pos, mu, m, v) = (Vec3::new(1.2, 0.4, -0.5), Vec3::new(0.3, -0.6, 0.8), 1.1, Vec3::new(0.7, -1.2, 0.4));
        let e = field.field(&ctx, pos).unwrap();
        let p = v * m + dipole_hidden_momentum(&ctx, mu, e);
        let cfg = StepConfig::default();
        let exact = hamilton_accelerations(&ctx, pos, p, mu, field, m, HamiltonianForm::Exact, &cfg).unwrap();
        let trunc = hamilton_accelerations(&ctx, pos, p, mu, field, m, HamiltonianForm::Truncated, &cfg).unwrap();
        // Truncated H = exact H − |μ×E|²/2mc², which adds ∇|μ×E|²/(2m²c²).
        let sq = |x: Vec3| dipole_hidden_momentum(&ctx, mu, field.field(&ctx, x).unwrap()).norm_squared();
        let h = 1e-5;
        let grad = Vec3::new(
            sq(pos + Vec3::X * h) - sq(pos - Vec3::X * h),
            sq(pos + Vec3::Y * h) - sq(pos - Vec3::Y * h),
            sq(pos + Vec3::Z * h) - sq(pos - Vec3::Z * h),
        ) / (2.0 * h);
        let want = exact + grad / (2.0 * m * m);
        assert!(trunc.approx_eq(want, 1e-12, 1e-5), "{trunc} vs {want}");
        assert!((trunc - exact).norm() > 1e-8);
    }

    #[test]
    fn free_flow_without_moment() {
        let ctx = Context::nondimensional(40.0);
        let field = StaticCharge {
            charge: 1.0,
            position: Vec3::ZERO,
        };
        let a = hamilton_accelerations(
            &ctx,
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.3, 0.1, 0.0),
            Vec3::ZERO,
            field,
            1.0,
            HamiltonianForm::Truncated,
            &StepConfig::default(),
        )
        .unwrap();
        assert!(a.norm() < 1e-10);
    }

    #[test]
    fn legendre_report() {
        let ctx = Context::nondimensional(40.0);
        let w = LineCharge::stationary(1.3, Vec3::ZERO);
        let mut r = rng(107);
        for _ in 0..20 {
            let pos = Vec3::new(r.gen_range(0.5..2.0), r.gen_range(-2.0..2.0), r.gen_range(-1.0..1.0));
            let d = MagneticDipole::new(rvec(&mut r, 1.0), r.gen_range(0.5..2.0), pos, rvec(&mut r, 2.0));
            let rep = legendre_check(&ctx, &d, &w, &StepConfig::default()).unwrap();
            assert!(rep.exact_residual < 1e-13, "{}", rep.exact_residual);
            assert!(rep.momentum_residual < 1e-12 * rep.canonical_momentum.norm().max(1.0));
            assert!(rep.dropped_term > 0.0 || d.moment.cross(Vec3::X).norm() == 0.0);
            assert!((rep.exact_hamiltonian - rep.truncated_hamiltonian - rep.dropped_term).abs() < 1e-12 * rep.exact_hamiltonian.abs());
        }
        let d = MagneticDipole::new(Vec3::ZERO, 2.0, Vec3::X, Vec3::new(0.3, 0.4, 0.0));
        let rep = legendre_check(&ctx, &d, &w, &StepConfig::default()).unwrap();
        assert_eq!(rep.exact_hamiltonian, 0.25);
        assert_eq!(rep.truncated_hamiltonian, 0.25);
        assert_eq!(rep.dropped_term, 0.0);
    }
}
