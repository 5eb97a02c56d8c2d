//! Two-charge Darwin dynamics.

use nalgebra::{Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{darwin_vector_potential, Context, PointCharge};
use crate::vector::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyState {
    pub body1: PointCharge,
    pub body2: PointCharge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccelPair {
    pub a1: Vec3,
    pub a2: Vec3,
}

/// Relative geometry shared by all the two-body formulas.
struct Pair {
    /// r̄ = r̄₁ − r̄₂
    d: Vec3,
    r: f64,
    rhat: Vec3,
    /// q₁q₂/2c²
    k: f64,
}

impl TwoBodyState {
    pub fn new(body1: PointCharge, body2: PointCharge) -> Self {
        TwoBodyState { body1, body2 }
    }

    /// Bodies 1 and 2 exchanged.
    pub fn swapped(&self) -> Self {
        TwoBodyState::new(self.body2, self.body1)
    }

    pub fn validate(&self, ctx: &Context) -> Result<()> {
        self.body1.validate(&ctx.units)?;
        self.body2.validate(&ctx.units)?;
        self.pair(ctx).map(|_| ())
    }

    fn pair(&self, ctx: &Context) -> Result<Pair> {
        let (d, r) = ctx.separation(self.body2.position, self.body1.position)?;
        let c = ctx.c();
        Ok(Pair {
            d,
            r,
            rhat: d / r,
            k: self.body1.charge * self.body2.charge / (2.0 * c * c),
        })
    }

    /// The Feynman configuration: body 1 at the origin moving along x̂,
    /// body 2 at r x̂ moving along ŷ, equal charges and masses.
    pub fn feynman(q: f64, m: f64, r: f64, v: f64) -> Self {
        TwoBodyState::new(
            PointCharge::new(q, m, Vec3::ZERO, Vec3::X * v),
            PointCharge::new(q, m, Vec3::X * r, Vec3::Y * v),
        )
    }

    pub fn mechanical_momentum(&self) -> Vec3 {
        self.body1.velocity * self.body1.mass + self.body2.velocity * self.body2.mass
    }
}

pub fn darwin_lagrangian(ctx: &Context, s: &TwoBodyState) -> Result<f64> {
    let p = s.pair(ctx)?;
    let (b1, b2) = (&s.body1, &s.body2);
    let kinetic = 0.5 * b1.mass * b1.velocity.norm_squared() + 0.5 * b2.mass * b2.velocity.norm_squared();
    let coulomb = b1.charge * b2.charge / p.r;
    let magnetic = p.k / p.r
        * (b1.velocity.dot(b2.velocity) + b1.velocity.dot(p.rhat) * b2.velocity.dot(p.rhat));
    Ok(kinetic - coulomb + magnetic)
}

/// Legendre transform Σ p·v − L of the Darwin Lagrangian.
pub fn darwin_energy(ctx: &Context, s: &TwoBodyState) -> Result<f64> {
    let p = s.pair(ctx)?;
    let (b1, b2) = (&s.body1, &s.body2);
    let kinetic = 0.5 * b1.mass * b1.velocity.norm_squared() + 0.5 * b2.mass * b2.velocity.norm_squared();
    let magnetic = p.k / p.r
        * (b1.velocity.dot(b2.velocity) + b1.velocity.dot(p.rhat) * b2.velocity.dot(p.rhat));
    Ok(kinetic + b1.charge * b2.charge / p.r + magnetic)
}

/// ∂L/∂v̄ᵢ for both bodies.
pub fn canonical_momenta(ctx: &Context, s: &TwoBodyState) -> Result<(Vec3, Vec3)> {
    let (b1, b2) = (&s.body1, &s.body2);
    let c = ctx.c();
    let a2_at_1 = darwin_vector_potential(ctx, b2.charge, b2.velocity, b2.position, b1.position)?;
    let a1_at_2 = darwin_vector_potential(ctx, b1.charge, b1.velocity, b1.position, b2.position)?;
    Ok((
        b1.velocity * b1.mass + a2_at_1 * (b1.charge / c),
        b2.velocity * b2.mass + a1_at_2 * (b2.charge / c),
    ))
}

/// Total canonical minus total mechanical momentum.
pub fn interaction_field_momentum(ctx: &Context, s: &TwoBodyState) -> Result<Vec3> {
    let p = s.pair(ctx)?;
    let w = s.body1.velocity + s.body2.velocity;
    Ok((w + p.rhat * w.dot(p.rhat)) * (p.k / p.r))
}

/// Σ r̄ᵢ × p̄ᵢ with canonical momenta.
pub fn canonical_angular_momentum(ctx: &Context, s: &TwoBodyState, origin: Vec3) -> Result<Vec3> {
    let (p1, p2) = canonical_momenta(ctx, s)?;
    Ok((s.body1.position - origin).cross(p1) + (s.body2.position - origin).cross(p2))
}

/// ∂L/∂r̄₁; ∂L/∂r̄₂ is its negative.
fn position_gradient(p: &Pair, s: &TwoBodyState) -> Vec3 {
    let (v1, v2) = (s.body1.velocity, s.body2.velocity);
    let (d, r) = (p.d, p.r);
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let q1q2 = s.body1.charge * s.body2.charge;
    d * (q1q2 / r3)
        + (d * (-v1.dot(v2) / r3) - d * (3.0 * v1.dot(d) * v2.dot(d) / r5)
            + (v2 * v1.dot(d) + v1 * v2.dot(d)) / r3)
            * p.k
}

/// Velocity-only part of d/dt of the interaction momentum k[v̄ⱼ/r + r̄(v̄ⱼ·r̄)/r³].
fn convective_term(p: &Pair, vj: Vec3, rdot: Vec3) -> Vec3 {
    let (d, r) = (p.d, p.r);
    let r3 = r * r * r;
    let r5 = r3 * r * r;
    let rrd = d.dot(rdot);
    (vj * (-rrd / r3) + (rdot * vj.dot(d) + d * vj.dot(rdot)) / r3 - d * (3.0 * vj.dot(d) * rrd / r5)) * p.k
}

fn coupling_block(p: &Pair) -> [[f64; 3]; 3] {
    let mut b = [[0.0; 3]; 3];
    let u = p.rhat;
    for (i, row) in b.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            *e = p.k / p.r * (delta + u[i] * u[j]);
        }
    }
    b
}

/// Solves the coupled Euler–Lagrange equations for both accelerations.
pub fn darwin_accelerations(ctx: &Context, s: &TwoBodyState) -> Result<AccelPair> {
    let p = s.pair(ctx)?;
    let (m1, m2) = (s.body1.mass, s.body2.mass);
    // The block matrix loses positive definiteness once the largest coupling
    // eigenvalue 2|k|/r reaches the geometric mean of the masses.
    let coupling = 2.0 * p.k.abs() / p.r;
    if coupling >= (m1 * m2).sqrt() * (1.0 - 1e-12) {
        return Err(Error::SingularSystem(format!(
            "out of regime: coupling q1q2/(c^2 r) = {coupling:e} reaches sqrt(m1 m2)"
        )));
    }
    let rdot = s.body1.velocity - s.body2.velocity;
    let g1 = position_gradient(&p, s);
    let rhs1 = g1 - convective_term(&p, s.body2.velocity, rdot);
    let rhs2 = -g1 - convective_term(&p, s.body1.velocity, rdot);

    let b = coupling_block(&p);
    let mut m = Matrix6::<f64>::zeros();
    for i in 0..3 {
        m[(i, i)] = m1;
        m[(i + 3, i + 3)] = m2;
        for j in 0..3 {
            m[(i, j + 3)] = b[i][j];
            m[(i + 3, j)] = b[i][j];
        }
    }
    let rhs = Vector6::new(rhs1.x, rhs1.y, rhs1.z, rhs2.x, rhs2.y, rhs2.z);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("Darwin acceleration matrix".into()))?;
    let out = AccelPair {
        a1: Vec3::new(sol[0], sol[1], sol[2]),
        a2: Vec3::new(sol[3], sol[4], sol[5]),
    };
    if !(out.a1.is_finite() && out.a2.is_finite()) {
        return Err(Error::SingularSystem("non-finite accelerations".into()));
    }
    Ok(out)
}

/// Euler–Lagrange residuals d/dt ∂L/∂v̄ᵢ − ∂L/∂r̄ᵢ for given accelerations.
pub fn euler_lagrange_residuals(ctx: &Context, s: &TwoBodyState, a: &AccelPair) -> Result<(Vec3, Vec3)> {
    let p = s.pair(ctx)?;
    let rdot = s.body1.velocity - s.body2.velocity;
    let g1 = position_gradient(&p, s);
    let coupled = |aj: Vec3| (aj + p.rhat * aj.dot(p.rhat)) * (p.k / p.r);
    let lhs1 = a.a1 * s.body1.mass + coupled(a.a2) + convective_term(&p, s.body2.velocity, rdot);
    let lhs2 = a.a2 * s.body2.mass + coupled(a.a1) + convective_term(&p, s.body1.velocity, rdot);
    Ok((lhs1 - g1, lhs2 + g1))
}

/// Planar accelerations of the Feynman configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeynmanAccelerations {
    pub a1x: f64,
    pub a1y: f64,
    pub a2x: f64,
    pub a2y: f64,
}

impl FeynmanAccelerations {
    pub fn as_array(&self) -> [f64; 4] {
        [self.a1x, self.a1y, self.a2x, self.a2y]
    }
}

/// Exact Darwin accelerations of the Feynman configuration.
pub fn feynman_accelerations_closed_form(q: f64, m: f64, r: f64, v: f64, c: f64) -> Result<FeynmanAccelerations> {
    let eps = q * q / (m * c * c * r);
    let beta2 = v * v / (c * c);
    let full = 1.0 - eps * eps;
    let quarter = 1.0 - eps * eps / 4.0;
    if !(full > 0.0 && quarter > 0.0) {
        return Err(Error::OutOfRegime(format!(
            "q^2/(m c^2 r) = {eps:e} must be below 1"
        )));
    }
    let coulomb = q * q / (m * r * r);
    Ok(FeynmanAccelerations {
        a1x: -coulomb * ((1.0 + beta2 / 2.0) + eps * (1.0 - beta2)) / full,
        a1y: -coulomb * beta2 / quarter,
        a2x: coulomb * ((1.0 - beta2) + eps * (1.0 + beta2 / 2.0)) / full,
        a2y: v * v / (2.0 * r) * eps * eps / quarter,
    })
}

/// Leading-order forms of the Feynman accelerations, valid when
/// q²/(mc²r) ≪ v²/c².
pub fn feynman_accelerations_first_order(q: f64, m: f64, r: f64, v: f64, c: f64) -> FeynmanAccelerations {
    let beta2 = v * v / (c * c);
    let coulomb = q * q / (m * r * r);
    FeynmanAccelerations {
        a1x: -coulomb * (1.0 + beta2 / 2.0),
        a1y: -coulomb * beta2,
        a2x: coulomb * (1.0 - beta2),
        a2y: 0.0,
    }
}

/// Lorentz-force accelerations of the Feynman configuration with γ kept exact.
pub fn lorentz_expanded_accelerations(q: f64, m: f64, r: f64, v: f64, c: f64) -> Result<FeynmanAccelerations> {
    if !(v.abs() < c) {
        return Err(Error::OutOfRegime(format!("speed {v} is not below c = {c}")));
    }
    let gamma = 1.0 / (1.0 - v * v / (c * c)).sqrt();
    let coulomb = q * q / (m * r * r);
    Ok(FeynmanAccelerations {
        a1x: -gamma * coulomb,
        a1y: -gamma * coulomb * v * v / (c * c),
        a2x: coulomb / (gamma * gamma),
        a2y: 0.0,
    })
}
