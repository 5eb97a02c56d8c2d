//! Unit conventions, body and source definitions, and the elementary
//! field/potential evaluators used by every other module.
//!
//! Everything here is in Gaussian (CGS) units. The speed of light and the
//! reduced Planck constant are carried in [`Units`] so that tests and
//! nondimensional scenarios can pick `q = m = r = 1` together with a large
//! `c`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vec3;

/// Speed of light in cm/s.
pub const SPEED_OF_LIGHT_CGS: f64 = 2.997_924_58e10;
/// Reduced Planck constant in erg s.
pub const HBAR_CGS: f64 = 1.054_571_8e-27;

/// Physical constants of the Gaussian system in use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub c: f64,
    pub hbar: f64,
}

impl Units {
    pub fn gaussian() -> Self {
        Units {
            c: SPEED_OF_LIGHT_CGS,
            hbar: HBAR_CGS,
        }
    }

    /// Gaussian-form equations with user-chosen `c` and `hbar`.
    pub fn nondimensional(c: f64, hbar: f64) -> Result<Self> {
        let u = Units { c, hbar };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidInput(format!("c must be positive, got {}", self.c)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "hbar must be positive, got {}",
                self.hbar
            )));
        }
        Ok(())
    }
}

impl Default for Units {
    fn default() -> Self {
        Units::gaussian()
    }
}

/// Magnetic moment per unit length assigned to a line solenoid of flux Φ.
///
/// `Gaussian` is Φ/4π, the value a Gaussian-units solenoid actually has; it
/// makes the integrated Lagrangian equal `(q/c)(v_q - v_s)·A_s` with the
/// standard flux-line potential. `Printed` is cΦ/4π, which reproduces the
/// integrated A-B Lagrangian prefactor qΦ/2π literally but rescales every
/// A-B interaction by `c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentDensity {
    #[default]
    Gaussian,
    Printed,
}

impl MomentDensity {
    /// Moment per unit length (erg/G/cm) for a solenoid of flux `flux`.
    pub fn per_length(self, flux: f64, units: &Units) -> f64 {
        match self {
            MomentDensity::Gaussian => flux / (4.0 * PI),
            MomentDensity::Printed => units.c * flux / (4.0 * PI),
        }
    }
}

/// Shared evaluation settings: constants, the singular-radius guard and the
/// solenoid moment-density convention.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub units: Units,
    /// Evaluators refuse source-field distances below this radius.
    pub singular_radius: f64,
    #[serde(default)]
    pub moment_density: MomentDensity,
}

impl Context {
    pub fn new(units: Units, characteristic_length: f64) -> Self {
        Context {
            units,
            singular_radius: 1e-9 * characteristic_length,
            moment_density: MomentDensity::default(),
        }
    }

    /// `c` and `hbar` chosen freely, characteristic length 1.
    pub fn nondimensional(c: f64) -> Self {
        Context::new(Units { c, hbar: 1.0 }, 1.0)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Self {
        self.units.hbar = hbar;
        self
    }

    pub fn with_moment_density(mut self, d: MomentDensity) -> Self {
        self.moment_density = d;
        self
    }

    #[inline]
    pub fn c(&self) -> f64 {
        self.units.c
    }

    #[inline]
    pub fn hbar(&self) -> f64 {
        self.units.hbar
    }

    /// Displacement `r_field - r_src` and its length, guarded.
    pub fn separation(&self, r_src: Vec3, r_field: Vec3) -> Result<(Vec3, f64)> {
        let d = r_field - r_src;
        let r = d.norm();
        if !(r >= self.singular_radius) || r == 0.0 {
            return Err(Error::CoincidentPoints {
                distance: r,
                radius: self.singular_radius,
            });
        }
        Ok((d, r))
    }

    /// In-plane displacement from a z-directed axis through `axis_point`.
    pub fn axial_separation(&self, axis_point: Vec3, r_field: Vec3) -> Result<(Vec3, f64)> {
        let d = (r_field - axis_point).in_plane();
        let rho = d.norm();
        if !(rho >= self.singular_radius) || rho == 0.0 {
            return Err(Error::OnAxis {
                distance: rho,
                radius: self.singular_radius,
            });
        }
        Ok((d, rho))
    }
}

impl Default for Context {
    fn default() -> Self {
        Context::new(Units::gaussian(), 1.0)
    }
}

/// The four physical systems the library models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    /// Two interacting point charges.
    Feynman,
    /// Point charge and point magnetic dipole.
    MottSchwinger,
    /// Point charge and line solenoid.
    #[serde(rename = "ab")]
    AharonovBohm,
    /// Magnetic dipole and line charge.
    #[serde(rename = "ac")]
    AharonovCasher,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Feynman => "feynman",
            System::MottSchwinger => "mott-schwinger",
            System::AharonovBohm => "ab",
            System::AharonovCasher => "ac",
        }
    }
}

impl std::fmt::Display for System {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn check_mass(m: f64, what: &str) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} must be positive, got {m}")))
    }
}

fn check_speed(v: Vec3, units: &Units) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite velocity {v}")));
    }
    if v.norm() >= units.c {
        return Err(Error::OutOfRegime(format!(
            "speed {} is not below c = {}",
            v.norm(),
            units.c
        )));
    }
    Ok(())
}

/// A point charge (statC, g, cm, cm/s).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCharge {
    pub charge: f64,
    pub mass: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl PointCharge {
    pub fn new(charge: f64, mass: f64, position: Vec3, velocity: Vec3) -> Self {
        PointCharge {
            charge,
            mass,
            position,
            velocity,
        }
    }

    pub fn validate(&self, units: &Units) -> Result<()> {
        check_mass(self.mass, "charge mass")?;
        if !self.position.is_finite() || !self.charge.is_finite() {
            return Err(Error::InvalidInput("non-finite point charge".into()));
        }
        check_speed(self.velocity, units)
    }
}

/// A point magnetic dipole carried by a body of mass `mass`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagneticDipole {
    pub moment: Vec3,
    pub mass: f64,
    pub position: Vec3,
    pub velocity: Vec3,
}

impl MagneticDipole {
    pub fn new(moment: Vec3, mass: f64, position: Vec3, velocity: Vec3) -> Self {
        MagneticDipole {
            moment,
            mass,
            position,
            velocity,
        }
    }

    pub fn validate(&self, units: &Units) -> Result<()> {
        check_mass(self.mass, "dipole mass")?;
        if !self.position.is_finite() || !self.moment.is_finite() {
            return Err(Error::InvalidInput("non-finite magnetic dipole".into()));
        }
        check_speed(self.velocity, units)
    }
}

/// Infinite ideal solenoid along ẑ. Only the in-plane axis position matters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSolenoid {
    /// Enclosed flux Φ_B (G cm²).
    pub flux: f64,
    /// A point on the axis; the z component is ignored.
    pub axis_point: Vec3,
    /// g/cm; only used when the solenoid is dynamic.
    pub mass_per_length: f64,
    /// In-plane velocity (v_z = 0).
    pub velocity: Vec3,
}

impl LineSolenoid {
    pub fn new(flux: f64, axis_point: Vec3, mass_per_length: f64, velocity: Vec3) -> Self {
        LineSolenoid {
            flux,
            axis_point: axis_point.in_plane(),
            mass_per_length,
            velocity: velocity.in_plane(),
        }
    }

    pub fn stationary(flux: f64, axis_point: Vec3) -> Self {
        LineSolenoid::new(flux, axis_point, 1.0, Vec3::ZERO)
    }

    pub fn validate(&self, units: &Units) -> Result<()> {
        check_mass(self.mass_per_length, "solenoid mass per length")?;
        if self.velocity.z != 0.0 {
            return Err(Error::InvalidInput("solenoid velocity must have v_z = 0".into()));
        }
        check_speed(self.velocity, units)
    }
}

/// Infinite straight line charge along ẑ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCharge {
    /// Linear charge density λ (statC/cm).
    pub density: f64,
    pub axis_point: Vec3,
    pub mass_per_length: f64,
    pub velocity: Vec3,
}

impl LineCharge {
    pub fn new(density: f64, axis_point: Vec3, mass_per_length: f64, velocity: Vec3) -> Self {
        LineCharge {
            density,
            axis_point: axis_point.in_plane(),
            mass_per_length,
            velocity: velocity.in_plane(),
        }
    }

    pub fn stationary(density: f64, axis_point: Vec3) -> Self {
        LineCharge::new(density, axis_point, 1.0, Vec3::ZERO)
    }

    pub fn validate(&self, units: &Units) -> Result<()> {
        check_mass(self.mass_per_length, "wire mass per length")?;
        if self.velocity.z != 0.0 {
            return Err(Error::InvalidInput("wire velocity must have v_z = 0".into()));
        }
        check_speed(self.velocity, units)
    }
}

/// Circular current loop of finite radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentLoop {
    pub radius: f64,
    /// Current in statA, circulating counterclockwise about `normal`.
    pub current: f64,
    pub center: Vec3,
    pub normal: Vec3,
}

impl CurrentLoop {
    pub fn new(radius: f64, current: f64, center: Vec3, normal: Vec3) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("loop radius must be positive, got {radius}")));
        }
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::InvalidInput("loop normal must be nonzero".into()))?;
        Ok(CurrentLoop {
            radius,
            current,
            center,
            normal,
        })
    }

    /// μ = I π ε² n̂ / c.
    pub fn moment(&self, units: &Units) -> Vec3 {
        self.normal * (self.current * PI * self.radius * self.radius / units.c)
    }

    /// Orthonormal in-plane basis (e1, e2) with e1 × e2 = n̂.
    pub fn basis(&self) -> (Vec3, Vec3) {
        let n = self.normal;
        let helper = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
        let e1 = (helper - n * helper.dot(n)).normalized().expect("nondegenerate helper");
        let e2 = n.cross(e1);
        (e1, e2)
    }

    /// Point on the loop and its unit tangent at angle `theta`.
    pub fn point(&self, theta: f64) -> (Vec3, Vec3) {
        let (e1, e2) = self.basis();
        let (s, c) = theta.sin_cos();
        let p = self.center + (e1 * c + e2 * s) * self.radius;
        let t = e1 * (-s) + e2 * c;
        (p, t)
    }
}

/// Darwin-form vector potential of a moving charge, (q/2rc)[v + r̂(v·r̂)].
pub fn darwin_vector_potential(
    ctx: &Context,
    q: f64,
    v: Vec3,
    r_src: Vec3,
    r_field: Vec3,
) -> Result<Vec3> {
    let (d, r) = ctx.separation(r_src, r_field)?;
    let rhat = d / r;
    Ok((v + rhat * v.dot(rhat)) * (q / (2.0 * r * ctx.c())))
}

/// Coulomb potential q/r.
pub fn coulomb_potential(ctx: &Context, q: f64, r_src: Vec3, r_field: Vec3) -> Result<f64> {
    let (_, r) = ctx.separation(r_src, r_field)?;
    Ok(q / r)
}

/// Coulomb field q r̄/r³.
pub fn coulomb_field(ctx: &Context, q: f64, r_src: Vec3, r_field: Vec3) -> Result<Vec3> {
    let (d, r) = ctx.separation(r_src, r_field)?;
    Ok(d * (q / (r * r * r)))
}

/// Magnetic field of a slowly moving charge, (q/c) v × r̄ / r³.
pub fn charge_magnetic_field(
    ctx: &Context,
    q: f64,
    v: Vec3,
    r_src: Vec3,
    r_field: Vec3,
) -> Result<Vec3> {
    let (d, r) = ctx.separation(r_src, r_field)?;
    Ok(v.cross(d) * (q / (ctx.c() * r * r * r)))
}

/// Point-dipole vector potential μ × r̄ / r³.
pub fn dipole_vector_potential(ctx: &Context, mu: Vec3, r_src: Vec3, r_field: Vec3) -> Result<Vec3> {
    let (d, r) = ctx.separation(r_src, r_field)?;
    Ok(mu.cross(d) / (r * r * r))
}

/// Scalar potential seen from a moving dipole, v_μ·(μ × r̄)/(c r³).
pub fn dipole_scalar_potential_moving(
    ctx: &Context,
    mu: Vec3,
    v_mu: Vec3,
    r_src: Vec3,
    r_field: Vec3,
) -> Result<f64> {
    let a = dipole_vector_potential(ctx, mu, r_src, r_field)?;
    Ok(v_mu.dot(a) / ctx.c())
}

/// Point-dipole magnetic field [3(μ·r̂)r̂ − μ]/r³ (no contact term).
pub fn dipole_magnetic_field(ctx: &Context, mu: Vec3, r_src: Vec3, r_field: Vec3) -> Result<Vec3> {
    let (d, r) = ctx.separation(r_src, r_field)?;
    let rhat = d / r;
    Ok((rhat * (3.0 * mu.dot(rhat)) - mu) / (r * r * r))
}

/// Flux-line vector potential (Φ/2π) ẑ × ρ̄ / ρ².
pub fn solenoid_vector_potential(ctx: &Context, s: &LineSolenoid, r_field: Vec3) -> Result<Vec3> {
    let (rho, r) = ctx.axial_separation(s.axis_point, r_field)?;
    Ok(Vec3::Z.cross(rho) * (s.flux / (2.0 * PI * r * r)))
}

/// Line-charge field 2λ ρ̂/ρ (in-plane, radial).
pub fn wire_electric_field(ctx: &Context, w: &LineCharge, r_field: Vec3) -> Result<Vec3> {
    let (rho, r) = ctx.axial_separation(w.axis_point, r_field)?;
    Ok(rho * (2.0 * w.density / (r * r)))
}

/// In-plane Jacobian ∂E_i/∂x_j of the line-charge field.
pub fn wire_field_jacobian(ctx: &Context, w: &LineCharge, r_field: Vec3) -> Result<[[f64; 3]; 3]> {
    let (rho, r) = ctx.axial_separation(w.axis_point, r_field)?;
    let k = 2.0 * w.density;
    let r2 = r * r;
    let p = [rho.x, rho.y];
    let mut j = [[0.0; 3]; 3];
    for i in 0..2 {
        for l in 0..2 {
            let delta = if i == l { 1.0 } else { 0.0 };
            j[i][l] = k * (delta / r2 - 2.0 * p[i] * p[l] / (r2 * r2));
        }
    }
    Ok(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn ctx(c: f64) -> Context {
        Context::nondimensional(c)
    }

    fn close(a: Vec3, b: Vec3) -> bool {
        a.approx_eq(b, 1e-12, 1e-9)
    }

    /// Central-difference curl, independent of any analytic field.
    fn numerical_curl(f: impl Fn(Vec3) -> Vec3, p: Vec3, h: f64) -> Vec3 {
        let d = |axis: Vec3| (f(p + axis * h) - f(p - axis * h)) / (2.0 * h);
        let (dx, dy, dz) = (d(Vec3::X), d(Vec3::Y), d(Vec3::Z));
        Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    fn random_vec(rng: &mut impl Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn darwin_potential_parallel_and_perpendicular() {
        let c = ctx(1.0);
        let a = darwin_vector_potential(&c, 1.0, Vec3::X, Vec3::ZERO, Vec3::X).unwrap();
        assert!(close(a, Vec3::X));
        let a = darwin_vector_potential(&c, 1.0, Vec3::Y, Vec3::ZERO, Vec3::X).unwrap();
        assert!(close(a, Vec3::new(0.0, 0.5, 0.0)));
    }

    #[test]
    fn darwin_potential_hand_evaluated() {
        // q=2, v=(1,1,0), r̄=(0,2,0), c=10: r̂=ŷ, v·r̂=1,
        // A = (2/(2·2·10)) [(1,1,0) + (0,1,0)] = 0.05·(1,2,0).
        let c = ctx(10.0);
        let a = darwin_vector_potential(&c, 2.0, Vec3::new(1.0, 1.0, 0.0), Vec3::ZERO, Vec3::new(0.0, 2.0, 0.0))
            .unwrap();
        assert!(close(a, Vec3::new(0.05, 0.1, 0.0)));
    }

    #[test]
    fn coincident_points_are_rejected() {
        let c = ctx(1.0);
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            darwin_vector_potential(&c, 1.0, Vec3::X, p, p),
            Err(Error::CoincidentPoints { .. })
        ));
        assert!(coulomb_potential(&c, 1.0, p, p + Vec3::X * 1e-12).is_err());
        assert!(dipole_magnetic_field(&c, Vec3::Z, p, p).is_err());
    }

    #[test]
    fn coulomb_values() {
        let c = ctx(1.0);
        assert_eq!(coulomb_potential(&c, 1.0, Vec3::ZERO, Vec3::X).unwrap(), 1.0);
        assert!((coulomb_potential(&c, -3.0, Vec3::ZERO, Vec3::new(3.0, 0.0, 0.0)).unwrap() + 1.0).abs() < 1e-15);
        assert!((coulomb_potential(&c, 2.0, Vec3::ZERO, Vec3::new(3.0, 4.0, 0.0)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn charge_field_cross_product_cases() {
        let c = ctx(3.0);
        let b = charge_magnetic_field(&c, 1.0, Vec3::X, Vec3::ZERO, Vec3::X * 2.0).unwrap();
        assert_eq!(b, Vec3::ZERO);
        let (v, bb) = (2.0, 1.5);
        let b = charge_magnetic_field(&c, 1.0, Vec3::X * v, Vec3::ZERO, Vec3::Y * bb).unwrap();
        assert!(close(b, Vec3::Z * (v / (3.0 * bb * bb))));
    }

    #[test]
    fn charge_field_is_curl_of_darwin_potential() {
        let c = ctx(7.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let q = rng.gen_range(-2.0..2.0);
            let v = random_vec(&mut rng, 3.0);
            let src = random_vec(&mut rng, 1.0);
            let mut p = random_vec(&mut rng, 3.0);
            if (p - src).norm() < 0.5 {
                p = src + Vec3::new(0.7, 0.4, -0.3);
            }
            let curl = numerical_curl(|x| darwin_vector_potential(&c, q, v, src, x).unwrap(), p, 1e-5);
            let b = charge_magnetic_field(&c, q, v, src, p).unwrap();
            assert!(curl.approx_eq(b, 1e-8, 1e-6), "curl {curl} vs B {b}");
        }
    }

    #[test]
    fn dipole_potential_cases() {
        let c = ctx(1.0);
        assert_eq!(dipole_vector_potential(&c, Vec3::X, Vec3::ZERO, Vec3::X * 2.0).unwrap(), Vec3::ZERO);
        assert!(close(dipole_vector_potential(&c, Vec3::Z, Vec3::ZERO, Vec3::X).unwrap(), Vec3::Y));
    }

    /// Ring of circulating charges with a neutralizing static background;
    /// only the moving charges contribute to A.
    fn ring_potential(c: &Context, mu: Vec3, center: Vec3, eps: f64, field: Vec3, n: usize) -> Vec3 {
        let normal = mu.normalized().unwrap();
        let lp = CurrentLoop::new(eps, 1.0, center, normal).unwrap();
        // Pick current so the loop moment equals |μ|.
        let current = mu.norm() * c.c() / (PI * eps * eps);
        let speed = 1.0;
        let total_charge = current * 2.0 * PI * eps / speed;
        let dq = total_charge / n as f64;
        (0..n)
            .map(|k| {
                let th = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                let (p, t) = lp.point(th);
                darwin_vector_potential(c, dq, t * speed, p, field).unwrap()
            })
            .sum()
    }

    #[test]
    fn dipole_potential_matches_ring_of_darwin_charges() {
        let c = ctx(5.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let mu = random_vec(&mut rng, 2.0);
            let center = random_vec(&mut rng, 0.5);
            let field = center + random_vec(&mut rng, 1.0).normalized().unwrap() * rng.gen_range(1.5..3.0);
            let eps = 0.02;
            let coarse = ring_potential(&c, mu, center, eps, field, 256);
            let fine = ring_potential(&c, mu, center, eps / 2.0, field, 256);
            let extrapolated = (fine * 4.0 - coarse) / 3.0;
            let exact = dipole_vector_potential(&c, mu, center, field).unwrap();
            assert!(extrapolated.approx_eq(exact, 1e-12, 1e-6), "{extrapolated} vs {exact}");
        }
    }

    #[test]
    fn moving_dipole_scalar_potential() {
        let c = ctx(1.0);
        let zero = dipole_scalar_potential_moving(&c, Vec3::Z, Vec3::ZERO, Vec3::ZERO, Vec3::X).unwrap();
        assert_eq!(zero, 0.0);
        // μ×r̄ = ẑ×x̂ = ŷ, v ∥ ŷ
        let one = dipole_scalar_potential_moving(&c, Vec3::Z, Vec3::Y, Vec3::ZERO, Vec3::X).unwrap();
        assert!((one - 1.0).abs() < 1e-15);
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let c = ctx(13.0);
        for _ in 0..20 {
            let (mu, v, p) = (random_vec(&mut rng, 1.0), random_vec(&mut rng, 1.0), random_vec(&mut rng, 4.0));
            let phi = dipole_scalar_potential_moving(&c, mu, v, Vec3::ZERO, p).unwrap();
            let a = dipole_vector_potential(&c, mu, Vec3::ZERO, p).unwrap();
            assert!((phi - v.dot(a) / 13.0).abs() <= 1e-15 * (1.0 + phi.abs()));
        }
    }

    #[test]
    fn dipole_field_axis_and_equator() {
        let c = ctx(1.0);
        let (mu, z) = (1.7, 2.0);
        let b = dipole_magnetic_field(&c, Vec3::Z * mu, Vec3::ZERO, Vec3::Z * z).unwrap();
        assert!(close(b, Vec3::Z * (2.0 * mu / (z * z * z))));
        let b = dipole_magnetic_field(&c, Vec3::Z * mu, Vec3::ZERO, Vec3::X * z).unwrap();
        assert!(close(b, Vec3::Z * (-mu / (z * z * z))));
    }

    #[test]
    fn dipole_field_is_curl_of_dipole_potential() {
        let c = ctx(1.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(17);
        for _ in 0..50 {
            let mu = random_vec(&mut rng, 2.0);
            let p = random_vec(&mut rng, 1.0).normalized().unwrap() * rng.gen_range(0.5..3.0);
            let curl = numerical_curl(|x| dipole_vector_potential(&c, mu, Vec3::ZERO, x).unwrap(), p, 1e-5);
            let b = dipole_magnetic_field(&c, mu, Vec3::ZERO, p).unwrap();
            assert!(curl.approx_eq(b, 1e-7, 1e-6), "{curl} vs {b}");
        }
    }

    #[test]
    fn dipole_field_point_symmetry() {
        let c = ctx(1.0);
        let mu = Vec3::new(0.3, -1.2, 0.8);
        let p = Vec3::new(0.4, 1.1, -0.7);
        let b1 = dipole_magnetic_field(&c, mu, Vec3::ZERO, p).unwrap();
        let b2 = dipole_magnetic_field(&c, mu, Vec3::ZERO, -p).unwrap();
        assert!(close(b1, b2));
    }

    #[test]
    fn solenoid_potential_value_and_axis_guard() {
        let c = ctx(1.0);
        let s = LineSolenoid::stationary(2.0 * PI, Vec3::ZERO);
        let a = solenoid_vector_potential(&c, &s, Vec3::new(0.0, 1.0, 5.0)).unwrap();
        assert!(close(a, -Vec3::X));
        assert!(matches!(
            solenoid_vector_potential(&c, &s, Vec3::new(0.0, 0.0, 3.0)),
            Err(Error::OnAxis { .. })
        ));
    }

    fn circulation(f: impl Fn(Vec3) -> Vec3, center: Vec3, radius: f64, n: usize) -> f64 {
        // Trapezoid rule on a periodic integrand.
        (0..n)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / n as f64;
                let p = center + Vec3::new(th.cos(), th.sin(), 0.0) * radius;
                let dl = Vec3::new(-th.sin(), th.cos(), 0.0) * radius;
                f(p).dot(dl)
            })
            .sum::<f64>()
            * (2.0 * PI / n as f64)
    }

    #[test]
    fn solenoid_circulation_equals_flux() {
        let c = ctx(1.0);
        let s = LineSolenoid::stationary(1.3, Vec3::new(0.2, -0.1, 0.0));
        let f = |p| solenoid_vector_potential(&c, &s, p).unwrap();
        let enclosing = circulation(f, Vec3::ZERO, 3.0, 400);
        assert!((enclosing - 1.3).abs() < 1e-12);
        let outside = circulation(f, Vec3::new(5.0, 0.0, 0.0), 3.0, 400);
        assert!(outside.abs() < 1e-12);
    }

    #[test]
    fn solenoid_potential_is_curl_free() {
        let c = ctx(1.0);
        let s = LineSolenoid::stationary(4.0, Vec3::ZERO);
        let mut rng = rand::rngs::StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let p = random_vec(&mut rng, 3.0);
            let rho = p.in_plane().norm();
            if rho < 0.3 {
                continue;
            }
            let curl = numerical_curl(|x| solenoid_vector_potential(&c, &s, x).unwrap(), p, 1e-5);
            assert!(curl.norm() < 1e-6 * 4.0 / (rho * rho));
        }
    }

    #[test]
    fn wire_field_values() {
        let c = ctx(1.0);
        let w = LineCharge::stationary(0.5, Vec3::ZERO);
        assert!(close(wire_electric_field(&c, &w, Vec3::X).unwrap(), Vec3::X));
        let w = LineCharge::stationary(1.0, Vec3::ZERO);
        assert!(close(wire_electric_field(&c, &w, Vec3::new(0.0, 2.0, 7.0)).unwrap(), Vec3::Y));
        assert!(wire_electric_field(&c, &w, Vec3::Z).is_err());
    }

    #[test]
    fn wire_jacobian_matches_differences() {
        let c = ctx(1.0);
        let w = LineCharge::stationary(0.8, Vec3::new(0.3, 0.1, 0.0));
        let p = Vec3::new(1.2, -0.7, 0.4);
        let j = wire_field_jacobian(&c, &w, p).unwrap();
        let h = 1e-6;
        for (l, axis) in [Vec3::X, Vec3::Y, Vec3::Z].into_iter().enumerate() {
            let d = (wire_electric_field(&c, &w, p + axis * h).unwrap()
                - wire_electric_field(&c, &w, p - axis * h).unwrap())
                / (2.0 * h);
            for i in 0..3 {
                assert!((d[i] - j[i][l]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn body_validation() {
        let u = Units::nondimensional(10.0, 1.0).unwrap();
        assert!(PointCharge::new(1.0, 0.0, Vec3::ZERO, Vec3::ZERO).validate(&u).is_err());
        assert!(PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::X * 10.0).validate(&u).is_err());
        assert!(MagneticDipole::new(Vec3::Z, 1.0, Vec3::ZERO, Vec3::X).validate(&u).is_ok());
        assert!(LineSolenoid::new(1.0, Vec3::ZERO, -1.0, Vec3::ZERO).validate(&u).is_err());
        assert!(Units::nondimensional(0.0, 1.0).is_err());
        assert!(CurrentLoop::new(0.0, 1.0, Vec3::ZERO, Vec3::Z).is_err());
    }

    #[test]
    fn moment_density_conventions() {
        let u = Units::nondimensional(10.0, 1.0).unwrap();
        let g = MomentDensity::Gaussian.per_length(4.0 * PI, &u);
        let p = MomentDensity::Printed.per_length(4.0 * PI, &u);
        assert!((g - 1.0).abs() < 1e-15);
        assert!((p - 10.0).abs() < 1e-13);
    }
}
