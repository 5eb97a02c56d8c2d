//! Momentum stored in static electromagnetic fields, the hidden momentum of
//! current loops, and the surface-integral form of total momentum for
//! stationary distributions.
//!
//! Volume integrals use a partition of unity: a log-radial spherical grid
//! around every point source and one global spherical grid (mapped to
//! infinity when the region is unbounded) for the remainder.

use std::f64::consts::{PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::constrained::dipole_hidden_momentum;
use crate::error::{Error, Result};
use crate::model::{
    charge_magnetic_field, coulomb_field, coulomb_potential, dipole_magnetic_field, Context, CurrentLoop,
};
use crate::quadrature::{integrate, QuadConfig};
use crate::vector::Vec3;

/// A point charge as a field source. `velocity` only feeds its magnetic
/// field; the electric field is always Coulomb.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChargeSource {
    pub charge: f64,
    pub position: Vec3,
    #[serde(default)]
    pub velocity: Vec3,
}

/// An ideal point magnetic dipole at rest.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleSource {
    pub moment: Vec3,
    pub position: Vec3,
}

/// Superposition of point charges, ideal dipoles and an imposed uniform
/// electric field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldConfiguration {
    #[serde(default)]
    pub charges: Vec<ChargeSource>,
    #[serde(default)]
    pub dipoles: Vec<DipoleSource>,
    #[serde(default)]
    pub uniform_electric: Vec3,
}

impl FieldConfiguration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_charge(mut self, charge: f64, position: Vec3) -> Self {
        self.charges.push(ChargeSource {
            charge,
            position,
            velocity: Vec3::ZERO,
        });
        self
    }

    pub fn with_moving_charge(mut self, charge: f64, position: Vec3, velocity: Vec3) -> Self {
        self.charges.push(ChargeSource {
            charge,
            position,
            velocity,
        });
        self
    }

    pub fn with_dipole(mut self, moment: Vec3, position: Vec3) -> Self {
        self.dipoles.push(DipoleSource { moment, position });
        self
    }

    pub fn with_uniform_electric(mut self, e: Vec3) -> Self {
        self.uniform_electric = e;
        self
    }

    pub fn is_static(&self) -> bool {
        self.charges.iter().all(|c| c.velocity == Vec3::ZERO)
    }

    pub fn electric(&self, ctx: &Context, r: Vec3) -> Result<Vec3> {
        let mut e = self.uniform_electric;
        for c in &self.charges {
            e += coulomb_field(ctx, c.charge, c.position, r)?;
        }
        Ok(e)
    }

    pub fn magnetic(&self, ctx: &Context, r: Vec3) -> Result<Vec3> {
        let mut b = Vec3::ZERO;
        for c in &self.charges {
            if c.velocity != Vec3::ZERO {
                b += charge_magnetic_field(ctx, c.charge, c.velocity, c.position, r)?;
            }
        }
        for d in &self.dipoles {
            b += dipole_magnetic_field(ctx, d.moment, d.position, r)?;
        }
        Ok(b)
    }

    /// Electrostatic potential, with the uniform field contributing −E·r.
    pub fn potential(&self, ctx: &Context, r: Vec3) -> Result<f64> {
        let mut phi = -self.uniform_electric.dot(r);
        for c in &self.charges {
            phi += coulomb_potential(ctx, c.charge, c.position, r)?;
        }
        Ok(phi)
    }

    /// Momentum density E×B/4πc.
    pub fn momentum_density(&self, ctx: &Context, r: Vec3) -> Result<Vec3> {
        Ok(self.electric(ctx, r)?.cross(self.magnetic(ctx, r)?) / (4.0 * PI * ctx.c()))
    }

    /// Flips every magnetic source.
    pub fn reversed_magnetic(&self) -> Self {
        let mut out = self.clone();
        out.charges.iter_mut().for_each(|c| c.velocity = -c.velocity);
        out.dipoles.iter_mut().for_each(|d| d.moment = -d.moment);
        out
    }

    /// Flips every charge and the uniform field. For moving charges this
    /// also flips their magnetic field.
    pub fn reversed_electric(&self) -> Self {
        let mut out = self.clone();
        out.charges.iter_mut().for_each(|c| c.charge = -c.charge);
        out.uniform_electric = -out.uniform_electric;
        out
    }

    pub fn singular_points(&self) -> Vec<Vec3> {
        self.charges
            .iter()
            .map(|c| c.position)
            .chain(self.dipoles.iter().map(|d| d.position))
            .collect()
    }

    /// Σ μ×E/c over the dipoles.
    pub fn dipole_hidden_momentum(&self, ctx: &Context) -> Result<Vec3> {
        let mut p = Vec3::ZERO;
        for d in &self.dipoles {
            p += dipole_hidden_momentum(ctx, d.moment, self.electric(ctx, d.position)?);
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrationRegion {
    /// Ball radius; `None` integrates over all space.
    pub radius: Option<f64>,
    /// Defaults to the centroid of the point sources.
    pub center: Option<Vec3>,
    /// Gauss–Legendre nodes per radial panel and per polar direction at
    /// the coarse level; the fine level doubles everything.
    pub resolution: usize,
    /// Tolerance on the two-resolution difference, relative to the result.
    pub rel_tol: f64,
    /// Length used for a lone source, where no separation sets the scale.
    pub scale: Option<f64>,
}

impl Default for IntegrationRegion {
    fn default() -> Self {
        IntegrationRegion {
            radius: None,
            center: None,
            resolution: 8,
            rel_tol: 0.02,
            scale: None,
        }
    }
}

impl IntegrationRegion {
    pub fn ball(center: Vec3, radius: f64) -> Self {
        IntegrationRegion {
            radius: Some(radius),
            center: Some(center),
            ..Default::default()
        }
    }

    pub fn with_resolution(mut self, n: usize) -> Self {
        self.resolution = n;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMomentum {
    /// Numerical volume integral of E×B/4πc.
    pub volume: Vec3,
    /// Analytic delta-function part of each ideal dipole's field,
    /// (2/3c) E × μ.
    pub contact: Vec3,
    /// Momentum carried near the distant sources of the uniform field,
    /// (1/3c) E₀ × μ per dipole. Zero without a uniform field.
    pub remote_source: Vec3,
    /// |fine − coarse|
    pub error: f64,
    pub exclusion_radii: Vec<f64>,
    /// Estimated contribution of the excluded balls. Infinite when the
    /// integrand is not integrable there (self-field of a moving charge).
    pub exclusion_estimate: f64,
    pub evaluations: usize,
}

impl FieldMomentum {
    pub fn total(&self) -> Vec3 {
        self.volume + self.contact + self.remote_source
    }
}

fn gauss(n: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("positive")).as_node_weight_pairs().to_vec()
}

/// Composite Gauss–Legendre nodes on [a, b].
fn composite(a: f64, b: f64, panels: usize, rule: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let h = (b - a) / panels as f64;
    (0..panels)
        .flat_map(|k| {
            let lo = a + k as f64 * h;
            rule.iter().map(move |&(x, w)| (lo + 0.5 * h * (x + 1.0), 0.5 * h * w))
        })
        .collect()
}

/// Product rule on the unit sphere: Gauss–Legendre in cos θ, trapezoid in φ.
fn sphere_rule(n: usize) -> Vec<(Vec3, f64)> {
    let nphi = 2 * n;
    let dphi = TAU / nphi as f64;
    let mut out = Vec::with_capacity(n * nphi);
    for (u, w) in gauss(n) {
        let s = (1.0 - u * u).sqrt();
        for k in 0..nphi {
            let phi = (k as f64 + 0.5) * dphi;
            out.push((Vec3::new(s * phi.cos(), s * phi.sin(), u), w * dphi));
        }
    }
    out
}

/// 1 inside t ≤ 1/2, 0 beyond t ≥ 1, C^∞ between.
fn bump(t: f64) -> f64 {
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let h = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let s = 2.0 * t - 1.0;
    h(1.0 - s) / (h(1.0 - s) + h(s))
}

struct Layout {
    center: Vec3,
    points: Vec<Vec3>,
    radii: Vec<f64>,
    /// End of the finite global radial range.
    reach: f64,
    outer: Option<f64>,
}

impl Layout {
    fn new(ctx: &Context, cfg: &FieldConfiguration, region: &IntegrationRegion) -> Result<Self> {
        let points = cfg.singular_points();
        let center = region.center.unwrap_or_else(|| {
            if points.is_empty() {
                Vec3::ZERO
            } else {
                points.iter().copied().sum::<Vec3>() / points.len() as f64
            }
        });
        let lone = region.scale.unwrap_or(ctx.singular_radius * 1e9);
        let mut radii = Vec::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            let sep = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (*p - *q).norm())
                .fold(f64::INFINITY, f64::min);
            if sep < ctx.singular_radius {
                return Err(Error::CoincidentPoints {
                    distance: sep,
                    radius: ctx.singular_radius,
                });
            }
            let mut b = if sep.is_finite() { 0.4 * sep } else { lone };
            if let Some(rr) = region.radius {
                let room = rr - (*p - center).norm();
                if room <= 0.0 {
                    return Err(Error::InvalidInput(format!("source at {p} lies outside the integration ball")));
                }
                b = b.min(0.9 * room);
            }
            radii.push(b);
        }
        let spread = points
            .iter()
            .zip(&radii)
            .map(|(p, b)| (*p - center).norm() + b)
            .fold(0.0, f64::max)
            .max(lone * f64::from(u8::from(points.is_empty())));
        let reach = match region.radius {
            Some(r) => r,
            None => 2.0 * spread.max(f64::MIN_POSITIVE),
        };
        Ok(Layout {
            center,
            points,
            radii,
            reach,
            outer: region.radius,
        })
    }

    fn global_weight(&self, x: Vec3) -> f64 {
        1.0 - self
            .points
            .iter()
            .zip(&self.radii)
            .map(|(p, b)| bump((x - *p).norm() / b))
            .sum::<f64>()
    }
}

struct Sum {
    value: Vec3,
    magnitude: f64,
    evaluations: usize,
}

impl Sum {
    fn add(&mut self, f: Vec3, w: f64) {
        self.value += f * w;
        self.magnitude += f.norm() * w.abs();
        self.evaluations += 1;
    }
}

/// Angular integral of r³·g over the shell of radius r about p, weighted by
/// the local bump.
fn local_shell(
    ctx: &Context,
    cfg: &FieldConfiguration,
    p: Vec3,
    b: f64,
    r: f64,
    sphere: &[(Vec3, f64)],
    sum: &mut Sum,
) -> Result<Vec3> {
    let w = bump(r / b);
    let mut shell = Vec3::ZERO;
    for &(dir, wd) in sphere {
        let f = cfg.momentum_density(ctx, p + dir * r)?;
        shell += f * wd;
        sum.magnitude += f.norm() * wd * w * r * r * r;
        sum.evaluations += 1;
    }
    Ok(shell * (w * r * r * r))
}

fn volume_pass(
    ctx: &Context,
    cfg: &FieldConfiguration,
    layout: &Layout,
    r_ex: &[f64],
    n: usize,
) -> Result<Sum> {
    let rule = gauss(n);
    let sphere = sphere_rule(n);
    let mut sum = Sum {
        value: Vec3::ZERO,
        magnitude: 0.0,
        evaluations: 0,
    };
    for ((p, &b), &rex) in layout.points.iter().zip(&layout.radii).zip(r_ex) {
        let (s0, s1) = (rex.ln(), b.ln());
        let panels = ((s1 - s0) / 1.5).ceil().max(1.0) as usize;
        for (s, ws) in composite(s0, s1, panels, &rule) {
            let shell = local_shell(ctx, cfg, *p, b, s.exp(), &sphere, &mut sum)?;
            sum.value += shell * ws;
        }
    }
    let smallest = layout.radii.iter().copied().fold(layout.reach, f64::min);
    // Small bumps far from the centre subtend small angles.
    let n_ang = ((n as f64) * (layout.reach / (4.0 * smallest)).max(1.0)).ceil() as usize;
    let global_sphere = sphere_rule(n_ang);
    let panels = ((layout.reach / (0.5 * smallest)).ceil() as usize).clamp(2, 64);
    let global = |r: f64, wr: f64, sum: &mut Sum| -> Result<()> {
        for &(dir, wd) in &global_sphere {
            let x = layout.center + dir * r;
            let w = layout.global_weight(x);
            if w > 0.0 {
                sum.add(cfg.momentum_density(ctx, x)?, w * wd * wr * r * r);
            }
        }
        Ok(())
    };
    for (r, wr) in composite(0.0, layout.reach, panels, &rule) {
        global(r, wr, &mut sum)?;
    }
    if layout.outer.is_none() {
        // r = R/(1 − t)
        for (t, wt) in composite(0.0, 1.0, 4, &rule) {
            let r = layout.reach / (1.0 - t);
            global(r, wt * layout.reach / ((1.0 - t) * (1.0 - t)), &mut sum)?;
        }
    }
    Ok(sum)
}

/// Estimated contribution of the ball r < r_ex about p, assuming the
/// shell integrand follows a power law near the source.
fn exclusion_estimate(ctx: &Context, cfg: &FieldConfiguration, p: Vec3, b: f64, r_ex: f64, n: usize) -> Result<f64> {
    let sphere = sphere_rule(n);
    let mut scratch = Sum {
        value: Vec3::ZERO,
        magnitude: 0.0,
        evaluations: 0,
    };
    let g1 = local_shell(ctx, cfg, p, b, r_ex, &sphere, &mut scratch)?.norm();
    let g2 = local_shell(ctx, cfg, p, b, 2.0 * r_ex, &sphere, &mut scratch)?.norm();
    if g1 == 0.0 {
        return Ok(0.0);
    }
    // g ~ r^k in the log variable, so the excluded part is g(r_ex)/k.
    let k = (g2 / g1).log2();
    Ok(if k > 0.25 { g1 / k } else { f64::INFINITY })
}

/// (1/4πc)∫E×B dτ over the region, plus the analytic dipole contact terms.
pub fn em_field_momentum(ctx: &Context, cfg: &FieldConfiguration, region: &IntegrationRegion) -> Result<FieldMomentum> {
    if region.resolution < 2 {
        return Err(Error::InvalidInput("resolution must be at least 2".into()));
    }
    if region.radius.is_none() && cfg.uniform_electric != Vec3::ZERO && !cfg.is_static() {
        return Err(Error::InvalidInput(
            "a uniform field crossed with a moving charge's field diverges over all space".into(),
        ));
    }
    let layout = Layout::new(ctx, cfg, region)?;
    let mut contact = Vec3::ZERO;
    let mut remote = Vec3::ZERO;
    for d in &cfg.dipoles {
        contact += cfg.electric(ctx, d.position)?.cross(d.moment) * (2.0 / (3.0 * ctx.c()));
        remote += cfg.uniform_electric.cross(d.moment) * (1.0 / (3.0 * ctx.c()));
    }

    let n = region.resolution;
    let mut factor = 1e-4;
    loop {
        let r_ex: Vec<f64> = layout.radii.iter().map(|b| b * factor).collect();
        let coarse = volume_pass(ctx, cfg, &layout, &r_ex, n)?;
        let fine = volume_pass(ctx, cfg, &layout, &r_ex, 2 * n)?;
        let error = (fine.value - coarse.value).norm();
        let mut excluded = 0.0;
        for ((p, b), rex) in layout.points.iter().zip(&layout.radii).zip(&r_ex) {
            excluded += exclusion_estimate(ctx, cfg, *p, *b, *rex, 2 * n)?;
        }
        let scale = (fine.value + contact).norm().max(1e-9 * fine.magnitude);
        let target = region.rel_tol * scale;
        if excluded.is_finite() && excluded > 0.5 * target && factor > 1e-9 {
            factor *= 1e-2;
            continue;
        }
        if error > target {
            return Err(Error::NonConvergence(format!(
                "field momentum: two-resolution difference {error:e} exceeds {target:e}"
            )));
        }
        return Ok(FieldMomentum {
            volume: fine.value,
            contact,
            remote_source: remote,
            error,
            exclusion_radii: r_ex,
            exclusion_estimate: excluded,
            evaluations: coarse.evaluations + fine.evaluations,
        });
    }
}

/// −(I/c²)∮φ dl around the loop.
pub fn hidden_momentum_line_current(
    ctx: &Context,
    potential: impl Fn(Vec3) -> Result<f64>,
    lp: &CurrentLoop,
    cfg: &QuadConfig,
) -> Result<Vec3> {
    let c = ctx.c();
    let r = integrate(
        |th| {
            let (x, t) = lp.point(th);
            Ok(t * (potential(x)? * lp.radius))
        },
        0.0,
        TAU,
        cfg,
    )?;
    Ok(r.value * (-lp.current / (c * c)))
}

/// Least-squares fit y = A·x^k on log-log axes; returns (k, A).
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidInput("a power-law fit needs at least three points".into()));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidInput("power-law fit needs positive finite data".into()));
    }
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("power-law fit needs distinct abscissae".into()));
    }
    let k = sxy / sxx;
    Ok((k, (my - k * mx).exp()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub radii: Vec<f64>,
    /// (1/c)∮ xᵢ T^{j0} dS_j on each sphere.
    pub surface: Vec<Vec3>,
    /// (R/4πc)∮|E×B| dS, the bound whose decay the argument relies on.
    pub bound: Vec<f64>,
    /// Fitted power of |surface| against radius; `None` when it vanishes
    /// identically.
    pub surface_exponent: Option<f64>,
    /// Same for `bound`.
    pub bound_exponent: Option<f64>,
    pub field_momentum: Vec3,
    pub hidden_momentum: Vec3,
    /// |p_em + p_hid| / max(|p_em|, |p_hid|), zero when both vanish.
    pub residual: f64,
}

/// Surface-integral form of the momentum of a static configuration,
/// evaluated on spheres about the region centre, together with the volume
/// field momentum and the dipoles' hidden momentum.
///
/// For a sphere enclosing every source the surface term equals the field
/// momentum inside it plus the hidden momentum, so it tends to
/// p_em + p_hid as the radius grows.
pub fn stationary_lemma_check(
    ctx: &Context,
    cfg: &FieldConfiguration,
    radii: &[f64],
    region: &IntegrationRegion,
) -> Result<LemmaReport> {
    if radii.len() < 3 {
        return Err(Error::InvalidInput("need at least three radii for a decay fit".into()));
    }
    if !cfg.is_static() {
        return Err(Error::OutOfRegime("the surface-integral form needs a static configuration".into()));
    }
    let layout = Layout::new(ctx, cfg, region)?;
    let sphere = sphere_rule(4 * region.resolution);
    let mut surface = Vec::with_capacity(radii.len());
    let mut bound = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("radius {r} must be positive")));
        }
        let mut s = Vec3::ZERO;
        let mut m = 0.0;
        for &(dir, w) in &sphere {
            let x = dir * r;
            let g = cfg.momentum_density(ctx, layout.center + x)?;
            s += x * (g.dot(dir) * w * r * r);
            m += g.norm() * w * r * r * r;
        }
        surface.push(s);
        bound.push(m);
    }
    let fit = |ys: &[f64]| -> Result<Option<f64>> {
        if ys.iter().all(|y| *y > 0.0) {
            Ok(Some(fit_power_law(radii, ys)?.0))
        } else {
            Ok(None)
        }
    };
    let norms: Vec<f64> = surface.iter().map(|s| s.norm()).collect();
    let surface_exponent = fit(&norms)?;
    let bound_exponent = fit(&bound)?;
    let field_momentum = em_field_momentum(ctx, cfg, region)?.total();
    let hidden_momentum = cfg.dipole_hidden_momentum(ctx)?;
    let denom = field_momentum.norm().max(hidden_momentum.norm());
    let residual = if denom == 0.0 {
        0.0
    } else {
        (field_momentum + hidden_momentum).norm() / denom
    };
    Ok(LemmaReport {
        radii: radii.to_vec(),
        surface,
        bound,
        surface_exponent,
        bound_exponent,
        field_momentum,
        hidden_momentum,
        residual,
    })
}
