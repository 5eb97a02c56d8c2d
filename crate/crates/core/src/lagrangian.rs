//! Generic finite-difference Euler–Lagrange and Hamilton equations.
//!
//! A [`LagrangianSystem`] is `Σ ½ mᵢ vᵢ² + U(q, v)`. The kinetic part is
//! handled exactly and only the interaction `U` is differenced, which keeps
//! roundoff at the level of the interaction rather than the kinetic energy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Box<dyn Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync>;

/// Finite-difference controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    /// Step as a fraction of the characteristic scale.
    pub rel_step: f64,
    /// Largest tolerated disagreement between the h/2 and extrapolated
    /// estimates, relative to the size of the assembled terms.
    pub richardson_tol: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            rel_step: 1e-3,
            richardson_tol: 1e-3,
        }
    }
}

pub struct LagrangianSystem {
    pub labels: Vec<String>,
    /// Mass attached to each generalized coordinate.
    pub masses: Vec<f64>,
    pub length_scale: f64,
    pub velocity_scale: f64,
    interaction: ScalarFn,
}

impl std::fmt::Debug for LagrangianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianSystem")
            .field("labels", &self.labels)
            .field("masses", &self.masses)
            .finish()
    }
}

impl LagrangianSystem {
    pub fn new(
        labels: Vec<String>,
        masses: Vec<f64>,
        length_scale: f64,
        velocity_scale: f64,
        interaction: impl Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if labels.len() != masses.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} masses",
                labels.len(),
                masses.len()
            )));
        }
        if !(length_scale > 0.0 && velocity_scale > 0.0) {
            return Err(Error::InvalidInput("characteristic scales must be positive".into()));
        }
        Ok(LagrangianSystem {
            labels,
            masses,
            length_scale,
            velocity_scale,
            interaction: Box::new(interaction),
        })
    }

    /// Labels `prefix.x`, `prefix.y`, `prefix.z` for each named body.
    pub fn cartesian_labels(bodies: &[&str]) -> Vec<String> {
        bodies
            .iter()
            .flat_map(|b| ["x", "y", "z"].map(|c| format!("{b}.{c}")))
            .collect()
    }

    pub fn dof(&self) -> usize {
        self.masses.len()
    }

    pub fn kinetic(&self, v: &[f64]) -> f64 {
        self.masses.iter().zip(v).map(|(m, v)| 0.5 * m * v * v).sum()
    }

    pub fn interaction(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        (self.interaction)(q, v)
    }

    pub fn value(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        Ok(self.kinetic(v) + self.interaction(q, v)?)
    }

    fn check(&self, q: &[f64], v: &[f64]) -> Result<()> {
        if q.len() != self.dof() || v.len() != self.dof() {
            return Err(Error::DimensionMismatch(format!(
                "state has {}/{} components, system has {} coordinates",
                q.len(),
                v.len(),
                self.dof()
            )));
        }
        Ok(())
    }

    /// ∂L/∂v by central differences with one Richardson step.
    pub fn canonical_momenta(&self, q: &[f64], v: &[f64], cfg: &StepConfig) -> Result<Vec<f64>> {
        self.check(q, v)?;
        let h = cfg.rel_step * self.velocity_scale;
        let n = self.dof();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let d = |h: f64| -> Result<f64> {
                let mut vp = v.to_vec();
                let mut vm = v.to_vec();
                vp[i] += h;
                vm[i] -= h;
                Ok((self.interaction(q, &vp)? - self.interaction(q, &vm)?) / (2.0 * h))
            };
            let (coarse, fine) = (d(h)?, d(h / 2.0)?);
            let r = (4.0 * fine - coarse) / 3.0;
            out.push(self.masses[i] * v[i] + r);
        }
        Ok(out)
    }
}

/// Parts of the Euler–Lagrange system at one step size.
struct Assembly {
    w: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Magnitude of the terms feeding the right-hand side.
    rhs_scale: f64,
    w_scale: f64,
}

fn assemble(sys: &LagrangianSystem, q: &[f64], v: &[f64], hq: f64, hv: f64) -> Result<Assembly> {
    let n = sys.dof();
    let u = |q: &[f64], v: &[f64]| sys.interaction(q, v);
    let shifted = |base: &[f64], i: usize, h: f64| {
        let mut x = base.to_vec();
        x[i] += h;
        x
    };
    let u0 = u(q, v)?;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let up = u(q, &shifted(v, i, hv))?;
        let um = u(q, &shifted(v, i, -hv))?;
        w[(i, i)] = (up - 2.0 * u0 + um) / (hv * hv);
        for j in (i + 1)..n {
            let vpp = shifted(&shifted(v, i, hv), j, hv);
            let vpm = shifted(&shifted(v, i, hv), j, -hv);
            let vmp = shifted(&shifted(v, i, -hv), j, hv);
            let vmm = shifted(&shifted(v, i, -hv), j, -hv);
            let d = (u(q, &vpp)? - u(q, &vpm)? - u(q, &vmp)? + u(q, &vmm)?) / (4.0 * hv * hv);
            w[(i, j)] = d;
            w[(j, i)] = d;
        }
    }
    let mut grad = DVector::<f64>::zeros(n);
    let mut mixed_v = DVector::<f64>::zeros(n);
    for j in 0..n {
        let qp = shifted(q, j, hq);
        let qm = shifted(q, j, -hq);
        grad[j] = (u(&qp, v)? - u(&qm, v)?) / (2.0 * hq);
        if v[j] == 0.0 {
            continue;
        }
        for i in 0..n {
            let d = (u(&qp, &shifted(v, i, hv))? - u(&qp, &shifted(v, i, -hv))? - u(&qm, &shifted(v, i, hv))?
                + u(&qm, &shifted(v, i, -hv))?)
                / (4.0 * hq * hv);
            mixed_v[i] += d * v[j];
        }
    }
    let rhs_scale = grad.amax().max(mixed_v.amax());
    let w_scale = w.amax();
    for i in 0..n {
        w[(i, i)] += sys.masses[i];
    }
    Ok(Assembly {
        w,
        rhs: grad - mixed_v,
        rhs_scale,
        w_scale,
    })
}

/// Generalized accelerations from the Euler–Lagrange equations,
/// W a = ∂L/∂q − (∂²L/∂v∂q) v with W = ∂²L/∂v∂v.
pub fn numeric_euler_lagrange(sys: &LagrangianSystem, q: &[f64], v: &[f64], cfg: &StepConfig) -> Result<Vec<f64>> {
    sys.check(q, v)?;
    let hq = cfg.rel_step * sys.length_scale;
    let hv = cfg.rel_step * sys.velocity_scale;
    let coarse = assemble(sys, q, v, hq, hv)?;
    let fine = assemble(sys, q, v, hq / 2.0, hv / 2.0)?;
    let w = (&fine.w * 4.0 - &coarse.w) / 3.0;
    let rhs = (&fine.rhs * 4.0 - &coarse.rhs) / 3.0;
    let w_err = (&w - &fine.w).amax();
    let rhs_err = (&rhs - &fine.rhs).amax();
    let w_ref = fine.w_scale.max(sys.masses.iter().fold(0.0f64, |a, m| a.max(m.abs())));
    if w_err > cfg.richardson_tol * w_ref || rhs_err > cfg.richardson_tol * fine.rhs_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::StepFailure(format!(
            "Richardson estimates disagree: mass matrix {w_err:e}, forces {rhs_err:e}"
        )));
    }
    let sv = w.singular_values();
    if sv.min() <= 1e-9 * w_ref.max(sv.max()) {
        return Err(Error::SingularSystem(format!(
            "velocity Hessian of the Lagrangian has condition number above 1e9 ({:e})",
            w_ref.max(sv.max()) / sv.min()
        )));
    }
    let a = w
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::SingularSystem("velocity Hessian of the Lagrangian".into()))?;
    Ok(a.iter().copied().collect())
}

/// H(r, p) with characteristic scales for differencing.
pub struct HamiltonianSystem {
    pub labels: Vec<String>,
    pub length_scale: f64,
    pub momentum_scale: f64,
    h: ScalarFn,
}

impl std::fmt::Debug for HamiltonianSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HamiltonianSystem").field("labels", &self.labels).finish()
    }
}

/// Time derivatives from Hamilton's equations, plus the second derivative
/// of the coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonFlow {
    pub rdot: Vec<f64>,
    pub pdot: Vec<f64>,
    pub rddot: Vec<f64>,
}

impl HamiltonianSystem {
    pub fn new(
        labels: Vec<String>,
        length_scale: f64,
        momentum_scale: f64,
        h: impl Fn(&[f64], &[f64]) -> Result<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(length_scale > 0.0 && momentum_scale > 0.0) {
            return Err(Error::InvalidInput("characteristic scales must be positive".into()));
        }
        Ok(HamiltonianSystem {
            labels,
            length_scale,
            momentum_scale,
            h: Box::new(h),
        })
    }

    pub fn dof(&self) -> usize {
        self.labels.len()
    }

    pub fn value(&self, r: &[f64], p: &[f64]) -> Result<f64> {
        (self.h)(r, p)
    }

    fn gradients(&self, r: &[f64], p: &[f64], hr: f64, hp: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.dof();
        let mut dr = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for i in 0..n {
            let mut rp = r.to_vec();
            let mut rm = r.to_vec();
            rp[i] += hr;
            rm[i] -= hr;
            dr[i] = (self.value(&rp, p)? - self.value(&rm, p)?) / (2.0 * hr);
            let mut pp = p.to_vec();
            let mut pm = p.to_vec();
            pp[i] += hp;
            pm[i] -= hp;
            dp[i] = (self.value(r, &pp)? - self.value(r, &pm)?) / (2.0 * hp);
        }
        Ok((dr, dp))
    }

    /// (∂H/∂r, ∂H/∂p), Richardson-extrapolated once.
    pub fn gradient(&self, r: &[f64], p: &[f64], cfg: &StepConfig) -> Result<(Vec<f64>, Vec<f64>)> {
        if r.len() != self.dof() || p.len() != self.dof() {
            return Err(Error::DimensionMismatch("Hamiltonian state length".into()));
        }
        let hr = cfg.rel_step * self.length_scale;
        let hp = cfg.rel_step * self.momentum_scale;
        let (r1, p1) = self.gradients(r, p, hr, hp)?;
        let (r2, p2) = self.gradients(r, p, hr / 2.0, hp / 2.0)?;
        let ex = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(a, b)| (4.0 * b - a) / 3.0).collect::<Vec<_>>();
        Ok((ex(&r1, &r2), ex(&p1, &p2)))
    }

    /// ṙ = ∂H/∂p, ṗ = −∂H/∂r, and r̈ = d/dt ∂H/∂p along the flow.
    pub fn flow(&self, r: &[f64], p: &[f64], cfg: &StepConfig) -> Result<HamiltonFlow> {
        let (hr, hp) = self.gradient(r, p, cfg)?;
        let rdot = hp;
        let pdot: Vec<f64> = hr.iter().map(|x| -x).collect();
        // r̈ = directional derivative of ∂H/∂p along (ṙ, ṗ); differenced
        // along that direction with a step sized to the state scales.
        let speed = (rdot.iter().map(|x| x * x).sum::<f64>()).sqrt() / self.length_scale
            + (pdot.iter().map(|x| x * x).sum::<f64>()).sqrt() / self.momentum_scale;
        if speed == 0.0 {
            return Ok(HamiltonFlow {
                rddot: vec![0.0; self.dof()],
                rdot,
                pdot,
            });
        }
        let dt = cfg.rel_step / speed;
        let along = |s: f64| -> Result<Vec<f64>> {
            let rs: Vec<f64> = r.iter().zip(&rdot).map(|(r, d)| r + s * d).collect();
            let ps: Vec<f64> = p.iter().zip(&pdot).map(|(p, d)| p + s * d).collect();
            Ok(self.gradient(&rs, &ps, cfg)?.1)
        };
        let diff = |h: f64| -> Result<Vec<f64>> {
            let (a, b) = (along(h)?, along(-h)?);
            Ok(a.iter().zip(&b).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let (c, f) = (diff(dt)?, diff(dt / 2.0)?);
        let rddot = c.iter().zip(&f).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
        Ok(HamiltonFlow { rdot, pdot, rddot })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_particle() {
        let sys = LagrangianSystem::new(LagrangianSystem::cartesian_labels(&["p"]), vec![2.0; 3], 1.0, 1.0, |_, _| Ok(0.0))
            .unwrap();
        let a = numeric_euler_lagrange(&sys, &[1.0, 2.0, 3.0], &[0.5, -0.1, 0.2], &StepConfig::default()).unwrap();
        assert!(a.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn harmonic_oscillator() {
        let (m, k) = (1.5, 4.0);
        let sys = LagrangianSystem::new(vec!["x".into()], vec![m], 1.0, 1.0, move |q, _| Ok(-0.5 * k * q[0] * q[0])).unwrap();
        for x in [-2.0, 0.3, 1.7] {
            let a = numeric_euler_lagrange(&sys, &[x], &[0.4], &StepConfig::default()).unwrap();
            assert!((a[0] + k * x / m).abs() < 1e-8);
        }
    }

    #[test]
    fn charged_particle_in_uniform_magnetic_field() {
        // L = ½mv² + (q/c) v·A with A = ½ B × r: a = (q/mc) v × B.
        let (m, qc, b) = (1.0, 0.7, 2.0);
        let sys = LagrangianSystem::new(LagrangianSystem::cartesian_labels(&["p"]), vec![m; 3], 1.0, 1.0, move |r, v| {
            let ax = -0.5 * b * r[1];
            let ay = 0.5 * b * r[0];
            Ok(qc * (v[0] * ax + v[1] * ay))
        })
        .unwrap();
        let v = [0.3, -0.8, 0.1];
        let a = numeric_euler_lagrange(&sys, &[0.2, 0.5, -0.3], &v, &StepConfig::default()).unwrap();
        let want = [qc * v[1] * b / m, -qc * v[0] * b / m, 0.0];
        for (a, w) in a.iter().zip(want) {
            assert!((a - w).abs() < 1e-8, "{a} vs {w}");
        }
    }

    #[test]
    fn kinked_lagrangian_fails_step_check() {
        let sys = LagrangianSystem::new(vec!["x".into()], vec![1.0], 1.0, 1.0, |q, _| Ok(q[0].abs())).unwrap();
        let r = numeric_euler_lagrange(&sys, &[1e-4], &[0.0], &StepConfig::default());
        assert!(matches!(r, Err(Error::StepFailure(_))));
    }

    #[test]
    fn singular_mass_matrix() {
        // U = −½ m v² cancels the kinetic term.
        let sys = LagrangianSystem::new(vec!["x".into()], vec![1.0], 1.0, 1.0, |_, v| Ok(-0.5 * v[0] * v[0])).unwrap();
        let r = numeric_euler_lagrange(&sys, &[0.0], &[1.0], &StepConfig::default());
        assert!(matches!(r, Err(Error::SingularSystem(_))));
    }

    #[test]
    fn hamilton_flow_of_oscillator() {
        let (m, k) = (2.0, 3.0);
        let sys = HamiltonianSystem::new(vec!["x".into()], 1.0, 1.0, move |r, p| Ok(p[0] * p[0] / (2.0 * m) + 0.5 * k * r[0] * r[0]))
            .unwrap();
        let f = sys.flow(&[0.5], &[1.2], &StepConfig::default()).unwrap();
        assert!((f.rdot[0] - 0.6).abs() < 1e-10);
        assert!((f.pdot[0] + 1.5).abs() < 1e-10);
        assert!((f.rddot[0] + k * 0.5 / m).abs() < 1e-8);
    }

    #[test]
    fn momenta_by_differencing() {
        let sys = LagrangianSystem::new(vec!["x".into()], vec![2.0], 1.0, 1.0, |q, v| Ok(q[0] * v[0] * 3.0)).unwrap();
        let p = sys.canonical_momenta(&[0.5], &[1.0], &StepConfig::default()).unwrap();
        assert!((p[0] - 3.5).abs() < 1e-12);
    }
}
