//! Dormand–Prince 5(4) with PI step control and continuous output, plus a
//! classical fixed-step RK4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Dopri5,
    Rk4 { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeConfig {
    pub rtol: f64,
    pub atol: f64,
    pub method: Method,
    pub max_steps: usize,
    pub initial_step: Option<f64>,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig {
            rtol: 1e-10,
            atol: 1e-10,
            method: Method::Dopri5,
            max_steps: 1_000_000,
            initial_step: None,
        }
    }
}

impl OdeConfig {
    pub fn with_tol(tol: f64) -> Self {
        OdeConfig { rtol: tol, atol: tol, ..Default::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol >= 0.0) {
            return Err(Error::InvalidInput(format!("tolerances must be positive (rtol {}, atol {})", self.rtol, self.atol)));
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidInput(format!("RK4 step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub stats: OdeStats,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over the last accepted step.
struct Dense {
    t: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Dense {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.r[0][i] + s * (self.r[1][i] + s1 * (self.r[2][i] + s * (self.r[3][i] + s1 * self.r[4][i])));
        }
    }
}

fn combine(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        out[i] = y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>();
    }
}

fn format_state(y: &[f64]) -> String {
    let parts: Vec<String> = y.iter().map(|v| format!("{v:e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
///
/// With `samples`, the solution is reported at those times (sorted, inside
/// [t0, t1]) by continuous output; otherwise at every accepted step.
/// `observer` sees every accepted step.
pub fn solve<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t1: f64,
    samples: Option<&[f64]>,
    cfg: &OdeConfig,
    mut observer: O,
) -> Result<OdeSolution>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    O: FnMut(f64, &[f64]) -> Result<()>,
{
    cfg.validate()?;
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(Error::InvalidInput(format!("need finite t0 < t1, got [{t0}, {t1}]")));
    }
    if let Some(s) = samples {
        if s.windows(2).any(|w| w[1] < w[0]) || s.iter().any(|&t| t < t0 || t > t1) {
            return Err(Error::InvalidInput("sample times must be sorted and inside [t0, t1]".into()));
        }
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite initial state {}", format_state(y0))));
    }
    let n = y0.len();
    let mut out = OdeSolution { t: Vec::new(), y: Vec::new(), stats: OdeStats::default() };
    let mut next_sample = 0usize;
    let emit = |out: &mut OdeSolution, t: f64, y: &[f64]| {
        out.t.push(t);
        out.y.push(y.to_vec());
    };
    let mut y = y0.to_vec();
    let mut t = t0;
    observer(t, &y)?;
    match samples {
        None => emit(&mut out, t, &y),
        Some(s) => {
            while next_sample < s.len() && s[next_sample] == t0 {
                emit(&mut out, t0, &y);
                next_sample += 1;
            }
        }
    }

    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    let mut sample_buf = vec![0.0; n];
    f(t, &y, &mut k[0])?;
    out.stats.evaluations += 1;

    if let Method::Rk4 { step } = cfg.method {
        let steps = ((t1 - t0) / step).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let mut k2 = vec![0.0; n];
        let mut k3 = vec![0.0; n];
        let mut k4 = vec![0.0; n];
        for i in 0..steps {
            if i > 0 {
                f(t, &y, &mut k[0])?;
            }
            combine(&mut tmp, &y, h / 2.0, &[(1.0, &k[0])]);
            f(t + h / 2.0, &tmp, &mut k2)?;
            combine(&mut tmp, &y, h / 2.0, &[(1.0, &k2)]);
            f(t + h / 2.0, &tmp, &mut k3)?;
            combine(&mut tmp, &y, h, &[(1.0, &k3)]);
            f(t + h, &tmp, &mut k4)?;
            out.stats.evaluations += 4;
            combine(&mut y1, &y, h / 6.0, &[(1.0, &k[0]), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
            let tn = if i + 1 == steps { t1 } else { t0 + (i + 1) as f64 * h };
            if let Some(s) = samples {
                // cubic Hermite between the step ends
                f(tn, &y1, &mut k[1])?;
                out.stats.evaluations += 1;
                while next_sample < s.len() && s[next_sample] <= tn {
                    let th = (s[next_sample] - t) / h;
                    for j in 0..n {
                        let (h00, h10) = (2.0 * th.powi(3) - 3.0 * th * th + 1.0, th.powi(3) - 2.0 * th * th + th);
                        let (h01, h11) = (-2.0 * th.powi(3) + 3.0 * th * th, th.powi(3) - th * th);
                        sample_buf[j] = h00 * y[j] + h10 * h * k[0][j] + h01 * y1[j] + h11 * h * k[1][j];
                    }
                    emit(&mut out, s[next_sample], &sample_buf);
                    next_sample += 1;
                }
            }
            std::mem::swap(&mut y, &mut y1);
            t = tn;
            out.stats.accepted += 1;
            observer(t, &y)?;
            if samples.is_none() {
                emit(&mut out, t, &y);
            }
        }
        return Ok(out);
    }

    let scale = |a: f64, b: f64| cfg.atol + cfg.rtol * a.abs().max(b.abs());
    let norm = |v: &[f64], y: &[f64]| -> f64 {
        (v.iter().zip(y).map(|(e, y)| (e / scale(*y, *y)).powi(2)).sum::<f64>() / n as f64).sqrt()
    };

    let span = t1 - t0;
    let mut h = match cfg.initial_step {
        Some(h) if h > 0.0 => h.min(span),
        _ => {
            let d0 = norm(&y, &y);
            let d1 = norm(&k[0], &y);
            let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
            combine(&mut tmp, &y, h0, &[(1.0, &k[0])]);
            f(t + h0, &tmp, &mut k[1])?;
            out.stats.evaluations += 1;
            let diff: Vec<f64> = k[1].iter().zip(&k[0]).map(|(a, b)| (a - b) / h0).collect();
            let d2 = norm(&diff, &y);
            let h1 = if d1.max(d2) <= 1e-15 { (1e-6f64).max(h0 * 1e-3) } else { (0.01 / d1.max(d2)).powf(0.2) };
            (100.0 * h0).min(h1).min(span)
        }
    };

    const SAFE: f64 = 0.9;
    const BETA: f64 = 0.04;
    let expo = 0.2 - BETA * 0.75;
    let (fac_min, fac_max) = (0.2, 10.0);
    let mut fac_old: f64 = 1e-4;
    let mut reject = false;
    let mut err_vec = vec![0.0; n];

    while t < t1 {
        if out.stats.accepted + out.stats.rejected >= cfg.max_steps {
            return Err(Error::StepSizeUnderflow { t, h, state: format!("step budget {} exhausted; {}", cfg.max_steps, format_state(&y)) });
        }
        let last = t + h >= t1 || (t1 - (t + h)) < 1e-12 * span;
        if last {
            h = t1 - t;
        }
        if h < 10.0 * f64::EPSILON * t.abs().max(span) {
            return Err(Error::StepSizeUnderflow { t, h, state: format_state(&y) });
        }
        let (k1, rest) = k.split_at_mut(1);
        let [k2, k3, k4, k5, k6, k7] = rest else { unreachable!() };
        let k1 = &k1[0];
        combine(&mut tmp, &y, h, &[(A21, k1)]);
        f(t + C2 * h, &tmp, k2)?;
        combine(&mut tmp, &y, h, &[(A31, k1), (A32, k2)]);
        f(t + C3 * h, &tmp, k3)?;
        combine(&mut tmp, &y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        f(t + C4 * h, &tmp, k4)?;
        combine(&mut tmp, &y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        f(t + C5 * h, &tmp, k5)?;
        combine(&mut tmp, &y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        f(t + h, &tmp, k6)?;
        combine(&mut y1, &y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let tn = if last { t1 } else { t + h };
        f(tn, &y1, k7)?;
        out.stats.evaluations += 6;

        for i in 0..n {
            err_vec[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = (err_vec
            .iter()
            .enumerate()
            .map(|(i, e)| (e / scale(y[i], y1[i])).powi(2))
            .sum::<f64>()
            / n as f64)
            .sqrt();
        if !err.is_finite() {
            out.stats.rejected += 1;
            h *= 0.1;
            reject = true;
            continue;
        }
        let fac11 = err.powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFE).clamp(1.0 / fac_max, 1.0 / fac_min);
            fac_old = err.max(1e-4);
            if let Some(s) = samples {
                if next_sample < s.len() && s[next_sample] <= tn {
                    let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
                    for i in 0..n {
                        let dy = y1[i] - y[i];
                        let bspl = h * k1[i] - dy;
                        r[0][i] = y[i];
                        r[1][i] = dy;
                        r[2][i] = bspl;
                        r[3][i] = dy - h * k7[i] - bspl;
                        r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    }
                    let dense = Dense { t, h, r };
                    while next_sample < s.len() && s[next_sample] <= tn {
                        dense.eval(s[next_sample], &mut sample_buf);
                        emit(&mut out, s[next_sample], &sample_buf);
                        next_sample += 1;
                    }
                }
            }
            let k7v = std::mem::take(&mut k[6]);
            k[6] = std::mem::replace(&mut k[0], k7v);
            std::mem::swap(&mut y, &mut y1);
            t = tn;
            out.stats.accepted += 1;
            observer(t, &y)?;
            if samples.is_none() {
                emit(&mut out, t, &y);
            }
            let mut h_new = h / fac;
            if reject {
                h_new = h_new.min(h);
            }
            reject = false;
            h = h_new.min(t1 - t).max(0.0);
            if t >= t1 {
                break;
            }
            if h == 0.0 {
                h = t1 - t;
            }
        } else {
            out.stats.rejected += 1;
            reject = true;
            h /= (fac11 / SAFE).min(1.0 / fac_min);
        }
    }
    Ok(out)
}
