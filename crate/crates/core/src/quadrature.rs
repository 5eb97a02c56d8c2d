//! Adaptive Gauss–Kronrod (7/15) quadrature for scalar and vector
//! integrands, with a tangent map for infinite ranges.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vec3;

/// Values that can be integrated: closed under addition and scaling.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Integrand for Vec3 {
    fn zero() -> Self {
        Vec3::ZERO
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    /// Relative to ∫‖f‖, so integrals that cancel to zero still terminate.
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 0.0,
            rel_tol: 1e-11,
            max_intervals: 4000,
        }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadConfig {
            rel_tol,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    /// ∫‖f‖ over the range.
    pub magnitude: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
    magnitude: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn kronrod<T: Integrand>(f: &mut impl FnMut(f64) -> Result<T>, a: f64, b: f64) -> Result<Segment<T>> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut mag = fc.magnitude() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        let s = f1 + f2;
        k = k + s * WGK[j];
        mag += (f1.magnitude() + f2.magnitude()) * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let value = k * half;
    let error = ((k - g) * half).magnitude();
    let magnitude = mag * half.abs();
    if !value.magnitude().is_finite() {
        return Err(Error::NonConvergence(format!("non-finite integrand on [{a:e}, {b:e}]")));
    }
    Ok(Segment {
        a,
        b,
        value,
        error,
        magnitude,
    })
}

/// ∫ₐᵇ f over a finite interval.
pub fn integrate<T: Integrand>(mut f: impl FnMut(f64) -> Result<T>, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput("integrate needs finite limits; use integrate_mapped".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: T::zero(),
            error: 0.0,
            magnitude: 0.0,
            evaluations: 0,
        });
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&mut f, a, b)?;
    let (mut value, mut error, mut magnitude) = (first.value, first.error, first.magnitude);
    heap.push(first);
    let mut evaluations = 15;
    loop {
        if error <= cfg.abs_tol.max(cfg.rel_tol * magnitude) {
            return Ok(QuadResult {
                value,
                error,
                magnitude,
                evaluations,
            });
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::NonConvergence(format!(
                "error estimate {error:e} after {} intervals (target {:e})",
                heap.len(),
                cfg.abs_tol.max(cfg.rel_tol * magnitude)
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            return Err(Error::NonConvergence(format!("interval collapsed near {mid:e}")));
        }
        let left = kronrod(&mut f, worst.a, mid)?;
        let right = kronrod(&mut f, mid, worst.b)?;
        evaluations += 30;
        value = value - worst.value + left.value + right.value;
        error += left.error + right.error - worst.error;
        magnitude += left.magnitude + right.magnitude - worst.magnitude;
        heap.push(left);
        heap.push(right);
        // Running sums drift; refresh them now and then.
        if heap.len() % 64 == 0 {
            value = heap.iter().fold(T::zero(), |s, seg| s + seg.value);
            error = heap.iter().map(|s| s.error).sum();
            magnitude = heap.iter().map(|s| s.magnitude).sum();
        }
    }
}

/// ∫ over a possibly infinite interval. Infinite ends are mapped with
/// x = center + scale·tan θ, which removes algebraic tails.
pub fn integrate_mapped<T: Integrand>(
    mut f: impl FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    center: f64,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult<T>> {
    if a.is_finite() && b.is_finite() {
        return integrate(f, a, b, cfg);
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("mapping scale must be positive, got {scale}")));
    }
    let to_theta = |x: f64| {
        if x == f64::NEG_INFINITY {
            -FRAC_PI_2
        } else if x == f64::INFINITY {
            FRAC_PI_2
        } else {
            ((x - center) / scale).atan()
        }
    };
    let (ta, tb) = (to_theta(a), to_theta(b));
    integrate(
        |th| {
            let (s, c) = th.sin_cos();
            let x = center + scale * s / c;
            Ok(f(x)? * (scale / (c * c)))
        },
        ta,
        tb,
        cfg,
    )
}
