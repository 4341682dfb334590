//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Absolute tolerance used for every modal projection.
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
/// Maximum bisection depth of any subinterval.
pub const MAX_LEVELS: u32 = 20;
const ROUNDING: f64 = 50.0 * f64::EPSILON;

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

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Integral of `|f|`, for the rounding floor.
    magnitude: f64,
    level: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut magnitude = fc.abs() * WGK[7];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (lo, hi) = (f(centre - dx), f(centre + dx));
        kronrod += w * (lo + hi);
        magnitude += w * (lo.abs() + hi.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (lo + hi);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), magnitude * half.abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The tolerance is raised to the rounding floor `50 eps int |f|` when that is larger,
/// since no estimate can resolve below it.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<QuadResult> {
    let (value, error, magnitude) = gk15(&f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error, magnitude, level: 0 });
    let mut total_value = value;
    let mut total_error = error;
    let mut total_magnitude = magnitude;
    let floor = |m: f64| tol.max(ROUNDING * m);
    // Segments that hit the depth limit keep their contribution but are never split again.
    let mut frozen: Vec<Segment> = Vec::new();
    let mut frozen_error = 0.0;

    loop {
        if !(total_error > floor(total_magnitude) && frozen_error <= floor(total_magnitude)) {
            // Re-sum before stopping: the running totals drift by rounding.
            total_error = heap.iter().chain(frozen.iter()).map(|s| s.error).sum();
            total_magnitude = heap.iter().chain(frozen.iter()).map(|s| s.magnitude).sum();
            if !(total_error > floor(total_magnitude) && frozen_error <= floor(total_magnitude)) {
                break;
            }
        }
        let Some(seg) = heap.pop() else { break };
        if seg.level >= MAX_LEVELS {
            frozen_error += seg.error;
            frozen.push(seg);
            continue;
        }
        let mid = 0.5 * (seg.a + seg.b);
        let (v1, e1, m1) = gk15(&f, seg.a, mid);
        let (v2, e2, m2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total_value += v1 + v2 - seg.value;
        total_error += e1 + e2 - seg.error;
        total_magnitude += m1 + m2 - seg.magnitude;
        let level = seg.level + 1;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1, magnitude: m1, level });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2, magnitude: m2, level });
    }

    // Re-sum to shed the drift of the running updates.
    let segments = || heap.iter().chain(frozen.iter());
    let value = segments().map(|s| s.value).sum::<f64>();
    let error = segments().map(|s| s.error).sum::<f64>();
    let magnitude = segments().map(|s| s.magnitude).sum::<f64>();
    debug_assert!((value - total_value).abs() <= 1e-6 * value.abs().max(1.0));
    if !value.is_finite() || error > floor(magnitude) {
        return Err(Error::Quadrature { achieved: error, tolerance: floor(magnitude) });
    }
    Ok(QuadResult { value, error, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x * x * x - 2.0 * x + 1.0, 0.0, 1.0, 1e-14).unwrap();
        assert!((r.value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn oscillatory_integrand_refines() {
        let k = 64.0 * std::f64::consts::PI;
        let r = integrate(|x| (k * x).cos() * x, 0.0, 1.0, 1e-12).unwrap();
        // int_0^1 x cos(kx) dx = (cos k - 1)/k^2 + sin(k)/k
        let exact = (k.cos() - 1.0) / (k * k) + k.sin() / k;
        assert!((r.value - exact).abs() < 1e-12);
        assert!(r.evaluations > 15);
    }

    #[test]
    fn non_convergence_is_reported() {
        let err = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-13).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
