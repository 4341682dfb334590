//! Maximum allowable sampling period and its dependence on the predictor parameter `r`.
//!
//! A sampling period `T` is admissible when
//! `Z exp(max(0, -r) T) int_0^T exp(r s) ds < omega`, `Z = R |L| |C_N (A_N + r I)|`.
//! The admissible set is `(0, T_max)` with `T_max` in closed form.

use crate::design::DesignResult;
use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::exec::Exec;

/// `int_0^T exp((r - sigma) s) ds`, with a series near the removable singularity.
pub fn interval_integral(r: f64, sigma: f64, t: f64) -> f64 {
    let a = r - sigma;
    let x = a * t;
    if x.abs() < 1e-8 {
        t * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / a
    }
}

/// `Z = R |L| |C_N (A_N + r I)|`.
pub fn compute_z(design: &DesignResult, env: &DecayEnvelope, r: f64) -> Result<f64> {
    Ok(env.r * design.gain_norm()? * design.shifted_output_norm(r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaspResult {
    pub r: f64,
    pub z: f64,
    pub omega: f64,
    /// `+inf` when `Z = 0`.
    pub t_max: f64,
}

impl MaspResult {
    /// Left-hand side of the admissibility condition at period `t`.
    pub fn condition_lhs(&self, t: f64) -> f64 {
        condition_lhs(self.z, self.r, t)
    }

    /// Strict admissibility of the period `t`.
    pub fn feasible(&self, t: f64) -> bool {
        t > 0.0 && self.condition_lhs(t) < self.omega
    }
}

fn condition_lhs(z: f64, r: f64, t: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    z * ((-r).max(0.0) * t).exp() * interval_integral(r, 0.0, t)
}

/// Closed-form `T_max` for a given `r`.
pub fn masp_closed_form(design: &DesignResult, env: &DecayEnvelope, r: f64) -> Result<MaspResult> {
    let z = compute_z(design, env, r)?;
    Ok(MaspResult { r, z, omega: env.omega, t_max: t_max_closed_form(z, env.omega, r) })
}

fn t_max_closed_form(z: f64, omega: f64, r: f64) -> f64 {
    if z == 0.0 {
        f64::INFINITY
    } else if r == 0.0 {
        omega / z
    } else {
        (omega * r.abs() / z).ln_1p() / r.abs()
    }
}

/// `T_max` by bisection directly on the admissibility condition.
pub fn masp_by_bisection(design: &DesignResult, env: &DecayEnvelope, r: f64) -> Result<f64> {
    let z = compute_z(design, env, r)?;
    if z == 0.0 {
        return Ok(f64::INFINITY);
    }
    let omega = env.omega;
    let mut hi = 1e-3;
    while condition_lhs(z, r, hi) < omega {
        hi *= 2.0;
        if hi > 1e12 {
            return Ok(f64::INFINITY);
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if condition_lhs(z, r, mid) < omega {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `(r, T_max)` over a grid of predictor parameters.
pub fn masp_curve(design: &DesignResult, env: &DecayEnvelope, r_grid: &[f64], exec: Exec) -> Result<Vec<(f64, f64)>> {
    let l = design.gain_norm()?;
    let points = exec.map(r_grid, |&r| {
        let z = env.r * l * design.shifted_output_norm(r);
        (r, t_max_closed_form(z, env.omega, r))
    });
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimumR {
    pub r: f64,
    pub t_max: f64,
    /// The maximiser sits on the bracket boundary (the curve is monotone there).
    pub at_edge: bool,
}

const OPT_GRID: usize = 400;
const OPT_TOL: f64 = 1e-5;

/// Maximises `T_max(r)` over `[lo, hi]`: grid scan followed by golden-section refinement.
pub fn optimize_r(design: &DesignResult, env: &DecayEnvelope, bracket: (f64, f64)) -> Result<OptimumR> {
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Config(format!("empty r bracket ({lo}, {hi})")));
    }
    let l = design.gain_norm()?;
    if l == 0.0 || env.r * l * design.c_norm() == 0.0 {
        return Err(Error::NoOptimum("T_max is infinite for every r (zero gain or kernel)".into()));
    }
    let f = |r: f64| t_max_closed_form(env.r * l * design.shifted_output_norm(r), env.omega, r);

    let step = (hi - lo) / OPT_GRID as f64;
    let grid: Vec<f64> = (0..=OPT_GRID).map(|i| lo + i as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&r| f(r)).collect();
    if values.iter().any(|v| v.is_infinite()) {
        return Err(Error::NoOptimum("T_max is infinite inside the bracket".into()));
    }
    let best = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap_or(0);

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(OPT_GRID)]);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > OPT_TOL {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let mut r = 0.5 * (a + b);
    let mut t_max = f(r);
    let at_edge = best == 0 || best == OPT_GRID;
    if at_edge || values[best] > t_max {
        r = grid[best];
        t_max = values[best];
    }
    Ok(OptimumR { r, t_max, at_edge })
}
