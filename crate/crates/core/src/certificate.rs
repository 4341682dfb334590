//! Small-gain IOS certificate `(T, sigma, K, gamma, M)` and trace verification of the
//! resulting error estimates.

use crate::design::DesignResult;
use crate::envelope::DecayEnvelope;
use crate::error::{Error, Result};
use crate::masp::{compute_z, interval_integral, masp_closed_form};
use crate::simulator::HybridTrace;
use crate::spectral::SpatialNorms;
use std::f64::consts::PI;

/// Margin applied to every strict inequality.
pub const STRICT_MARGIN: f64 = 1e-9;
const CAP_FRACTION: f64 = 1.0 - 1e-6;
const SCAN_STEPS: usize = 10_000;
const SIGMA_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IOSCertificate {
    /// Sampling-period bound the certificate is valid for.
    pub period: f64,
    pub r: f64,
    pub sigma: f64,
    pub k: f64,
    pub gamma: f64,
    pub m: f64,
    /// Small-gain ratio `K R |L| / (omega - sigma)`.
    pub loop_gain: f64,
    pub order: usize,
}

/// Left-hand side of the decay-rate inequality,
/// `sigma + Z exp(max(0, sigma - r) T) int_0^T exp((r - sigma) s) ds`.
pub fn small_gain_lhs(z: f64, r: f64, sigma: f64, t: f64) -> f64 {
    sigma + z * ((sigma - r).max(0.0) * t).exp() * interval_integral(r, sigma, t)
}

/// Certificate for predictor parameter `r` and sampling period `t`.
///
/// `sigma` is the largest decay rate in `(0, min(omega (1 - 1e-6), -mu_{N+1})]` with
/// `h(sigma) <= omega - margin`, located by a uniform scan and bisection.
pub fn ios_certificate(
    design: &DesignResult,
    env: &DecayEnvelope,
    r: f64,
    t: f64,
    margin: f64,
) -> Result<IOSCertificate> {
    let masp = masp_closed_form(design, env, r)?;
    if !(t > 0.0) || !masp.feasible(t) {
        return Err(Error::Infeasible { t, t_max: masp.t_max });
    }
    let z = compute_z(design, env, r)?;
    let omega = env.omega;
    let target = omega - margin;
    let h = |s: f64| small_gain_lhs(z, r, s, t);
    if !(h(0.0) < target) {
        return Err(Error::NoSigma { h0: h(0.0), omega });
    }

    let cap = (omega * CAP_FRACTION).min(-design.mu_tail());
    let step = cap / SCAN_STEPS as f64;
    let mut last = 0;
    for k in 1..=SCAN_STEPS {
        if h(k as f64 * step) <= target {
            last = k;
        }
    }
    let sigma = if last == SCAN_STEPS {
        cap
    } else {
        let (mut lo, mut hi) = (last as f64 * step, (last + 1) as f64 * step);
        while hi - lo > SIGMA_TOL {
            let mid = 0.5 * (lo + hi);
            if h(mid) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    if !(sigma > 0.0) {
        return Err(Error::NoSigma { h0: h(0.0), omega });
    }
    certificate_at(design, env, r, t, sigma)
}

/// Constants `K`, `gamma`, `M` at a given decay rate.
pub fn certificate_at(
    design: &DesignResult,
    env: &DecayEnvelope,
    r: f64,
    t: f64,
    sigma: f64,
) -> Result<IOSCertificate> {
    let l = design.gain_norm()?;
    let omega = env.omega;
    let k = design.shifted_output_norm(r) * ((sigma - r).max(0.0) * t).exp() * interval_integral(r, sigma, t);
    let loop_gain = k * env.r * l / (omega - sigma);
    if !(sigma < omega && loop_gain < 1.0) {
        return Err(Error::NoSigma { h0: small_gain_lhs(k * env.r * l, r, 0.0, t), omega });
    }
    let amplify = 1.0 / (1.0 - loop_gain);
    let gamma = amplify * env.r * l / omega * ((-r).max(0.0) * t).exp();
    let tail = ((-r - design.mu_tail()).max(0.0) * t).exp();
    let m = 1.0 + amplify * env.r * (1.0 + l / (omega - sigma) * design.kernel_tail_norm() * tail);
    Ok(IOSCertificate { period: t, r, sigma, k, gamma, m, loop_gain, order: design.order })
}

impl IOSCertificate {
    /// Right-hand sides of the three error estimates at time `t`.
    pub fn bounds(&self, t: f64, e0: &SpatialNorms, xi_sup: f64) -> [f64; 3] {
        let decay = (-self.sigma * t).exp();
        let n2 = (self.order as f64 * PI).powi(2);
        let n4 = n2 * n2;
        [
            self.m * decay * e0.l2 + self.gamma * xi_sup,
            n2 * decay * (self.m - 1.0) * e0.l2 + decay * e0.d2 + self.gamma * n2 * xi_sup,
            n4 * decay * (self.m - 1.0) * e0.l2 + decay * e0.d4 + self.gamma * n4 * xi_sup,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub violations: usize,
    /// Smallest and largest `bound - observed` over all records and estimates.
    pub min_slack: f64,
    pub max_slack: f64,
    /// Bounds per record, aligned with the trace.
    pub bounds: Vec<[f64; 3]>,
    pub first_violation: Option<f64>,
}

/// Checks every trace record against the three estimates.
pub fn verify_bounds(trace: &HybridTrace, cert: &IOSCertificate, e0: &SpatialNorms) -> BoundReport {
    let mut report = BoundReport {
        violations: 0,
        min_slack: f64::INFINITY,
        max_slack: f64::NEG_INFINITY,
        bounds: Vec::with_capacity(trace.records.len()),
        first_violation: None,
    };
    for rec in &trace.records {
        let bounds = cert.bounds(rec.t, e0, rec.xi_sup);
        let observed = [rec.error.l2, rec.error.d2, rec.error.d4];
        for (b, o) in bounds.iter().zip(observed) {
            let slack = b - o;
            report.min_slack = report.min_slack.min(slack);
            report.max_slack = report.max_slack.max(slack);
            if slack < -(1e-13 + 1e-12 * b.abs()) {
                report.violations += 1;
                report.first_violation.get_or_insert(rec.t);
            }
        }
        report.bounds.push(bounds);
    }
    report
}

/// Least-squares decay rate of `||e[t]||`; `None` with fewer than two usable records.
pub fn fitted_decay_rate(trace: &HybridTrace) -> Option<f64> {
    let first = trace.records.first()?.error.l2;
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter(|r| r.error.l2 > 1e-12 * first && r.error.l2 > 1e-290)
        .map(|r| (r.t, r.error.l2.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}
