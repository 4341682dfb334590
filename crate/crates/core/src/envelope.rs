//! Exponential decay envelopes `|exp(A t)| <= R exp(-omega t)` for Hurwitz matrices.

use crate::config::EnvelopeStrategy;
use crate::error::{Error, Result};
use crate::linalg::{self, expm, log_space, spectral_norm};
use nalgebra::DMatrix;

/// Fraction of the spectral abscissa used as decay rate.
pub const OMEGA_FRACTION: f64 = 0.9;
pub const SAMPLED_SAFETY: f64 = 1.01;
/// Validation window and resolution.
pub const CHECK_T_MIN: f64 = 1e-4;
pub const CHECK_T_MAX: f64 = 50.0;
pub const CHECK_POINTS: usize = 200;
/// Rounding allowance of the sampled check, relative to `R`.
pub const CHECK_RTOL: f64 = 1e-9;
const SEARCH_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub r: f64,
    pub omega: f64,
}

/// Worst point of an envelope check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub worst_t: f64,
    /// `max_t |exp(A t)| exp(omega t) - R`; non-positive when the envelope holds.
    pub worst_gap: f64,
}

impl DecayEnvelope {
    /// Samples `|exp(A t)| e^{omega t} - R` over `times` and returns the largest gap.
    pub fn check(&self, a: &DMatrix<f64>, times: &[f64]) -> Result<EnvelopeCheck> {
        let mut worst = EnvelopeCheck { worst_t: f64::NAN, worst_gap: f64::NEG_INFINITY };
        for &t in times {
            let gap = spectral_norm(&expm(a, t)?) * (self.omega * t).exp() - self.r;
            if gap > worst.worst_gap {
                worst = EnvelopeCheck { worst_t: t, worst_gap: gap };
            }
        }
        Ok(worst)
    }

    /// Standard validation on [`CHECK_POINTS`] log-spaced times in `[1e-4, 50]`.
    pub fn validate(&self, a: &DMatrix<f64>) -> Result<()> {
        let check = self.check(a, &log_space(CHECK_T_MIN, CHECK_T_MAX, CHECK_POINTS))?;
        if check.worst_gap > CHECK_RTOL * self.r {
            return Err(Error::EnvelopeViolated {
                r: self.r,
                omega: self.omega,
                t: check.worst_t,
                gap: check.worst_gap,
            });
        }
        Ok(())
    }
}

/// Certifies a decay envelope for the Hurwitz matrix `a`.
pub fn decay_envelope(a: &DMatrix<f64>, strategy: EnvelopeStrategy) -> Result<DecayEnvelope> {
    let abscissa = linalg::spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(Error::NotHurwitz(abscissa));
    }
    let omega = OMEGA_FRACTION * abscissa.abs();
    let env = match strategy {
        EnvelopeStrategy::Lyapunov => {
            let n = a.nrows();
            let shifted = a + DMatrix::<f64>::identity(n, n) * omega;
            let p = linalg::lyapunov(&shifted, &DMatrix::identity(n, n))?;
            DecayEnvelope { r: linalg::condition_number(&p).sqrt().max(1.0), omega }
        }
        EnvelopeStrategy::Sampled => {
            let check =
                DecayEnvelope { r: 0.0, omega }.check(a, &log_space(CHECK_T_MIN, CHECK_T_MAX, SEARCH_POINTS))?;
            DecayEnvelope { r: (SAMPLED_SAFETY * check.worst_gap).max(1.0), omega }
        }
        EnvelopeStrategy::User { r, omega } => {
            if !(r >= 1.0 && omega > 0.0) {
                return Err(Error::Config(format!("envelope needs R >= 1 and omega > 0, got ({r}, {omega})")));
            }
            DecayEnvelope { r, omega }
        }
    };
    env.validate(a)?;
    Ok(env)
}
