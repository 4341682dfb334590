//! Sampling schedules and measurement noise.

use crate::config::{NoiseSpec, ScheduleSpec};
use crate::error::{Error, Result};
use rand::RngExt;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one seed.
pub const STREAM_SCHEDULE: u64 = 0;
pub const STREAM_NOISE: u64 = 1;
pub const STREAM_INITIAL: u64 = 2;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingSchedule {
    Uniform {
        period: f64,
    },
    /// Gaps drawn uniformly from `[0.2 T, T]`.
    Jittered {
        period: f64,
        seed: u64,
    },
    Explicit(Vec<f64>),
}

const JITTER_MIN: f64 = 0.2;

impl SamplingSchedule {
    pub fn from_spec(spec: &ScheduleSpec, seed: Option<u64>) -> Result<Self> {
        let s = match spec {
            ScheduleSpec::Uniform(t) => Self::Uniform { period: *t },
            ScheduleSpec::Jittered(t) => Self::Jittered {
                period: *t,
                seed: seed.ok_or_else(|| Error::Config("jittered schedule needs a seed".into()))?,
            },
            ScheduleSpec::Explicit(list) => Self::Explicit(list.clone()),
        };
        if let Self::Uniform { period } | Self::Jittered { period, .. } = s {
            if !(period > 0.0 && period.is_finite()) {
                return Err(Error::Schedule(format!("sampling period must be positive, got {period}")));
            }
        }
        Ok(s)
    }

    /// Sample times `t_0 = 0 < t_1 < ...` up to the first one at or beyond `horizon`.
    pub fn times(&self, horizon: f64) -> Result<Vec<f64>> {
        let times = match self {
            Self::Uniform { period } => {
                let mut v = vec![0.0];
                let mut j = 0u64;
                while *v.last().unwrap_or(&0.0) < horizon {
                    j += 1;
                    v.push(j as f64 * period);
                }
                v
            }
            Self::Jittered { period, seed } => {
                let mut rng = seeded_rng(*seed, STREAM_SCHEDULE);
                let mut v = vec![0.0];
                let mut t = 0.0;
                while t < horizon {
                    t += rng.random_range(JITTER_MIN * period..=*period);
                    v.push(t);
                }
                v
            }
            Self::Explicit(list) => {
                if list.first() != Some(&0.0) {
                    return Err(Error::Schedule("explicit schedule must start at 0".into()));
                }
                if list.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::Schedule("explicit schedule must be strictly increasing".into()));
                }
                let last = *list.last().unwrap_or(&0.0);
                if last < horizon {
                    return Err(Error::ScheduleExhausted { last, horizon });
                }
                let end = list.iter().position(|&t| t >= horizon).map_or(list.len(), |i| i + 1);
                list[..end].to_vec()
            }
        };
        Ok(times)
    }

    /// Largest gap of the materialised schedule.
    pub fn max_gap(&self, horizon: f64) -> Result<f64> {
        Ok(self.times(horizon)?.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Constant(f64),
    /// Uniform on `[-b, b]`, independent per sample.
    Uniform {
        bound: f64,
        seed: u64,
    },
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl NoiseModel {
    pub fn from_spec(spec: &NoiseSpec, seed: Option<u64>) -> Result<Self> {
        Ok(match *spec {
            NoiseSpec::None => Self::None,
            NoiseSpec::Constant(b) => Self::Constant(b),
            NoiseSpec::Uniform(bound) => {
                Self::Uniform { bound, seed: seed.ok_or_else(|| Error::Config("uniform noise needs a seed".into()))? }
            }
            NoiseSpec::Sinusoid { amplitude, frequency, phase } => Self::Sinusoid { amplitude, frequency, phase },
        })
    }

    /// Declared bound on `|xi|`.
    pub fn bound(&self) -> f64 {
        match *self {
            Self::None => 0.0,
            Self::Constant(b) => b.abs(),
            Self::Uniform { bound, .. } => bound.abs(),
            Self::Sinusoid { amplitude, .. } => amplitude.abs(),
        }
    }

    /// Noise values at the given sample times.
    pub fn samples(&self, times: &[f64]) -> Vec<f64> {
        match *self {
            Self::None => vec![0.0; times.len()],
            Self::Constant(b) => vec![b; times.len()],
            Self::Uniform { bound, seed } => {
                let mut rng = seeded_rng(seed, STREAM_NOISE);
                let b = bound.abs();
                times.iter().map(|_| if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 }).collect()
            }
            Self::Sinusoid { amplitude, frequency, phase } => {
                times.iter().map(|t| amplitude * (frequency * t + phase).sin()).collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_covers_horizon() {
        let t = SamplingSchedule::Uniform { period: 0.01 }.times(0.05).unwrap();
        assert_eq!(t.len(), 6);
        assert_eq!(t[3], 0.03);
        assert!(*t.last().unwrap() >= 0.05);
    }

    #[test]
    fn jitter_gaps_and_reproducibility() {
        let s = SamplingSchedule::Jittered { period: 0.01, seed: 9 };
        let a = s.times(1.0).unwrap();
        assert_eq!(a, s.times(1.0).unwrap());
        assert!(a.windows(2).all(|w| (0.002..=0.01).contains(&(w[1] - w[0]))));
        assert_ne!(a, SamplingSchedule::Jittered { period: 0.01, seed: 10 }.times(1.0).unwrap());
    }

    #[test]
    fn explicit_schedule_checks() {
        let s = SamplingSchedule::Explicit(vec![0.0, 0.004, 0.0095, 0.018, 0.02]);
        assert_eq!(s.times(0.01).unwrap(), vec![0.0, 0.004, 0.0095, 0.018]);
        assert!(matches!(s.times(0.5), Err(Error::ScheduleExhausted { .. })));
        assert!(SamplingSchedule::Explicit(vec![0.0, 0.2, 0.1]).times(0.1).is_err());
    }

    #[test]
    fn noise_respects_bound() {
        let times: Vec<f64> = (0..500).map(|i| i as f64 * 0.01).collect();
        for m in [
            NoiseModel::Constant(0.3),
            NoiseModel::Uniform { bound: 0.1, seed: 4 },
            NoiseModel::Sinusoid { amplitude: 0.05, frequency: 3.0, phase: 0.2 },
        ] {
            let xs = m.samples(&times);
            assert!(xs.iter().all(|x| x.abs() <= m.bound()));
        }
        assert_eq!(NoiseModel::None.samples(&times[..3]), vec![0.0; 3]);
    }
}
