//! Spatial and temporal profile descriptions used for kernels, initial data and forcing.
//!
//! Textual form (used by the config file):
//!
//! | text                    | profile                              |
//! |-------------------------|--------------------------------------|
//! | `zero`                  | `0`                                  |
//! | `const:v`               | `v`                                  |
//! | `x`                     | `x`                                  |
//! | `mode:n`                | `phi_n(x)`                           |
//! | `cos:k`                 | `cos(k pi x)`                        |
//! | `poly:a0,a1,..`         | `a0 + a1 x + ..`                     |
//! | `gauss:c,w[,a]`         | `a exp(-((x - c)/w)^2)`              |
//! | `coeffs:c0,c1,..`       | `sum c_n phi_n(x)`                   |
//! | `random:order,scale`    | seeded smooth modal data             |

use crate::error::{Error, Result};
use crate::spectral::{self, basis_unchecked, ModalVector};
use rand::{Rng, RngExt, SeedableRng};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    Constant(f64),
    Linear,
    Mode(usize),
    Cosine(f64),
    Polynomial(Vec<f64>),
    Gaussian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    Coefficients(Vec<f64>),
    /// Coefficients `scale * U(-1, 1) / (1 + n)^4` for `n <= order`, drawn from the run's seed.
    Random {
        order: usize,
        scale: f64,
    },
}

impl Profile {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Profile::Random { .. })
    }

    /// Pointwise value; `None` for seeded profiles, which exist only in modal form.
    pub fn eval(&self, x: f64) -> Option<f64> {
        Some(match self {
            Profile::Zero => 0.0,
            Profile::Constant(v) => *v,
            Profile::Linear => x,
            Profile::Mode(n) => basis_unchecked(*n, x),
            Profile::Cosine(k) => (k * PI * x).cos(),
            Profile::Polynomial(a) => a.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Profile::Gaussian { center, width, amplitude } => amplitude * (-((x - center) / width).powi(2)).exp(),
            Profile::Coefficients(c) => ModalVector::new(c.clone()).eval_unchecked(x),
            Profile::Random { .. } => return None,
        })
    }

    /// Modal coefficients up to `order`, drawing from `rng` for seeded profiles.
    pub fn to_modal<R: Rng + ?Sized>(&self, order: usize, rng: &mut R) -> Result<ModalVector> {
        match self {
            Profile::Zero => Ok(ModalVector::zeros(order)),
            Profile::Constant(v) => {
                let mut m = ModalVector::zeros(order);
                m.coeffs[0] = *v;
                Ok(m)
            }
            Profile::Mode(n) => {
                let mut m = ModalVector::zeros(order);
                if *n <= order {
                    m.coeffs[*n] = 1.0;
                }
                Ok(m)
            }
            Profile::Coefficients(c) => Ok(ModalVector::new(c.clone()).resized(order)),
            Profile::Random { order: k, scale } => {
                let mut m = ModalVector::zeros(order);
                for n in 0..=*k {
                    let draw: f64 = rng.random_range(-1.0..1.0);
                    if n <= order {
                        m.coeffs[n] = scale * draw / (1.0 + n as f64).powi(4);
                    }
                }
                Ok(m)
            }
            _ => spectral::project(|x| self.eval(x).unwrap_or(0.0), order),
        }
    }

    /// Modal coefficients of a deterministic profile.
    pub fn modal(&self, order: usize) -> Result<ModalVector> {
        if self.is_stochastic() {
            return Err(Error::Config(format!("profile `{self}` needs a seed")));
        }
        // Deterministic profiles never draw from the generator.
        self.to_modal(order, &mut rand_chacha::ChaCha8Rng::seed_from_u64(0))
    }

    /// `||profile||` over (0, 1); exact for modal descriptions, quadrature otherwise.
    pub fn l2_norm(&self) -> Result<f64> {
        match self {
            Profile::Zero => Ok(0.0),
            Profile::Constant(v) => Ok(v.abs()),
            Profile::Mode(_) => Ok(1.0),
            Profile::Coefficients(c) => Ok(crate::linalg::euclid(c)),
            Profile::Random { .. } => Err(Error::Config("norm of a seeded profile".into())),
            _ => spectral::l2_norm(|x| self.eval(x).unwrap_or(0.0)),
        }
    }
}

pub(crate) fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|_| Error::Config(format!("bad number `{t}`")))
        })
        .collect()
}

pub(crate) fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| crate::output::fmt_f64(*x)).collect::<Vec<_>>().join(",")
}

fn split_tag(s: &str) -> (&str, &str) {
    match s.split_once(':') {
        Some((tag, rest)) => (tag.trim(), rest.trim()),
        None => (s.trim(), ""),
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, args) = split_tag(s);
        let bad = || Error::Config(format!("cannot parse profile `{s}`"));
        Ok(match tag {
            "zero" => Profile::Zero,
            "x" => Profile::Linear,
            "const" => Profile::Constant(args.parse().map_err(|_| bad())?),
            "mode" => Profile::Mode(args.parse().map_err(|_| bad())?),
            "cos" => Profile::Cosine(args.parse().map_err(|_| bad())?),
            "poly" => Profile::Polynomial(parse_list(args)?),
            "coeffs" => Profile::Coefficients(parse_list(args)?),
            "gauss" => match parse_list(args)?.as_slice() {
                [c, w] => Profile::Gaussian { center: *c, width: *w, amplitude: 1.0 },
                [c, w, a] => Profile::Gaussian { center: *c, width: *w, amplitude: *a },
                _ => return Err(bad()),
            },
            "random" => match parse_list(args)?.as_slice() {
                [k, s] if *k >= 0.0 && k.fract() == 0.0 => Profile::Random { order: *k as usize, scale: *s },
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::output::fmt_f64;
        match self {
            Profile::Zero => write!(f, "zero"),
            Profile::Constant(v) => write!(f, "const:{}", fmt_f64(*v)),
            Profile::Linear => write!(f, "x"),
            Profile::Mode(n) => write!(f, "mode:{n}"),
            Profile::Cosine(k) => write!(f, "cos:{}", fmt_f64(*k)),
            Profile::Polynomial(a) => write!(f, "poly:{}", fmt_list(a)),
            Profile::Coefficients(c) => write!(f, "coeffs:{}", fmt_list(c)),
            Profile::Gaussian { center, width, amplitude } => {
                write!(f, "gauss:{},{},{}", fmt_f64(*center), fmt_f64(*width), fmt_f64(*amplitude))
            }
            Profile::Random { order, scale } => write!(f, "random:{order},{}", fmt_f64(*scale)),
        }
    }
}

/// Time factor `g(t)` of a separable forcing `g(t) h(x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeProfile {
    Constant(f64),
    /// `amplitude * sin(frequency * t + phase)`.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
        phase: f64,
    },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant(v) => v,
            TimeProfile::Sinusoid { amplitude, frequency, phase } => amplitude * (frequency * t + phase).sin(),
        }
    }

    /// Mean of `g` over `[t0, t1]`; the simulator holds this value over the interval.
    pub fn average(&self, t0: f64, t1: f64) -> f64 {
        match *self {
            TimeProfile::Constant(v) => v,
            TimeProfile::Sinusoid { amplitude, frequency, phase } => {
                let span = t1 - t0;
                if frequency == 0.0 || span <= 0.0 {
                    return self.eval(t0);
                }
                let a0 = frequency * t0 + phase;
                let a1 = frequency * t1 + phase;
                // cos(a0) - cos(a1) = 2 sin((a0+a1)/2) sin((a1-a0)/2), stable for short spans
                let diff = 2.0 * (0.5 * (a0 + a1)).sin() * (0.5 * (a1 - a0)).sin();
                amplitude * diff / (frequency * span)
            }
        }
    }
}

impl FromStr for TimeProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, args) = split_tag(s);
        let bad = || Error::Config(format!("cannot parse time profile `{s}`"));
        match tag {
            "const" => Ok(TimeProfile::Constant(args.parse().map_err(|_| bad())?)),
            "sin" => match parse_list(args)?.as_slice() {
                [a, w, p] => Ok(TimeProfile::Sinusoid { amplitude: *a, frequency: *w, phase: *p }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::output::fmt_f64;
        match *self {
            TimeProfile::Constant(v) => write!(f, "const:{}", fmt_f64(v)),
            TimeProfile::Sinusoid { amplitude, frequency, phase } => {
                write!(f, "sin:{},{},{}", fmt_f64(amplitude), fmt_f64(frequency), fmt_f64(phase))
            }
        }
    }
}

/// Source term `f(t, x)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    Separable { space: Profile, time: TimeProfile },
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        matches!(self, Forcing::Zero)
    }
}
