//! Flat `section.key = value` configuration files.
//!
//! ```text
//! # one observed unstable mode
//! problem.q = 9.9709...
//! problem.N = 1
//! problem.kernel = x
//! gain.L = 4,20.937...
//! ```
//!
//! Lines starting with `#` are comments. Keys are unique; values are decimal
//! numerals, comma lists or the profile mini-language of [`crate::profile`].

use crate::error::{Error, Result};
use crate::output::fmt_f64;
use crate::profile::{parse_list, Forcing, Profile, TimeProfile};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvFile {
    entries: BTreeMap<String, String>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`"))))
            .transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?.ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key).map(parse_list).transpose()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_string(), value.into());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Canonical text: keys sorted, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

/// `lo:hi:step` grid specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridSpec {
    /// Grid points `lo, lo + step, ..` up to `hi` inclusive (within half a step).
    pub fn points(&self) -> Vec<f64> {
        if self.step <= 0.0 || self.hi < self.lo {
            return vec![self.lo];
        }
        let count = ((self.hi - self.lo) / self.step + 0.5).floor() as usize;
        (0..=count).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad grid `{s}`")));
        match parts.as_slice() {
            [lo, hi, step] => Ok(Self { lo: num(lo)?, hi: num(hi)?, step: num(step)? }),
            [single] => {
                let v = num(single)?;
                Ok(Self { lo: v, hi: v, step: 0.0 })
            }
            _ => Err(Error::Config(format!("bad grid `{s}`; expected lo:hi:step"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Uniform(f64),
    Jittered(f64),
    Explicit(Vec<f64>),
}

impl FromStr for ScheduleSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (tag, args) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::Config(format!("bad schedule `{s}`"));
        match tag.trim() {
            "uniform" => Ok(Self::Uniform(args.trim().parse().map_err(|_| bad())?)),
            "jitter" => Ok(Self::Jittered(args.trim().parse().map_err(|_| bad())?)),
            "list" => Ok(Self::Explicit(parse_list(args)?)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    Constant(f64),
    Uniform(f64),
    Sinusoid { amplitude: f64, frequency: f64, phase: f64 },
}

impl FromStr for NoiseSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (tag, args) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::Config(format!("bad noise `{s}`"));
        match tag.trim() {
            "none" => Ok(Self::None),
            "const" => Ok(Self::Constant(args.trim().parse().map_err(|_| bad())?)),
            "uniform" => Ok(Self::Uniform(args.trim().parse().map_err(|_| bad())?)),
            "sin" => match parse_list(args)?.as_slice() {
                [a, f, p] => Ok(Self::Sinusoid { amplitude: *a, frequency: *f, phase: *p }),
                _ => Err(bad()),
            },
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GainSpec {
    Explicit(Vec<f64>),
    Poles(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeStrategy {
    Lyapunov,
    Sampled,
    User { r: f64, omega: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub q: f64,
    pub order: usize,
    pub kernel: Profile,
    pub forcing: Forcing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationConfig {
    pub r: f64,
    pub r_grid: GridSpec,
    pub period: Option<f64>,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub modes: usize,
    pub plant_ic: Profile,
    pub observer_ic: Profile,
    pub schedule: ScheduleSpec,
    pub noise: NoiseSpec,
    pub horizon: f64,
    pub record_dt: f64,
    pub seed: Option<u64>,
    pub runs: usize,
    pub verify: bool,
    pub fast_path: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub profile: Profile,
    pub q: f64,
    pub horizon: f64,
    pub grid: usize,
    pub dt: f64,
    pub modes: usize,
    pub convergence: bool,
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub gain: GainSpec,
    pub envelope: EnvelopeStrategy,
    pub certification: CertificationConfig,
    pub simulation: SimulationConfig,
    pub oracle: OracleConfig,
    pub output_dir: Option<String>,
    /// The parsed source, echoed next to the outputs.
    pub source: KvFile,
}

impl RunConfig {
    pub fn from_kv(kv: KvFile) -> Result<Self> {
        let known = [
            "problem.q",
            "problem.N",
            "problem.kernel",
            "problem.forcing",
            "problem.forcing.space",
            "problem.forcing.time",
            "gain.L",
            "gain.poles",
            "envelope.strategy",
            "envelope.R",
            "envelope.omega",
            "certification.r",
            "certification.r_grid",
            "certification.T",
            "certification.margin",
            "simulation.M",
            "simulation.plant_ic",
            "simulation.observer_ic",
            "simulation.schedule",
            "simulation.noise",
            "simulation.horizon",
            "simulation.record_dt",
            "simulation.seed",
            "simulation.runs",
            "simulation.verify",
            "simulation.fast_path",
            "oracle.profile",
            "oracle.q",
            "oracle.horizon",
            "oracle.grid",
            "oracle.dt",
            "oracle.M",
            "oracle.convergence",
            "output.dir",
        ];
        if let Some(k) = kv.keys().find(|k| !known.contains(k)) {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }

        let q: f64 = kv.require("problem.q")?;
        let forcing = match (kv.raw("problem.forcing"), kv.raw("problem.forcing.space")) {
            (Some("zero") | None, None) => Forcing::Zero,
            (_, Some(space)) => Forcing::Separable {
                space: space.parse()?,
                time: kv.get::<TimeProfile>("problem.forcing.time")?.unwrap_or(TimeProfile::Constant(1.0)),
            },
            (Some(other), None) => return Err(Error::Config(format!("bad forcing `{other}`"))),
        };
        let problem =
            ProblemConfig { q, order: kv.require("problem.N")?, kernel: kv.require("problem.kernel")?, forcing };
        if problem.kernel.is_stochastic() {
            return Err(Error::Config("the output kernel must be deterministic".into()));
        }

        let gain = match (kv.list("gain.L")?, kv.list("gain.poles")?) {
            (Some(l), None) => GainSpec::Explicit(l),
            (None, Some(p)) => GainSpec::Poles(p),
            _ => return Err(Error::Config("give exactly one of gain.L or gain.poles".into())),
        };

        let envelope = match kv.raw("envelope.strategy").unwrap_or("lyapunov") {
            "lyapunov" => EnvelopeStrategy::Lyapunov,
            "sampled" => EnvelopeStrategy::Sampled,
            "user" => EnvelopeStrategy::User { r: kv.require("envelope.R")?, omega: kv.require("envelope.omega")? },
            other => return Err(Error::Config(format!("unknown envelope strategy `{other}`"))),
        };

        let certification = CertificationConfig {
            r: kv.get("certification.r")?.unwrap_or(0.0),
            r_grid: kv.get("certification.r_grid")?.unwrap_or(GridSpec { lo: -1.0, hi: 1.0, step: 0.005 }),
            period: kv.get("certification.T")?,
            margin: kv.get("certification.margin")?.unwrap_or(crate::certificate::STRICT_MARGIN),
        };

        let schedule: ScheduleSpec =
            kv.get("simulation.schedule")?.unwrap_or(ScheduleSpec::Uniform(certification.period.unwrap_or(0.01)));
        let simulation = SimulationConfig {
            modes: kv.get("simulation.M")?.unwrap_or(64),
            plant_ic: kv.get("simulation.plant_ic")?.unwrap_or(Profile::Zero),
            observer_ic: kv.get("simulation.observer_ic")?.unwrap_or(Profile::Zero),
            schedule,
            noise: kv.get("simulation.noise")?.unwrap_or(NoiseSpec::None),
            horizon: kv.get("simulation.horizon")?.unwrap_or(5.0),
            record_dt: kv.get("simulation.record_dt")?.unwrap_or(0.01),
            seed: kv.get("simulation.seed")?,
            runs: kv.get("simulation.runs")?.unwrap_or(1),
            verify: kv.get("simulation.verify")?.unwrap_or(true),
            fast_path: kv.get("simulation.fast_path")?.unwrap_or(false),
        };
        if simulation.modes < problem.order {
            return Err(Error::Config("simulation.M must be at least problem.N".into()));
        }
        if simulation.runs == 0 {
            return Err(Error::Config("simulation.runs must be positive".into()));
        }

        let oracle = OracleConfig {
            profile: kv.get("oracle.profile")?.unwrap_or(Profile::Cosine(2.0)),
            q: kv.get("oracle.q")?.unwrap_or(q),
            horizon: kv.get("oracle.horizon")?.unwrap_or(0.01),
            grid: kv.get("oracle.grid")?.unwrap_or(201),
            dt: kv.get("oracle.dt")?.unwrap_or(1e-6),
            modes: kv.get("oracle.M")?.unwrap_or(64),
            convergence: kv.get("oracle.convergence")?.unwrap_or(false),
        };

        Ok(Self {
            problem,
            gain,
            envelope,
            certification,
            simulation,
            oracle,
            output_dir: kv.get("output.dir")?,
            source: kv,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_kv(KvFile::parse(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_kv(KvFile::load(path)?)
    }

    pub fn is_stochastic(&self) -> bool {
        let s = &self.simulation;
        s.plant_ic.is_stochastic()
            || s.observer_ic.is_stochastic()
            || matches!(s.schedule, ScheduleSpec::Jittered(_))
            || matches!(s.noise, NoiseSpec::Uniform(_))
    }

    /// Overrides the seed (command-line `--seed`), keeping the echoed source in sync.
    pub fn set_seed(&mut self, seed: u64) {
        self.simulation.seed = Some(seed);
        self.source.set("simulation.seed", seed.to_string());
    }

    pub fn seed(&self) -> Result<u64> {
        match self.simulation.seed {
            Some(s) => Ok(s),
            None if self.is_stochastic() => {
                Err(Error::Config("simulation.seed is required for stochastic runs".into()))
            }
            None => Ok(0),
        }
    }

    pub fn echo(&self) -> String {
        self.source.to_text()
    }
}

pub(crate) fn fmt_grid(g: &GridSpec) -> String {
    format!("{}:{}:{}", fmt_f64(g.lo), fmt_f64(g.hi), fmt_f64(g.step))
}
