//! Event-driven hybrid simulation of plant, observer and inter-sample predictor.
//!
//! Between events the system is linear time-invariant and is advanced exactly.
//! Forcing enters through modal coefficients held constant over each sampling
//! interval; a time-varying amplitude is replaced by its average over the interval,
//! which is exact only for piecewise-constant amplitudes.

mod propagate;
mod schedule;

pub use propagate::{predictor_reset, HybridState, Propagator};
pub use schedule::{seeded_rng, NoiseModel, SamplingSchedule, STREAM_INITIAL, STREAM_NOISE, STREAM_SCHEDULE};

use crate::design::DesignResult;
use crate::error::{Error, Result};
use crate::output::{fmt_f64, CsvWriter};
use crate::profile::{Forcing, Profile, TimeProfile};
use crate::spectral::{spatial_norms, ModalVector, SpatialNorms, SpectralOperator};
use std::io::{self, Write};

/// Tail content tolerated by the reduced observer.
pub const FAST_PATH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PlantConfig {
    pub q: f64,
    /// Simulation truncation `M`.
    pub modes: usize,
    /// `c_0..=c_M`.
    pub kernel: Vec<f64>,
    pub initial_plant: ModalVector,
    pub initial_observer: ModalVector,
    /// Modal coefficients of the spatial forcing factor; empty when unforced.
    pub forcing_space: Vec<f64>,
    pub forcing_time: TimeProfile,
}

impl PlantConfig {
    pub fn new(
        q: f64,
        modes: usize,
        kernel: &Profile,
        initial_plant: ModalVector,
        initial_observer: ModalVector,
        forcing: &Forcing,
    ) -> Result<Self> {
        let (forcing_space, forcing_time) = match forcing {
            Forcing::Zero => (Vec::new(), TimeProfile::Constant(0.0)),
            Forcing::Separable { space, time } => (space.modal(modes)?.coeffs, time.clone()),
        };
        let cfg = Self {
            q,
            modes,
            kernel: kernel.modal(modes)?.coeffs,
            initial_plant: initial_plant.resized(modes),
            initial_observer: initial_observer.resized(modes),
            forcing_space,
            forcing_time,
        };
        if !(cfg.initial_plant.is_finite() && cfg.initial_observer.is_finite())
            || cfg.forcing_space.iter().any(|f| !f.is_finite())
        {
            return Err(Error::Config("non-finite initial data or forcing".into()));
        }
        Ok(cfg)
    }

    pub fn initial_error(&self) -> ModalVector {
        self.initial_observer.sub(&self.initial_plant)
    }

    fn forcing_at(&self, t0: f64, t1: f64) -> Vec<f64> {
        if self.forcing_space.is_empty() {
            return Vec::new();
        }
        let g = self.forcing_time.average(t0, t1);
        self.forcing_space.iter().map(|h| g * h).collect()
    }
}

/// What to simulate besides the plant.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub r: f64,
    pub schedule: SamplingSchedule,
    pub noise: NoiseModel,
    pub horizon: f64,
    pub record_dt: f64,
    /// Keep the error coefficients of every record.
    pub record_modes: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub error: SpatialNorms,
    /// `w - <G c, u>`.
    pub predictor_error: f64,
    /// Running `max |xi(t_j)|` over samples up to `t`.
    pub xi_sup: f64,
    pub is_sample: bool,
    pub error_modes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridTrace {
    pub records: Vec<TraceRecord>,
    pub sample_times: Vec<f64>,
    pub final_state: HybridState,
}

pub const TRACE_HEADER: [&str; 9] =
    ["t", "norm_L2", "norm_D2", "norm_D4", "predictor_error", "bound21", "bound22", "bound23", "is_sample_time"];

impl HybridTrace {
    /// Writes the trace; missing bounds are written as `nan`.
    pub fn write_csv<W: Write>(&self, out: W, bounds: Option<&[[f64; 3]]>) -> io::Result<W> {
        let mut csv = CsvWriter::new(out, &TRACE_HEADER)?;
        for (i, r) in self.records.iter().enumerate() {
            let b = bounds.and_then(|b| b.get(i)).copied().unwrap_or([f64::NAN; 3]);
            let cells = [
                fmt_f64(r.t),
                fmt_f64(r.error.l2),
                fmt_f64(r.error.d2),
                fmt_f64(r.error.d4),
                fmt_f64(r.predictor_error.abs()),
                fmt_f64(b[0]),
                fmt_f64(b[1]),
                fmt_f64(b[2]),
                u8::from(r.is_sample).to_string(),
            ];
            csv.row(&cells)?;
        }
        Ok(csv.into_inner())
    }

    pub fn sup_error_after(&self, t0: f64) -> f64 {
        self.records.iter().filter(|r| r.t >= t0).map(|r| r.error.l2).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    t: f64,
    sample: Option<usize>,
    record: bool,
}

fn merge_events(samples: &[f64], horizon: f64, record_dt: f64) -> Vec<Event> {
    let mut records: Vec<f64> = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * record_dt;
        if t > horizon * (1.0 + 1e-12) {
            break;
        }
        records.push(t.min(horizon));
        k += 1;
    }
    if records.last().is_none_or(|&t| t < horizon) {
        records.push(horizon);
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);

    let mut events = Vec::with_capacity(samples.len() + records.len());
    let (mut i, mut j) = (0, 0);
    while i < samples.len() && samples[i] <= horizon || j < records.len() {
        let s = samples.get(i).copied().filter(|&t| t <= horizon);
        let r = records.get(j).copied();
        match (s, r) {
            (Some(ts), Some(tr)) if close(ts, tr) => {
                events.push(Event { t: ts, sample: Some(i), record: true });
                i += 1;
                j += 1;
            }
            (Some(ts), Some(tr)) if ts < tr => {
                events.push(Event { t: ts, sample: Some(i), record: false });
                i += 1;
            }
            (Some(ts), None) => {
                events.push(Event { t: ts, sample: Some(i), record: false });
                i += 1;
            }
            (_, Some(tr)) => {
                events.push(Event { t: tr, sample: None, record: true });
                j += 1;
            }
            (None, None) => break,
        }
    }
    events
}

/// Full modal simulation: plant and observer both carry `M + 1` modes.
pub fn run(plant: &PlantConfig, design: &DesignResult, spec: &RunSpec) -> Result<HybridTrace> {
    simulate(plant, design, spec, false)
}

/// Reduced observer carrying only the observed modes `0..=N` and the predictor.
///
/// Requires the observer initial condition and the forcing to have no content
/// beyond mode `N`.
pub fn run_fast_path(plant: &PlantConfig, design: &DesignResult, spec: &RunSpec) -> Result<HybridTrace> {
    let n = design.order;
    let observer_tail = plant.initial_observer.tail_max(n);
    if observer_tail > FAST_PATH_TOL {
        return Err(Error::FastPath(format!("observer initial condition has tail content {observer_tail:e}")));
    }
    let forcing_tail = ModalVector::new(plant.forcing_space.clone()).tail_max(n);
    if forcing_tail > FAST_PATH_TOL {
        return Err(Error::FastPath(format!("forcing has tail content {forcing_tail:e}")));
    }
    simulate(plant, design, spec, true)
}

fn simulate(plant: &PlantConfig, design: &DesignResult, spec: &RunSpec, reduced: bool) -> Result<HybridTrace> {
    if plant.modes < design.order {
        return Err(Error::Dimension(format!(
            "simulation truncation {} below design order {}",
            plant.modes, design.order
        )));
    }
    if (plant.q - design.q).abs() > 1e-12 * plant.q.abs().max(1.0) {
        return Err(Error::Config(format!("plant q = {} differs from design q = {}", plant.q, design.q)));
    }
    if !(spec.horizon > 0.0 && spec.record_dt > 0.0) {
        return Err(Error::Config("horizon and record_dt must be positive".into()));
    }
    let samples = spec.schedule.times(spec.horizon)?;
    let xi = spec.noise.samples(&samples);
    let events = merge_events(&samples, spec.horizon, spec.record_dt);

    let mut prop = Propagator::new(design, spec.r, SpectralOperator::new(plant.q).spectrum(plant.modes))?;
    let observer = if reduced {
        plant.initial_observer.coeffs[..=design.order].to_vec()
    } else {
        plant.initial_observer.coeffs.clone()
    };
    let mut state = HybridState { t: 0.0, plant: plant.initial_plant.coeffs.clone(), observer, w: 0.0 };
    let mut forcing = Vec::new();
    let mut xi_sup: f64 = 0.0;
    let mut records = Vec::with_capacity(events.len());

    for ev in events {
        let dt = ev.t - state.t;
        prop.propagate(&mut state, dt, &forcing)?;
        state.t = ev.t;
        if let Some(j) = ev.sample {
            let y = state.observed_output(&plant.kernel, plant.modes) + xi[j];
            state.w = predictor_reset(&state, y, &plant.kernel, design.order);
            xi_sup = xi_sup.max(xi[j].abs());
            let next = samples.get(j + 1).copied().unwrap_or(spec.horizon);
            forcing = plant.forcing_at(samples[j], next.max(samples[j]));
        }
        let e = state.error_modes();
        if !e.iter().all(|x| x.is_finite()) || !state.w.is_finite() {
            return Err(Error::ExpOverflow(state.t));
        }
        records.push(TraceRecord {
            t: ev.t,
            error: spatial_norms(&e),
            predictor_error: state.w - state.observed_output(&plant.kernel, design.order),
            xi_sup,
            is_sample: ev.sample.is_some(),
            error_modes: spec.record_modes.then_some(e),
        });
    }
    Ok(HybridTrace { records, sample_times: samples, final_state: state })
}
