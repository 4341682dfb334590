//! Exact propagation of plant, observer and predictor between events.

use crate::design::DesignResult;
use crate::error::Result;
use crate::linalg::expm;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Plant modes, observer modes and predictor state at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    pub t: f64,
    pub plant: Vec<f64>,
    /// Either all `M + 1` modes or only the observed head `0..=N`.
    pub observer: Vec<f64>,
    pub w: f64,
}

impl HybridState {
    /// `e_n = observer_n - plant_n`, treating missing observer modes as zero.
    pub fn error_modes(&self) -> Vec<f64> {
        self.plant.iter().enumerate().map(|(n, a)| self.observer.get(n).copied().unwrap_or(0.0) - a).collect()
    }

    /// `sum_{n <= order} c_n a_n`.
    pub fn observed_output(&self, kernel: &[f64], order: usize) -> f64 {
        kernel.iter().zip(&self.plant).take(order + 1).map(|(c, a)| c * a).sum()
    }
}

/// New predictor value after sampling `y`: `y - sum_{n > N} c_n hat a_n`.
pub fn predictor_reset(state: &HybridState, y_sample: f64, kernel: &[f64], order: usize) -> f64 {
    let tail: f64 = kernel.iter().zip(&state.observer).skip(order + 1).map(|(c, a)| c * a).sum();
    y_sample - tail
}

struct Step {
    /// `[Phi | Gamma]` for the coupled block.
    block: DMatrix<f64>,
    decay: Vec<f64>,
    /// `(exp(mu dt) - 1) / mu`, `dt` at `mu = 0`.
    forced: Vec<f64>,
}

const CACHE_LIMIT: usize = 4096;

/// Interval propagator for a fixed design, predictor parameter and truncation.
pub struct Propagator {
    order: usize,
    mu: Vec<f64>,
    /// `[[F, B], [0, 0]]` with `B = [I; C_N]`.
    generator: DMatrix<f64>,
    cache: HashMap<u64, Step>,
}

impl Propagator {
    /// `mu` holds `mu_0..=mu_M` for the simulation truncation.
    pub fn new(design: &DesignResult, r: f64, mu: Vec<f64>) -> Result<Self> {
        let gain = design.gain()?;
        let n = design.dim();
        let c = &design.c;
        let size = 2 * n + 1;
        let mut g = DMatrix::zeros(size, size);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = gain[i] * c[j];
            }
            g[(i, i)] += design.mu[i];
            g[(i, n)] = -gain[i];
            g[(n, i)] = (design.mu[i] + r) * c[i];
            g[(i, n + 1 + i)] = 1.0;
            g[(n, n + 1 + i)] = c[i];
        }
        g[(n, n)] = -r;
        Ok(Self { order: design.order, mu, generator: g, cache: HashMap::new() })
    }

    pub fn modes(&self) -> usize {
        self.mu.len() - 1
    }

    fn step(&mut self, dt: f64) -> Result<&Step> {
        if self.cache.len() >= CACHE_LIMIT {
            self.cache.clear();
        }
        let key = dt.to_bits();
        if !self.cache.contains_key(&key) {
            let full = expm(&self.generator, dt)?;
            let n = self.order + 1;
            let block = full.rows(0, n + 1).into_owned();
            let decay = self.mu.iter().map(|m| (m * dt).exp()).collect();
            let forced = self.mu.iter().map(|&m| if m == 0.0 { dt } else { (m * dt).exp_m1() / m }).collect();
            self.cache.insert(key, Step { block, decay, forced });
        }
        Ok(&self.cache[&key])
    }

    /// Advances `state` by `dt` with modal forcing `forcing` (constant over the step,
    /// length `M + 1` or empty for no forcing).
    pub fn propagate(&mut self, state: &mut HybridState, dt: f64, forcing: &[f64]) -> Result<()> {
        if dt == 0.0 {
            return Ok(());
        }
        let n = self.order + 1;
        let step = self.step(dt)?;
        let f = |k: usize| forcing.get(k).copied().unwrap_or(0.0);

        for (k, a) in state.plant.iter_mut().enumerate() {
            *a = step.decay[k] * *a + step.forced[k] * f(k);
        }

        let mut z = DVector::zeros(2 * n + 1);
        for k in 0..n {
            z[k] = state.observer[k];
            z[n + 1 + k] = f(k);
        }
        z[n] = state.w;
        let next = &step.block * z;
        for k in 0..n {
            state.observer[k] = next[k];
        }
        state.w = next[n];

        for k in n..state.observer.len() {
            state.observer[k] = step.decay[k] * state.observer[k] + step.forced[k] * f(k);
        }
        state.t += dt;
        Ok(())
    }
}
