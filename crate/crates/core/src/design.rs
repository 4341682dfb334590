//! Finite-dimensional design data `(A_N, C_N)`, observability checks and gain synthesis.

use crate::config::KvFile;
use crate::error::{Error, Result};
use crate::linalg::{self, euclid};
use crate::output::fmt_f64;
use crate::profile::{fmt_list, Profile};
use crate::spectral::{laplacian_eigenvalue, SpectralOperator};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use std::fmt::Write as _;

/// Default tolerance for both clauses of the observability check.
pub const ASSUMPTION_B_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    /// Design order `N`; modes `0..=N` are observed.
    pub order: usize,
    pub q: f64,
    /// `mu_0..=mu_N`.
    pub mu: Vec<f64>,
    /// `c_0..=c_N`.
    pub c: Vec<f64>,
    /// `||c||` over (0, 1).
    pub kernel_norm: f64,
    pub gain: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionBReport {
    pub passed: bool,
    /// Human-readable description of every failing clause.
    pub failures: Vec<String>,
}

/// Builds `A_N = diag(mu_0..mu_N)` and `C_N = [c_0 .. c_N]` for kernel `c`.
pub fn build_design(q: f64, order: usize, kernel: &Profile) -> Result<DesignResult> {
    if order < 1 || laplacian_eigenvalue(order + 1) <= q {
        return Err(Error::DesignOrder { n: order, q });
    }
    let c = kernel.modal(order)?.coeffs;
    let kernel_norm = kernel.l2_norm()?;
    Ok(DesignResult { order, q, mu: SpectralOperator::new(q).spectrum(order), c, kernel_norm, gain: None })
}

impl DesignResult {
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    pub fn a_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.mu))
    }

    pub fn c_row(&self) -> RowDVector<f64> {
        RowDVector::from_row_slice(&self.c)
    }

    /// `mu_{N+1}`, the slowest unobserved rate.
    pub fn mu_tail(&self) -> f64 {
        SpectralOperator::new(self.q).mu(self.order + 1)
    }

    pub fn with_gain(mut self, gain: Vec<f64>) -> Result<Self> {
        if gain.len() != self.dim() {
            return Err(Error::Dimension(format!("gain has {} entries, design needs {}", gain.len(), self.dim())));
        }
        self.gain = Some(gain);
        Ok(self)
    }

    pub fn gain(&self) -> Result<&[f64]> {
        self.gain.as_deref().ok_or_else(|| Error::Config("design has no observer gain".into()))
    }

    /// `|L|`.
    pub fn gain_norm(&self) -> Result<f64> {
        Ok(euclid(self.gain()?))
    }

    /// `A_N + L C_N`.
    pub fn closed_loop(&self) -> Result<DMatrix<f64>> {
        let l = DVector::from_column_slice(self.gain()?);
        Ok(self.a_matrix() + l * self.c_row())
    }

    /// `|C_N|`, equal to `||G c||`.
    pub fn c_norm(&self) -> f64 {
        euclid(&self.c)
    }

    /// `|C_N (A_N + r I)|`.
    pub fn shifted_output_norm(&self, r: f64) -> f64 {
        self.c.iter().zip(&self.mu).map(|(c, mu)| (c * (mu + r)).powi(2)).sum::<f64>().sqrt()
    }

    /// `||(I - G) c||` from Parseval, clamped at zero.
    pub fn kernel_tail_norm(&self) -> f64 {
        (self.kernel_norm.powi(2) - self.c_norm().powi(2)).max(0.0).sqrt()
    }

    pub fn check_assumption_b(&self, tol: f64) -> AssumptionBReport {
        let mut failures = Vec::new();
        let pi2 = std::f64::consts::PI.powi(2);
        for n in 0..=self.order {
            for m in n + 1..=self.order {
                let resonance = ((n * n + m * m) as f64) * pi2;
                if (self.q - resonance).abs() <= tol {
                    failures.push(format!("q = ({n}^2+{m}^2)pi^2"));
                }
            }
        }
        for (n, c) in self.c.iter().enumerate() {
            if c.abs() <= tol {
                failures.push(format!("c_{n} = 0"));
            }
        }
        AssumptionBReport { passed: failures.is_empty(), failures }
    }

    /// Determinant of `[C_N; C_N A_N; ..; C_N A_N^N]` in Vandermonde product form.
    pub fn observability_determinant(&self) -> f64 {
        observability_determinant(&self.mu, &self.c)
    }

    /// Gain placing the spectrum of `A_N + L C_N` at the given real poles.
    pub fn place_gain(&self, poles: &[f64]) -> Result<Vec<f64>> {
        if poles.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{} poles requested for a design of dimension {}",
                poles.len(),
                self.dim()
            )));
        }
        if let Some(&p) = poles.iter().find(|p| !(**p < 0.0)) {
            return Err(Error::UnstablePole(p));
        }
        let det = self.observability_determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Unobservable { determinant: det });
        }
        // Ackermann's formula specialised to diagonal A: with distinct mu_i the
        // last column of the inverse observability matrix is 1/(c_i prod_{j!=i}(mu_i - mu_j)).
        let char_poly = |s: f64| poles.iter().map(|p| s - p).product::<f64>();
        let gain = (0..self.dim())
            .map(|i| {
                let mi = self.mu[i];
                let vander: f64 = (0..self.dim()).filter(|&j| j != i).map(|j| mi - self.mu[j]).product();
                -char_poly(mi) / (self.c[i] * vander)
            })
            .collect();
        Ok(gain)
    }

    /// Shift `sigma` beyond which the observer's generator plus `sigma I` is monotone.
    pub fn monotonicity_shift(&self, r: f64) -> Result<f64> {
        let phi = self.gain_norm()?;
        let k = self.shifted_output_norm(r);
        let gc = self.c_norm();
        Ok(0.5 * (phi + k) + (gc * phi + 0.5 * self.q * self.q).max(-r))
    }

    /// Key-value text with 17 significant digits; [`DesignResult::from_kv`] restores it bit-for-bit.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "design.q = {}", fmt_f64(self.q));
        let _ = writeln!(s, "design.N = {}", self.order);
        let _ = writeln!(s, "design.mu = {}", fmt_list(&self.mu));
        let _ = writeln!(s, "design.c = {}", fmt_list(&self.c));
        let _ = writeln!(s, "design.kernel_norm = {}", fmt_f64(self.kernel_norm));
        if let Some(l) = &self.gain {
            let _ = writeln!(s, "design.L = {}", fmt_list(l));
        }
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let order: usize = kv.require("design.N")?;
        let mu = kv.list("design.mu")?.unwrap_or_default();
        let c = kv.list("design.c")?.unwrap_or_default();
        if mu.len() != order + 1 || c.len() != order + 1 {
            return Err(Error::Config("design.mu / design.c length must be N+1".into()));
        }
        Ok(Self {
            order,
            q: kv.require("design.q")?,
            mu,
            c,
            kernel_norm: kv.require("design.kernel_norm")?,
            gain: kv.list("design.L")?,
        })
    }
}

fn polish(start: Complex<f64>, mu: &[f64], weights: &[f64]) -> Complex<f64> {
    let secular = |s: Complex<f64>| {
        let mut f = Complex::new(1.0, 0.0);
        let mut df = Complex::new(0.0, 0.0);
        for (&m, &w) in mu.iter().zip(weights) {
            let inv = (s - m).inv();
            f -= inv * w;
            df += inv * inv * w;
        }
        (f, df)
    };
    let (f0, _) = secular(start);
    if !f0.norm().is_finite() {
        return start;
    }
    let mut s = start;
    for _ in 0..50 {
        let (f, df) = secular(s);
        let step = f / df;
        if !step.norm().is_finite() {
            break;
        }
        s -= step;
        if step.norm() <= 1e-15 * s.norm().max(1.0) {
            break;
        }
    }
    let (f1, _) = secular(s);
    let close = (s - start).norm() <= 1e-3 * start.norm().max(1.0);
    if close && f1.norm() <= f0.norm() {
        s
    } else {
        start
    }
}

/// `prod_{i<j} (mu_j - mu_i) * prod_j c_j`.
pub fn observability_determinant(mu: &[f64], c: &[f64]) -> f64 {
    let mut det: f64 = c.iter().product();
    for j in 0..mu.len() {
        for i in 0..j {
            det *= mu[j] - mu[i];
        }
    }
    det
}

/// Stacked observability matrix `[C; C A; ..; C A^{n-1}]`.
pub fn observability_matrix(a: &DMatrix<f64>, c: &RowDVector<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut rows = DMatrix::zeros(n, n);
    let mut row = c.clone();
    for k in 0..n {
        rows.set_row(k, &row);
        row = &row * a;
    }
    rows
}

/// General single-output Ackermann placement: `L` with `spec(A + L C) = poles`.
pub fn ackermann_gain(a: &DMatrix<f64>, c: &RowDVector<f64>, poles: &[f64]) -> Result<DVector<f64>> {
    let n = a.nrows();
    if poles.len() != n {
        return Err(Error::Dimension("pole count must match the state dimension".into()));
    }
    let obs = observability_matrix(a, c);
    let det = obs.determinant();
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let col = obs.lu().solve(&en).ok_or(Error::Unobservable { determinant: det })?;
    // p(A) = prod (A - p_i I)
    let id = DMatrix::<f64>::identity(n, n);
    let p_of_a = poles.iter().fold(id.clone(), |acc, p| acc * (a - &id * *p));
    Ok(-(p_of_a * col))
}

/// Real and imaginary parts of the closed-loop spectrum, sorted by real part.
///
/// Eigenvalues of the balanced closed loop are polished by Newton steps on
/// `1 - sum_i L_i c_i / (s - mu_i)`, whose zeros are the closed-loop spectrum;
/// high-gain designs are strongly non-normal and a plain QR sweep loses digits.
pub fn closed_loop_eigenvalues(design: &DesignResult) -> Result<Vec<(f64, f64)>> {
    let weights: Vec<f64> = design.gain()?.iter().zip(&design.c).map(|(l, c)| l * c).collect();
    let mut ev: Vec<(f64, f64)> = linalg::eigenvalues(&design.closed_loop()?)
        .into_iter()
        .map(|(re, im)| polish(Complex::new(re, im), &design.mu, &weights))
        .map(|z| (z.re, z.im))
        .collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(ev)
}
