//! Cosine eigenbasis of the Neumann Laplacian on (0, 1) and modal transforms.
//!
//! The basis is `phi_0 = 1`, `phi_n(x) = sqrt(2) cos(n pi x)`; it diagonalises
//! `u -> -u'''' - q u''` under `u' = u''' = 0` at both ends, with eigenvalues
//! `mu_n = -lambda_n (lambda_n - q)`, `lambda_n = n^2 pi^2`.

use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_ABS_TOL};
use std::f64::consts::{PI, SQRT_2};

/// Evaluates the basis function `phi_n` at `x`.
pub fn basis_eval(n: usize, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    Ok(basis_unchecked(n, x))
}

#[inline]
pub(crate) fn basis_unchecked(n: usize, x: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        SQRT_2 * (n as f64 * PI * x).cos()
    }
}

/// Laplacian eigenvalue `lambda_n = n^2 pi^2`.
#[inline]
pub fn laplacian_eigenvalue(n: usize) -> f64 {
    let k = n as f64 * PI;
    k * k
}

/// Modal growth rate `mu_n = -lambda_n (lambda_n - q)`.
#[inline]
pub fn modal_eigenvalue(n: usize, q: f64) -> f64 {
    let lambda = laplacian_eigenvalue(n);
    -lambda * (lambda - q)
}

/// The linear Kuramoto–Sivashinsky operator for a fixed `q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOperator {
    pub q: f64,
}

impl SpectralOperator {
    pub fn new(q: f64) -> Self {
        Self { q }
    }

    pub fn mu(&self, n: usize) -> f64 {
        modal_eigenvalue(n, self.q)
    }

    /// `mu_0..=mu_m`.
    pub fn spectrum(&self, m: usize) -> Vec<f64> {
        (0..=m).map(|n| self.mu(n)).collect()
    }
}

/// Dense modal coefficients `a_0..=a_M`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModalVector {
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpatialNorms {
    pub l2: f64,
    pub d2: f64,
    pub d4: f64,
}

impl ModalVector {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    /// Unit vector in mode `n`, truncated at `order`.
    pub fn unit(n: usize, order: usize) -> Self {
        let mut v = Self::zeros(order.max(n));
        v.coeffs[n] = 1.0;
        v
    }

    /// Truncation order `M` (index of the last stored coefficient).
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn get(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    /// Zero-pads or truncates to order `m`.
    pub fn resized(&self, m: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(m + 1, 0.0);
        Self { coeffs }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// `L2`, `||u''||` and `||u''''||` from the modal coefficients.
    pub fn spatial_norms(&self) -> SpatialNorms {
        spatial_norms(&self.coeffs)
    }

    /// Euclidean norm of the first `n + 1` coefficients, i.e. `||G v||` for design order `n`.
    pub fn head_norm(&self, n: usize) -> f64 {
        self.coeffs.iter().take(n + 1).map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Norms of the tail `(I - G) v` for design order `n`.
    pub fn tail_norms(&self, n: usize) -> SpatialNorms {
        let mut tail = self.coeffs.clone();
        for a in tail.iter_mut().take(n + 1) {
            *a = 0.0;
        }
        spatial_norms(&tail)
    }

    /// Largest absolute coefficient beyond mode `n`.
    pub fn tail_max(&self, n: usize) -> f64 {
        self.coeffs.iter().skip(n + 1).fold(0.0_f64, |m, a| m.max(a.abs()))
    }

    pub fn sub(&self, other: &ModalVector) -> ModalVector {
        let m = self.coeffs.len().max(other.coeffs.len());
        ModalVector { coeffs: (0..m).map(|n| self.get(n) - other.get(n)).collect() }
    }

    pub fn dot(&self, other: &ModalVector) -> f64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    /// Pointwise synthesis `sum_n a_n phi_n(x)` on `grid`.
    pub fn reconstruct(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter()
            .map(|&x| {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Domain(x));
                }
                Ok(self.eval_unchecked(x))
            })
            .collect()
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        self.coeffs.iter().enumerate().map(|(n, a)| a * basis_unchecked(n, x)).sum()
    }
}

pub fn spatial_norms(coeffs: &[f64]) -> SpatialNorms {
    let mut s0 = 0.0;
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for (n, a) in coeffs.iter().enumerate() {
        let a2 = a * a;
        let l = laplacian_eigenvalue(n);
        s0 += a2;
        s2 += l * l * a2;
        s4 += l * l * l * l * a2;
    }
    SpatialNorms { l2: s0.sqrt(), d2: s2.sqrt(), d4: s4.sqrt() }
}

/// `<profile, phi_n>` by adaptive quadrature.
pub fn project_mode<F: Fn(f64) -> f64>(profile: F, n: usize) -> Result<f64> {
    Ok(quadrature::integrate(|x| profile(x) * basis_unchecked(n, x), 0.0, 1.0, DEFAULT_ABS_TOL)?.value)
}

/// Projects a profile onto modes `0..=order`.
pub fn project<F: Fn(f64) -> f64>(profile: F, order: usize) -> Result<ModalVector> {
    let coeffs = (0..=order).map(|n| project_mode(&profile, n)).collect::<Result<Vec<_>>>()?;
    Ok(ModalVector { coeffs })
}

/// `||profile||` by quadrature of its square.
pub fn l2_norm<F: Fn(f64) -> f64>(profile: F) -> Result<f64> {
    let r = quadrature::integrate(|x| profile(x).powi(2), 0.0, 1.0, DEFAULT_ABS_TOL)?;
    Ok(r.value.max(0.0).sqrt())
}

/// `n` equally spaced points covering `[0, 1]`.
pub fn uniform_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}
