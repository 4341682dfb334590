//! Dense linear-algebra helpers: matrix exponential, norms, spectra, Lyapunov solves.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[allow(clippy::excessive_precision)]
// Backward-error thresholds of the [m/m] Pade approximants in the 1-norm.
const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Ratio of extreme singular values.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Spectrum, computed after balancing.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<(f64, f64)> {
    balance(a).complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

/// Diagonal similarity with power-of-two factors equalising off-diagonal row and
/// column norms (Parlett-Reinsch); the spectrum is unchanged exactly.
pub fn balance(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut b = a.clone();
    let n = b.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let col: f64 = (0..n).filter(|&k| k != i).map(|k| b[(k, i)].abs()).sum();
            let row: f64 = (0..n).filter(|&k| k != i).map(|k| b[(i, k)].abs()).sum();
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let f = 2f64.powi((0.5 * (row / col).log2()).round() as i32);
            if col * f + row / f < 0.95 * (col + row) {
                converged = false;
                for k in 0..n {
                    b[(i, k)] /= f;
                    b[(k, i)] *= f;
                }
            }
        }
    }
    b
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    eigenvalues(a).into_iter().map(|(re, _)| re).fold(f64::NEG_INFINITY, f64::max)
}

fn pade_uv(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut u = &id * b[1];
    let mut v = &id * b[0];
    let mut power = id.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        u += &power * b[2 * k + 1];
        v += &power * b[2 * k];
    }
    (a * u, v)
}

fn pade13_uv(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let b = &PADE_13;
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    (u, v)
}

/// `exp(A t)` by scaling and squaring with diagonal Pade approximants of degree 3..13.
pub fn expm(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!("expm of a {}x{} matrix", a.nrows(), a.ncols())));
    }
    let at = a * t;
    let norm = norm1(&at);
    if !norm.is_finite() {
        return Err(Error::ExpOverflow(norm));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(at);
    }
    let mut squarings = 0u32;
    let (u, v) = if let Some(&(m, _)) = THETA.iter().find(|(_, theta)| norm <= *theta) {
        match m {
            3 => pade_uv(&at, &PADE_3),
            5 => pade_uv(&at, &PADE_5),
            7 => pade_uv(&at, &PADE_7),
            _ => pade_uv(&at, &PADE_9),
        }
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0);
        if s > 1000.0 {
            return Err(Error::ExpOverflow(norm));
        }
        squarings = s as u32;
        pade13_uv(&(at / 2f64.powi(squarings as i32)))
    };
    let numer = &v + &u;
    let denom = v - u;
    let mut r = denom.lu().solve(&numer).ok_or_else(|| Error::Singular("Pade denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::ExpOverflow(norm));
    }
    Ok(r)
}

/// Solves `A^T P + P A = -Q` by Kronecker vectorisation.
pub fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension("lyapunov operands must be square and equal-sized".into()));
    }
    let id = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let big = id.kronecker(&at) + at.kronecker(&id);
    let rhs = DVector::from_iterator(n * n, q.iter().map(|x| -x));
    let sol = big.lu().solve(&rhs).ok_or_else(|| Error::Singular("Lyapunov operator".into()))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// `count` points spaced uniformly in `log10` over `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..count).map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
        }
    }
}

pub fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
