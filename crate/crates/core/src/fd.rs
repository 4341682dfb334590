//! Finite-difference reference solver for the open-loop plant.
//!
//! Crank-Nicolson in time, centred 3-point `u_xx` and 5-point `u_xxxx` in space.
//! The boundary conditions `u_x = u_xxx = 0` are imposed by reflecting ghost values
//! (`u_{-1} = u_1`, `u_{-2} = u_2`, mirrored at `x = 1`), i.e. the even extension
//! under which the cosine modes are exact grid eigenvectors.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::profile::Profile;
use crate::spectral::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub n_points: usize,
    pub h: f64,
    pub dt: f64,
}

impl FdGrid {
    pub fn new(n_points: usize, dt: f64) -> Result<Self> {
        if n_points < 11 || n_points.is_multiple_of(2) {
            return Err(Error::Config(format!("grid needs an odd point count >= 11, got {n_points}")));
        }
        let h = 1.0 / (n_points - 1) as f64;
        if !(dt > 0.0 && dt <= h * h) {
            return Err(Error::Config(format!("time step {dt} outside (0, h^2 = {}]", h * h)));
        }
        Ok(Self { n_points, h, dt })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| i as f64 * self.h).collect()
    }
}

/// Index of the grid value representing position `i` under the even extension.
fn reflect(i: isize, n: usize) -> usize {
    let last = n as isize - 1;
    let j = if i < 0 {
        -i
    } else if i > last {
        2 * last - i
    } else {
        i
    };
    j as usize
}

/// Stencil rows of `K = -D4 - q D2` as `(column, weight)` pairs.
fn operator_row(i: usize, n: usize, h: f64, q: f64) -> Vec<(usize, f64)> {
    let h2 = h * h;
    let h4 = h2 * h2;
    let d4 = [1.0, -4.0, 6.0, -4.0, 1.0];
    let d2 = [0.0, 1.0, -2.0, 1.0, 0.0];
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(5);
    for (k, (a, b)) in d4.iter().zip(d2).enumerate() {
        let col = reflect(i as isize + k as isize - 2, n);
        let w = -a / h4 - q * b / h2;
        match row.iter_mut().find(|(c, _)| *c == col) {
            Some(entry) => entry.1 += w,
            None => row.push((col, w)),
        }
    }
    row
}

/// LU factors of a matrix with two sub- and two super-diagonals, without pivoting.
#[derive(Debug, Clone)]
struct BandedLu {
    n: usize,
    /// `band[i][j - i + 2]` for `|j - i| <= 2`; holds `L` below and `U` on/above the diagonal.
    band: Vec<[f64; 5]>,
}

impl BandedLu {
    fn factor(mut band: Vec<[f64; 5]>) -> Result<Self> {
        let n = band.len();
        for k in 0..n {
            let pivot = band[k][2];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Singular(format!("zero pivot in row {k}")));
            }
            for i in k + 1..(k + 3).min(n) {
                let l = band[i][k + 2 - i] / pivot;
                band[i][k + 2 - i] = l;
                for j in k + 1..(k + 3).min(n) {
                    band[i][j + 2 - i] -= l * band[k][j + 2 - k];
                }
            }
        }
        Ok(Self { n, band })
    }

    fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for k in i.saturating_sub(2)..i {
                rhs[i] -= self.band[i][k + 2 - i] * rhs[k];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..(i + 3).min(n) {
                rhs[i] -= self.band[i][j + 2 - i] * rhs[j];
            }
            rhs[i] /= self.band[i][2];
        }
    }
}

/// Crank-Nicolson stepper with a cached factorisation of `I - dt/2 K`.
#[derive(Debug, Clone)]
pub struct FdStepper {
    pub grid: FdGrid,
    pub q: f64,
    lu: BandedLu,
}

impl FdStepper {
    pub fn new(grid: FdGrid, q: f64) -> Result<Self> {
        let n = grid.n_points;
        let rows: Vec<_> = (0..n).map(|i| operator_row(i, n, grid.h, q)).collect();
        let mut band = vec![[0.0; 5]; n];
        for (i, row) in rows.iter().enumerate() {
            band[i][2] = 1.0;
            for &(j, w) in row {
                band[i][j + 2 - i] -= 0.5 * grid.dt * w;
            }
        }
        Ok(Self { grid, q, lu: BandedLu::factor(band)? })
    }

    /// `K u = -D2 (D2 u) - q D2 u`, evaluated in difference form so constants map to zero.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let h2 = self.grid.h * self.grid.h;
        let d2 = |v: &[f64]| -> Vec<f64> {
            let n = v.len();
            (0..n)
                .map(|i| {
                    let l = v[reflect(i as isize - 1, n)];
                    let r = v[reflect(i as isize + 1, n)];
                    ((l - v[i]) + (r - v[i])) / h2
                })
                .collect()
        };
        let v = d2(u);
        let w = d2(&v);
        w.iter().zip(&v).map(|(a, b)| -a - self.q * b).collect()
    }

    /// Advances by `dt`, solving for the increment `(I - dt/2 K) du = dt K u`.
    pub fn step(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.grid.n_points {
            return Err(Error::Dimension(format!("profile has {} points, grid {}", u.len(), self.grid.n_points)));
        }
        let mut du: Vec<f64> = self.apply(u).into_iter().map(|k| self.grid.dt * k).collect();
        self.lu.solve(&mut du);
        Ok(u.iter().zip(&du).map(|(a, d)| a + d).collect())
    }
}

/// One Crank-Nicolson step; builds the factorisation each call.
pub fn fd_step(u: &[f64], q: f64, grid: FdGrid) -> Result<Vec<f64>> {
    FdStepper::new(grid, q)?.step(u)
}

/// Trapezoidal quadrature weights on the grid.
fn trapezoid(u: &[f64], h: f64) -> f64 {
    let n = u.len();
    h * (u.iter().sum::<f64>() - 0.5 * (u[0] + u[n - 1]))
}

/// Trapezoid-weighted mean, conserved by the scheme.
pub fn grid_mean(u: &[f64], h: f64) -> f64 {
    trapezoid(u, h)
}

pub fn grid_l2(u: &[f64], h: f64) -> f64 {
    trapezoid(&u.iter().map(|x| x * x).collect::<Vec<_>>(), h).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub profile: Profile,
    pub q: f64,
    pub horizon: f64,
    pub n_points: usize,
    pub dt: f64,
    /// Spectral truncation `M`.
    pub modes: usize,
    pub checkpoints: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub n_points: usize,
    pub h: f64,
    /// Max over checkpoints of `||u_fd - u_spec|| / max(||u_spec||, 1e-30)`.
    pub discrepancy: f64,
    pub steps: usize,
}

/// Runs both solvers from the same profile with `f = 0` and compares on the grid.
pub fn fd_vs_spectral(spec: &OracleSpec) -> Result<OracleReport> {
    if !(spec.horizon > 0.0 && spec.horizon <= 0.05) {
        return Err(Error::Config(format!("oracle horizon must lie in (0, 0.05], got {}", spec.horizon)));
    }
    let grid = FdGrid::new(spec.n_points, spec.dt)?;
    let steps_f = spec.horizon / spec.dt;
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-6 * steps_f {
        return Err(Error::Config("horizon must be a whole number of time steps".into()));
    }
    let checkpoints = spec.checkpoints.clamp(1, steps);
    let stepper = FdStepper::new(grid, spec.q)?;
    let xs = grid.points();
    let mut u: Vec<f64> = xs
        .iter()
        .map(|&x| spec.profile.eval(x).ok_or_else(|| Error::Config("oracle profile must be closed-form".into())))
        .collect::<Result<_>>()?;
    let modal = spec.profile.modal(spec.modes)?;
    let mu = SpectralOperator::new(spec.q).spectrum(spec.modes);

    let mut worst: f64 = 0.0;
    for k in 1..=steps {
        u = stepper.step(&u)?;
        if k * checkpoints % steps < checkpoints {
            let t = k as f64 * spec.dt;
            let evolved = crate::spectral::ModalVector::new(
                modal.coeffs.iter().zip(&mu).map(|(a, m)| a * (m * t).exp()).collect(),
            );
            let exact = evolved.reconstruct(&xs)?;
            let diff: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
            let rel = grid_l2(&diff, grid.h) / grid_l2(&exact, grid.h).max(1e-30);
            worst = worst.max(rel);
        }
    }
    Ok(OracleReport { n_points: spec.n_points, h: grid.h, discrepancy: worst, steps })
}

/// Discrepancies on successively halved spacings, starting from `spec.n_points`.
pub fn convergence_study(spec: &OracleSpec, levels: usize, exec: Exec) -> Result<Vec<OracleReport>> {
    let grids: Vec<usize> = (0..levels).map(|l| ((spec.n_points - 1) << l) + 1).collect();
    exec.map(&grids, |&n| fd_vs_spectral(&OracleSpec { n_points: n, ..spec.clone() })).into_iter().collect()
}

/// Observed order `log2(e_coarse / e_fine)` between consecutive levels.
pub fn observed_orders(reports: &[OracleReport]) -> Vec<f64> {
    reports.windows(2).map(|w| (w[0].discrepancy / w[1].discrepancy).log2()).collect()
}
