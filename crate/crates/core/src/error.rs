use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point x = {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("quadrature did not converge: achieved error estimate {achieved:e} > tolerance {tolerance:e}")]
    Quadrature { achieved: f64, tolerance: f64 },

    #[error("design order N = {n} violates (N+1)^2 pi^2 > q with q = {q}")]
    DesignOrder { n: usize, q: f64 },

    #[error("observability matrix is singular (determinant {determinant:e})")]
    Unobservable { determinant: f64 },

    #[error("requested pole {0} does not have a negative real part")]
    UnstablePole(f64),

    #[error("matrix is not Hurwitz (spectral abscissa {0})")]
    NotHurwitz(f64),

    #[error("envelope (R = {r}, omega = {omega}) violated at t = {t}: |exp(At)| exceeds R exp(-omega t) by {gap:e}")]
    EnvelopeViolated { r: f64, omega: f64, t: f64, gap: f64 },

    #[error("matrix exponential overflow (|A| t = {0:e})")]
    ExpOverflow(f64),

    #[error("sampling period T = {t} is infeasible (T_max = {t_max})")]
    Infeasible { t: f64, t_max: f64 },

    #[error("no admissible decay rate: h(0+) = {h0} against omega = {omega}")]
    NoSigma { h0: f64, omega: f64 },

    #[error("no finite optimum: {0}")]
    NoOptimum(String),

    #[error("sampling schedule exhausted at t = {last} before horizon {horizon}")]
    ScheduleExhausted { last: f64, horizon: f64 },

    #[error("invalid sampling schedule: {0}")]
    Schedule(String),

    #[error("fast path precondition violated: {0}")]
    FastPath(String),

    #[error("{violations} bound violations, first at t = {first}")]
    Verification { violations: usize, first: f64 },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("assumption B failed: {0}")]
    AssumptionB(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AssumptionB(_) | Error::DesignOrder { .. } | Error::Unobservable { .. } => 2,
            Error::Infeasible { .. } | Error::NoSigma { .. } => 3,
            Error::Config(_) | Error::Io(_) | Error::Schedule(_) | Error::Domain(_) => 1,
            _ => 4,
        }
    }
}
