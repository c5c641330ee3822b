use thiserror::Error;

/// Errors produced by the solver chain and the sweep engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid device spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("no potential minimum found for phi_ext = {phi_ext}")]
    NoMinimumFound { phi_ext: f64 },

    #[error("dispersion root not bracketed in (0, omega0)")]
    RootNotBracketed,

    #[error("operating point at or above the parametric instability threshold")]
    AboveThreshold,

    #[error("no convergence after {iterations} iterations (last iterate {last})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("target gain unreachable at any pump power")]
    GainUnreachable,

    #[error("Kerr constant too small for the closed-form amplitude (|K| < 1e-6 kappa)")]
    DegenerateKerr,

    #[error("no real positive input power solves the requested gain")]
    NoSolution,

    #[error("result unbounded in the K -> 0 limit")]
    Unbounded,

    #[error("pump power model needs either P_p or kappa_pump")]
    MissingPumpCoupling,

    #[error("no finite P1dB anywhere on the search grid")]
    SearchFailed,

    #[error("oracle amplitude exceeded the escape radius {radius} at t = {t} s")]
    Overflow { t: f64, radius: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
