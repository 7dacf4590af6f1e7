use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("subspace index {n_b} is outside the truncated ladder (n_max = {n_max})")]
    SubspaceOutOfRange { n_b: usize, n_max: usize },

    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("amplitudes are not normalized: |D1|^2 + |D2|^2 = {norm}")]
    NotNormalized { norm: f64 },

    #[error("Landau-Zener limit undefined: |a| = {a_abs} is not below k = {k} (no crossing)")]
    NoCrossing { a_abs: f64, k: f64 },

    #[error("step size underflow at t = {t} (h = {h:e}) after {steps} steps")]
    StepSizeUnderflow { t: f64, h: f64, steps: usize },

    #[error("integrator tolerance not met: norm drift {norm_drift:e} exceeds {limit:e}")]
    ToleranceNotMet { norm_drift: f64, limit: f64 },

    #[error("truncation too small: tail mass p[{n_max}] = {tail:e} exceeds {limit:e}; raise n_max")]
    TailMass { n_max: usize, tail: f64, limit: f64 },

    #[error("time step {dt} violates the stability bound {bound}")]
    Unstable { dt: f64, bound: f64 },

    #[error("oracle mismatch: max deviation {max_deviation:e} exceeds threshold {threshold:e}")]
    OracleMismatch { max_deviation: f64, threshold: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::SubspaceOutOfRange { .. }
            | Error::NotHermitian { .. }
            | Error::NotNormalized { .. }
            | Error::NoCrossing { .. }
            | Error::Config(_)
            | Error::Io(_) => 1,
            Error::StepSizeUnderflow { .. }
            | Error::ToleranceNotMet { .. }
            | Error::TailMass { .. }
            | Error::Unstable { .. }
            | Error::OracleMismatch { .. } => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
