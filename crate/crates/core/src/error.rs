use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular parameter: {0}")]
    SingularParameter(String),

    /// A recursive square root has a negative radicand; the gate time is below
    /// the minimum for this pulse family.
    #[error("infeasible gate time: negative radicand in {level} at t = {t_ns:.6} ns (value {value:.3e}){}", .tmin_ns.map(|t| format!("; T_min ≈ {t:.3} ns")).unwrap_or_default())]
    InfeasibleGateTime {
        level: String,
        t_ns: f64,
        value: f64,
        tmin_ns: Option<f64>,
    },

    #[error("bracketing error: {0}")]
    Bracketing(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("calibration error: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
