use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside its domain: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidSpec(String),

    /// `F(r) = 1`: there is no lifetime mass beyond the elapsed time.
    #[error("degenerate residual: no lifetime mass beyond elapsed time {elapsed}")]
    DegenerateResidual { elapsed: f64 },

    #[error("unsupported law: {0}")]
    UnsupportedLaw(String),

    #[error("key condition violated (absolutely continuous mass {ac_mass}, mean finite: {mean_finite})")]
    KeyConditionViolated { ac_mass: f64, mean_finite: bool },

    #[error("no admissible rate: {0}")]
    RateNotFound(String),

    #[error("inadmissible rate {rate}: residual exponential moment {eps_tilde} is not below 1")]
    InadmissibleRate { rate: f64, eps_tilde: f64 },

    #[error("divergent bound: {0}")]
    Divergent(String),

    #[error("trace has no coupling epoch")]
    NoEpoch,

    #[error("time {t} lies beyond the constructed horizon {horizon}")]
    BeyondHorizon { t: f64, horizon: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
