use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("simulation state became non-finite at t = {time:.4} s")]
    NonFiniteState { time: f64 },

    #[error("foot radius {radius:.3e} m is too close to the hip for a polar transform")]
    DegenerateRadius { radius: f64 },

    #[error("leg is at a kinematic singularity (knee = {knee:.3e} rad)")]
    SingularConfiguration { knee: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{name} = {value} lies outside [{lo}, {hi}]")]
    BoundsViolation {
        name: String,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("replay buffer holds {size} entries, batch needs {needed}")]
    BufferTooSmall { size: usize, needed: usize },

    #[error("replay buffer is empty")]
    BufferEmpty,

    #[error("desired velocity must be positive, got {0}")]
    InvalidDesiredVelocity(f64),

    #[error("mean forward velocity {0:.3e} m/s is too small for a cost of transport")]
    ZeroVelocity(f64),

    #[error("trace of {len} samples is shorter than the {needed} required")]
    TraceTooShort { len: usize, needed: usize },

    #[error("reward threshold {threshold} never reached")]
    NotReached { threshold: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
}
