use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} outside the open interval (0, 1)")]
    Domain { t: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule not well posed on piece {piece}: {reason}")]
    WellPosedness { piece: usize, reason: String },

    #[error("probe precision K = {precision} is not positive at t = {t}")]
    Precision { t: f64, precision: f64 },

    #[error("matrix is not symmetric positive definite ({context})")]
    NotSpd { context: String },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("unknown model `{0}` (expected regular3x3, perturbedA or perturbedB)")]
    UnknownModel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("simulation diverged for particle {particle} at step {step}")]
    Simulation { particle: usize, step: usize },

    #[error("point sets must have equal size for balanced transport ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },

    #[error("no points survive the tail restriction")]
    EmptyTail,

    #[error("insufficient in-ball mass: {found} points inside radius {radius} (need {required})")]
    InsufficientMass {
        radius: f64,
        found: usize,
        required: usize,
    },

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
