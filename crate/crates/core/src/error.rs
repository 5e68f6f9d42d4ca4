use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("valuation of the zero section is undefined")]
    ZeroSection,

    #[error("level {level} exceeds the configured maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("level must be positive")]
    ZeroLevel,

    #[error("point is not in the grid at level {level}: {detail}")]
    NotInGrid { level: u32, detail: String },

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature did not converge: estimated relative error {achieved:e} > {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("gram matrix is not positive definite at pivot {pivot}")]
    SingularGram { pivot: usize },

    #[error("least-squares fit is ill-conditioned (condition number {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("positive Chebyshev sample {value} at {at} exceeds tolerance {tolerance}")]
    PositiveCeiling {
        at: String,
        value: f64,
        tolerance: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
