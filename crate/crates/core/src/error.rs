use thiserror::Error;

/// Errors raised by the plate laboratory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("tensor is not elliptic at ({x:.6}, {y:.6}): smallest eigenvalue {value:.6e}")]
    NonElliptic { x: f64, y: f64, value: f64 },

    #[error("leading symbol coefficient a0 vanishes")]
    DegenerateLeadingCoefficient,

    #[error("dichotomy condition violated: {0}")]
    DichotomyViolated(String),

    #[error("invalid geometric specification: {0}")]
    InvalidSpec(String),

    #[error("cannot cover an empty region")]
    EmptyCover,

    #[error("hypothesis failed: {0}")]
    HypothesisFailed(String),

    #[error("geometry violation at chain index {index}: {reason}")]
    GeometryViolation { index: usize, reason: String },

    #[error("rho = {rho:.6e} exceeds the admissible radius {limit:.6e}")]
    RhoTooLarge { rho: f64, limit: f64 },

    #[error("cone membership queried at the vertex")]
    VertexQuery,

    #[error("mesh generation failed: {0}")]
    MeshFailure(String),

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("couple field is incompatible: multipliers {0:?}")]
    IncompatibleLoad([f64; 3]),

    #[error("integration region leaves the domain")]
    RegionOutsideDomain,

    #[error("work gap sign {gap:+.6e} contradicts the {expected} jump classification")]
    WrongSign { gap: f64, expected: &'static str },

    #[error("work gap vanishes")]
    ZeroWorkGap,

    #[error("theorem-form bounds requested without calibrated constants")]
    MissingCalibration,

    #[error("degenerate experiment family: {0}")]
    DegenerateFamily(String),

    #[error("three-spheres fit infeasible: {0}")]
    InfeasibleFit(String),

    #[error("interior envelope is empty")]
    EmptyInterior,

    #[error("degenerate scan: {0}")]
    DegenerateScan(String),

    #[error("reference solution has zero Hessian energy")]
    ZeroSolution,

    #[error("expression error: {0}")]
    Expression(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonElliptic { .. }
            | Error::DegenerateLeadingCoefficient
            | Error::DichotomyViolated(_)
            | Error::HypothesisFailed(_)
            | Error::WrongSign { .. }
            | Error::GeometryViolation { .. }
            | Error::RhoTooLarge { .. } => 2,
            Error::MeshFailure(_) | Error::SolveFailure(_) | Error::IncompatibleLoad(_) => 3,
            Error::Config(_)
            | Error::Expression(_)
            | Error::MissingCalibration
            | Error::InvalidSpec(_) => 4,
            _ => 1,
        }
    }
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
