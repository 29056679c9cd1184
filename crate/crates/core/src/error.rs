use thiserror::Error;

/// Errors raised by the solver library.
///
/// Every variant maps to a stable machine-readable code (see [`Error::code`]),
/// which the CLI prints on failure and the C ABI exposes as an integer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate root: {0}")]
    DegenerateRoot(String),

    #[error("continuous roots not separated: {0}")]
    NonSeparated(String),

    #[error("ambiguous root tracking at angle index {index}")]
    TrackingAmbiguity { index: usize },

    #[error("separation violation at angle index {index}: {inside} roots inside the unit disk, expected {expected}")]
    SeparationViolation {
        index: usize,
        inside: usize,
        expected: usize,
    },

    #[error("inverse Z-transform of a real kernel has imaginary residue {residue:e} (max |u| = {scale:e})")]
    NonRealResult { residue: f64, scale: f64 },

    #[error("Pade system is numerically singular (condition estimate {condition:e})")]
    PadeSingular { condition: f64 },

    #[error("Pade pole inside the closed unit disk: |q| = {modulus}")]
    PoleInsideDisk { modulus: f64 },

    #[error("repeated Pade pole (separation {separation:e})")]
    RepeatedPole { separation: f64 },

    #[error("bandwidth violation: entry ({row}, {col}) outside band")]
    BandwidthViolation { row: usize, col: usize },

    #[error("singular banded system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("argument {0} out of range")]
    OutOfRange(f64),

    #[error("quadrature failed to converge (last difference {0:e})")]
    QuadratureNoConvergence(f64),

    #[error("reference norm vanishes at step {0}")]
    ZeroReferenceNorm(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("cache format error: {0}")]
    Cache(#[from] serde_json::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateRoot(_) => "degenerate_root",
            Error::NonSeparated(_) => "non_separated",
            Error::TrackingAmbiguity { .. } => "tracking_ambiguity",
            Error::SeparationViolation { .. } => "separation_violation",
            Error::NonRealResult { .. } => "non_real_result",
            Error::PadeSingular { .. } => "pade_singular",
            Error::PoleInsideDisk { .. } => "pole_inside_disk",
            Error::RepeatedPole { .. } => "repeated_pole",
            Error::BandwidthViolation { .. } => "bandwidth_violation",
            Error::SingularSystem { .. } => "singular_system",
            Error::OutOfRange(_) => "out_of_range",
            Error::QuadratureNoConvergence(_) => "quadrature_no_convergence",
            Error::ZeroReferenceNorm(_) => "zero_reference_norm",
            Error::InvalidInput(_) => "invalid_input",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Cache(_) => "cache",
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
