use thiserror::Error;

/// Domain errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not a valid orientation-preserving isometry: {0}")]
    InvalidMatrix(String),

    #[error("parabolic element encountered in a group asserted cocompact (|trace| within {tol:e} of 2)")]
    ParabolicInCocompact { tol: f64 },

    #[error("signature admits no hyperbolic structure (orbifold Euler characteristic {chi} >= 0)")]
    NotHyperbolic { chi: String },

    #[error("no nonnegative integer genus fits the given area and cone orders (got g = {value})")]
    Inconsistent { value: f64 },

    #[error("invalid orbifold signature: {0}")]
    InvalidSignature(String),

    #[error("invalid group presentation: {0}")]
    InvalidPresentation(String),

    #[error("enumeration budget exceeded: more than {cap} elements at word length {depth}")]
    BudgetExceeded { cap: usize, depth: usize },

    #[error("primitive root class of {class} not present in the enumerated classes (depth too small)")]
    MissingRoot { class: String },

    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureFailure { estimate: f64, tol: f64 },

    #[error("spectral parameter {value} lies outside the strip |Im r| <= {strip} of the test function")]
    OutOfStrip { value: String, strip: f64 },

    #[error("invalid spectral parameter {0}: must be real >= 0 or purely imaginary with |Im| <= 1/2")]
    InvalidSpectralParameter(String),

    #[error("sampled function is invalid: {0}")]
    InvalidSamples(String),

    #[error("two candidate order multisets fit comparably (residuals {best:e} and {runner_up:e})")]
    AmbiguousFit { best: f64, runner_up: f64 },

    #[error("no nonnegative integer coefficient vector reaches residual {threshold:e} (best {best:e})")]
    NonIntegerFit { best: f64, threshold: f64 },

    #[error("grid step {step} is too coarse for mollifier width {sigma} (need step <= sigma/4)")]
    GridTooCoarse { step: f64, sigma: f64 },

    #[error("amplitude ratio {ratio} at t = {position} is {deviation} away from the nearest integer (limit 0.2)")]
    NonIntegerMultiplicity { position: f64, ratio: f64, deviation: f64 },

    #[error("inferred lengths {first} and {second} lie within 4 sigma of each other and cannot be resolved")]
    OverlapUnresolved { first: f64, second: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable tag, used by the CLI error channel.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidMatrix(_) => "InvalidMatrix",
            Error::ParabolicInCocompact { .. } => "ParabolicInCocompact",
            Error::NotHyperbolic { .. } => "NotHyperbolic",
            Error::Inconsistent { .. } => "Inconsistent",
            Error::InvalidSignature(_) => "InvalidSignature",
            Error::InvalidPresentation(_) => "InvalidPresentation",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::MissingRoot { .. } => "MissingRoot",
            Error::QuadratureFailure { .. } => "QuadratureFailure",
            Error::OutOfStrip { .. } => "OutOfStrip",
            Error::InvalidSpectralParameter(_) => "InvalidSpectralParameter",
            Error::InvalidSamples(_) => "InvalidSamples",
            Error::AmbiguousFit { .. } => "AmbiguousFit",
            Error::NonIntegerFit { .. } => "NonIntegerFit",
            Error::GridTooCoarse { .. } => "GridTooCoarse",
            Error::NonIntegerMultiplicity { .. } => "NonIntegerMultiplicity",
            Error::OverlapUnresolved { .. } => "OverlapUnresolved",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
        }
    }
}
