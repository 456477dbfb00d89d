use thiserror::Error;

/// Errors raised by the numerical kernels and the configuration layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("energy {energy} lies within {distance:e} of eigenvalue {eigenvalue} (level {level})")]
    PoleProximity {
        energy: f64,
        eigenvalue: f64,
        level: usize,
        distance: f64,
    },

    #[error("gamma function pole at z = {re} + {im}i")]
    GammaPole { re: f64, im: f64 },

    #[error("special function {function} failed: {detail}")]
    SpecialFunction {
        function: &'static str,
        detail: String,
    },

    #[error("resonance: |1 - k0^2 g1 g2| = {magnitude:e} below tolerance")]
    Resonance { magnitude: f64 },

    #[error("attach_site produced a non-finite surface Green's function at site {site}")]
    Divergence { site: usize },

    #[error("no root of the closure quadratic satisfies the branch rule")]
    BranchRule,

    #[error("discriminant requires real cell entries (eta = 0); got imaginary parts {im_in:e}, {im_out:e}, {im_across:e}")]
    ComplexCell {
        im_in: f64,
        im_out: f64,
        im_across: f64,
    },

    #[error("energy grid is empty after pole exclusions")]
    EmptyGrid,

    #[error("sign change lost while bisecting [{lo}, {hi}]")]
    LostBracket { lo: f64, hi: f64 },

    #[error("grid too coarse: {0} points, need at least 3")]
    GridTooCoarse(usize),

    #[error("configuration errors: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Stable machine-readable tag used in the CLI's JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "non_finite",
            Error::UnknownDimension(_) => "unknown_dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::PoleProximity { .. } => "pole_proximity",
            Error::GammaPole { .. } => "gamma_pole",
            Error::SpecialFunction { .. } => "special_function",
            Error::Resonance { .. } => "resonance",
            Error::Divergence { .. } => "divergence",
            Error::BranchRule => "branch_rule",
            Error::ComplexCell { .. } => "complex_cell",
            Error::EmptyGrid => "empty_grid",
            Error::LostBracket { .. } => "lost_bracket",
            Error::GridTooCoarse(_) => "grid_too_coarse",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}
