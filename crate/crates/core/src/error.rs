use thiserror::Error;

/// Errors raised by the analysis modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of the operation (non-finite state,
    /// negative volatility, bad grid size, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// Parameters make a closed form singular (e.g. a1*b1 - a2*b2 = 0 for Bell).
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("equilibrium residual {residual:e} exceeds {threshold:e}; recompute the equilibrium")]
    StaleEquilibrium { residual: f64, threshold: f64 },

    #[error("operation requires a one-Wiener system (du = Au dt + Bu dW)")]
    UnsupportedNoise,

    /// q4 comes within the threshold of zero somewhere on the angular grid.
    #[error("degenerate angular diffusion: min |q4| = {min_q4:e}")]
    DegenerateDiffusion { min_q4: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the caller's inputs rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::UnknownModel(_)
                | Error::InvalidParameter { .. }
                | Error::DegenerateParameters(_)
                | Error::UnsupportedNoise
        )
    }
}
