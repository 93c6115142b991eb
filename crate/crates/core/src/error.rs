use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error in `{param}`: {msg}")]
    Domain { param: &'static str, msg: String },

    /// Malformed input data (non-finite values, degenerate meshes, ...).
    #[error("invalid input `{param}`: {msg}")]
    Input { param: &'static str, msg: String },

    /// A quadrature or iteration failed to settle.
    #[error("nonconvergent {what}: {diagnostics}")]
    Nonconvergent { what: &'static str, diagnostics: String },

    /// The mesh does not resolve a dyadic annulus.
    #[error("mesh too coarse to resolve annulus A_{annulus}: {msg}")]
    Resolution { annulus: i32, msg: String },

    /// Parameter combination the routine does not implement.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Every restart of an optimizer failed.
    #[error("optimization failed: {0}")]
    Optimization(String),

    /// A closed-form function could not be evaluated at a point.
    #[error("evaluation failed at x = {x:?}: {msg}")]
    Eval { x: f64, msg: String },
}

impl FracError {
    pub(crate) fn domain(param: &'static str, msg: impl Into<String>) -> Self {
        FracError::Domain { param, msg: msg.into() }
    }

    pub(crate) fn input(param: &'static str, msg: impl Into<String>) -> Self {
        FracError::Input { param, msg: msg.into() }
    }

    pub(crate) fn nonconvergent(what: &'static str, diagnostics: impl Into<String>) -> Self {
        FracError::Nonconvergent { what, diagnostics: diagnostics.into() }
    }

    /// True for failures of an iterative or adaptive numerical procedure.
    pub fn is_numerical(&self) -> bool {
        matches!(self, FracError::Nonconvergent { .. } | FracError::Optimization(_))
    }
}

pub type Result<T> = std::result::Result<T, FracError>;
