use thiserror::Error;

/// Everything that can go wrong across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GtfError {
    /// The series only converges for an even number of parameters.
    #[error("parameter count {0} is odd; an even count is required")]
    OddParameterCount(usize),

    /// Convergence needs Im(tau_N) > 0.
    #[error("imaginary part of the last parameter is {0}; it must be strictly positive")]
    NonPositiveLastImaginary(f64),

    /// The summation range hit the per-side cap (or the double range)
    /// before the tail certificate could reach the requested tolerance.
    #[error("cannot certify tolerance {tol:e} within {cap} terms per side")]
    RangeOverflow { cap: i64, tol: f64 },

    /// A non-real offset grows the terms faster than the certificate can
    /// shrink them at this tolerance.
    #[error("offset with imaginary part {0} defeats term decay at the requested tolerance")]
    ComplexOffsetDivergence(f64),

    /// Two objects that must share a dimension do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Every projective coordinate sits below the magnitude floor.
    #[error("all projective coordinates lie below the floor {0:e}")]
    DegeneratePoint(f64),

    /// Chain projection removes two parameters and needs at least four.
    #[error("chain projection needs at least 4 parameters, got {0}")]
    DimensionTooSmall(usize),
}
