use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {what} = {value}")]
    Domain { what: &'static str, value: f64 },

    /// An expansion was evaluated exactly at its centre, where the relative error is 0/0.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    /// Correlation requested at a point of zero standard deviation.
    #[error("correlation undefined at a point with zero standard deviation")]
    UndefinedCorrelation,

    /// Cholesky failed at the largest permitted diagonal jitter.
    #[error("covariance is not positive definite: leading minor {minor} failed at jitter {jitter:e}")]
    SingularCovariance { minor: usize, jitter: f64 },

    /// A grid would exceed the configured point cap.
    #[error("grid of {points} points exceeds the cap of {cap}; try resolution >= {suggested_resolution:.6}")]
    Resource {
        points: usize,
        cap: usize,
        suggested_resolution: f64,
    },

    /// Inputs are individually valid but inconsistent with each other.
    #[error("configuration error: {0}")]
    Configuration(String),

    /// A ladder of constant estimates failed to settle.
    #[error("unstable limit: {0}")]
    UnstableLimit(String),

    /// A ladder of constant estimates keeps growing.
    #[error("divergent constant: {0}")]
    DivergentConstant(String),

    /// Borell-TIS bound requested below the expected supremum.
    #[error("Borell-TIS bound not applicable: level {u} is below the expected supremum {expected_sup}")]
    BoundNotApplicable { u: f64, expected_sup: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
