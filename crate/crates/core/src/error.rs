use thiserror::Error;

/// Errors produced by the lifetime toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-idle state fractions do not fit inside one activation cycle.
    #[error("infeasible activation cycle: {0}")]
    InfeasibleCycle(String),

    /// An iterative method failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The energy balance has no root inside the search bracket.
    #[error("no depletion inside the search bracket [0, {t_max_s} s]: lifetime is infinite or exceeds the bracket")]
    Bracket { t_max_s: f64 },

    /// A trace row could not be parsed or holds an out-of-range value.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Sample times are not strictly increasing.
    #[error("line {line}: time {current} s does not follow previous sample at {previous} s")]
    Sequencing {
        line: u64,
        previous: f64,
        current: f64,
    },

    /// The trace holds no samples.
    #[error("trace contains no samples")]
    EmptyInput,

    /// Segmentation needs at least two samples to attribute durations.
    #[error("segmentation needs at least two samples, got {count}")]
    TooFewSamples { count: usize },

    /// A sample has no state label where one is required.
    #[error("sample {index} has no state label")]
    MissingLabel { index: usize },

    /// The trace does not cover one full activation cycle.
    #[error("trace spans {span_s} s but one activation cycle needs {required_s} s")]
    InsufficientTrace { span_s: f64, required_s: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(what: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_non_negative(what: &str, value: f64) -> Result<()> {
    ensure_finite(what, value)?;
    if value < 0.0 {
        return Err(Error::Domain(format!("{what} must be >= 0, got {value}")));
    }
    Ok(())
}

pub(crate) fn ensure_positive(what: &str, value: f64) -> Result<()> {
    ensure_finite(what, value)?;
    if value <= 0.0 {
        return Err(Error::Domain(format!("{what} must be > 0, got {value}")));
    }
    Ok(())
}
