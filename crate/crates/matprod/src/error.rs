//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A Mellin symbol was evaluated outside its strip of definition.
    #[error("Re(s) = {re} outside the strip ({lo}, {hi})")]
    StripViolation { re: f64, lo: f64, hi: f64 },

    /// A fractional Gamma power was requested at an argument with
    /// non-positive real part, where the analytic branch is undefined.
    #[error("gamma argument {re}{im:+}i has non-positive real part under fractional power {power}")]
    BranchError { re: f64, im: f64, power: f64 },

    /// Two symbols with disjoint strips cannot be convolved.
    #[error("strips ({0}, {1}) and ({2}, {3}) do not intersect")]
    EmptyStrip(f64, f64, f64, f64),

    /// Contour integrand decays too slowly for the requested tolerance.
    #[error("integrand decay too slow: {0}")]
    SlowDecay(String),

    /// Panel refinement stalled before reaching the target tolerance.
    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    /// The eigenvalue kernel requires a non-negative weight.
    #[error("weight is negative ({value}) at x = {at}")]
    NegativeWeight { at: f64, value: f64 },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),

    #[error("singular draw: retry budget of {0} exhausted")]
    SingularDraw(usize),

    #[error("MCMC chain failed to warm up: {0}")]
    McmcNotWarm(String),

    /// Expression parse failure, with the byte offset of the offending
    /// token and the set of tokens that would have been accepted.
    #[error("parse error at byte {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },

    /// Expression parsed but violates a semantic constraint.
    #[error("{0}")]
    Semantic(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
