use thiserror::Error;

/// Errors raised by the pricing engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model or contract assumption does not hold.
    #[error("invalid parameter `{name}`: requires {requirement} (got {value})")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: String,
    },

    #[error("exponent evaluated at x = {x}, too close to the pole at {pole}")]
    PoleEvaluation { x: f64, pole: f64 },

    /// `alpha` lies below the infimum of the drifted exponent on the central interval.
    #[error("no real roots: alpha = {alpha} is below the exponent minimum {minimum}")]
    NoRealRoots { alpha: f64, minimum: f64 },

    /// The two central roots coincide; the parameter set sits on alpha = M(G~).
    #[error(
        "degenerate roots at alpha = {alpha}: central roots {lower} and {upper} coincide \
         (the parameters sit on the boundary alpha = min of the drifted exponent)"
    )]
    DegenerateRoots { alpha: f64, lower: f64, upper: f64 },

    #[error("root search failed in bracket ({lo}, {hi}) for alpha = {alpha}: {reason}")]
    RootSearch {
        alpha: f64,
        lo: f64,
        hi: f64,
        reason: &'static str,
    },

    #[error(
        "singular matrix: pivot {pivot:e} at column {column} (condition estimate {condition:e})"
    )]
    SingularMatrix {
        pivot: f64,
        column: usize,
        condition: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {error_estimate:e} after {intervals} intervals")]
    NonConvergence {
        error_estimate: f64,
        intervals: usize,
    },

    /// Neither a positive dividend rate nor a negative drifted slope at 1.
    #[error(
        "finiteness assumption violated: delta = {delta} and dG~/dx(1) = {slope} \
         (need delta > 0, or delta = 0 and dG~/dx(1) < 0) at gamma = {gamma}"
    )]
    FinitenessViolation { delta: f64, slope: f64, gamma: f64 },

    #[error("no sign change of premium - target on [{lo}, {hi}] (values {g_lo}, {g_hi})")]
    NoBracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("exercise threshold not found on ({lo}, {hi}]")]
    NotFound { lo: f64, hi: f64 },
}

impl Error {
    /// True for errors caused by inputs violating a model assumption, as
    /// opposed to numerical failures on valid inputs.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::FinitenessViolation { .. } | Error::Domain(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
