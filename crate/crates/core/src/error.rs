use thiserror::Error;

/// Every failure the library can report.
///
/// Variants split into precondition failures (bad input, caller's fault) and
/// numerical failures (the algorithms could not certify a result); see
/// [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("division by the zero polynomial")]
    DivisionByZeroPolynomial,
    #[error("root finder did not converge (degree {degree}, residual {residual:e})")]
    NonConvergence { degree: usize, residual: f64 },
    #[error("fiber degree {degree} exceeds the supported maximum {max}")]
    FiberTooLarge { degree: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid cycle: {0}")]
    InvalidCycle(String),
    #[error("no generic cycle found for m={m}, n={n} after {tries} draws")]
    GenericCycleNotFound { m: usize, n: usize, tries: usize },
    #[error("bound for m={m}, n={n} is not an integer")]
    NonIntegerBound { m: usize, n: usize },
    #[error("t = {t} lies within {distance:e} of critical value {critical}")]
    NearCriticalValue {
        t: String,
        critical: String,
        distance: f64,
    },
    #[error("path segment passes through the exclusion disk of critical value {0}")]
    PathThroughCriticalDisk(String),
    #[error("root matching along a path became ambiguous near t = {0}")]
    MatchingAmbiguous(String),
    #[error("orbit exceeded {0} vectors")]
    OrbitExplosion(usize),
    #[error("weight vector of length {weights} does not fit a fiber of size {fiber}")]
    LengthMismatch { weights: usize, fiber: usize },
    #[error("displacement identity violated: relative error {0:e}")]
    IdentityViolation(f64),
    #[error("oracle fit rejected: residual {residual:e} exceeds {tolerance:e}; {hint}")]
    FitRejected {
        residual: f64,
        tolerance: f64,
        hint: String,
    },
    #[error("oracle degree {degree} exceeds the cap {cap}")]
    DegreeCap { degree: usize, cap: usize },
    #[error("the abelian integral vanishes identically")]
    IdenticallyZeroIntegral,
    #[error("design system is singular: {0}")]
    SingularDesignSystem(String),
    #[error("branch matching across the epsilon schedule failed: {0}")]
    BranchMatchingAmbiguous(String),
    #[error("epsilon {0} is too large for the perturbative regime")]
    EpsilonTooLarge(String),
    #[error("count {count} exceeds the proven bound {bound} on a certified instance")]
    BoundViolation { count: usize, bound: u128 },
    #[error("basepoint {0} does not admit straight loops to every critical value")]
    BasepointObstructed(String),
    #[error("malformed report: {0}")]
    MalformedReport(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::MatchingAmbiguous(_)
                | Error::OrbitExplosion(_)
                | Error::IdentityViolation(_)
                | Error::FitRejected { .. }
                | Error::SingularDesignSystem(_)
                | Error::BranchMatchingAmbiguous(_)
                | Error::BoundViolation { .. }
                | Error::NearCriticalValue { .. }
                | Error::PathThroughCriticalDisk(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
