use std::fmt;

/// Errors shared across the library. Numerical routines are total on their
/// stated domains; everything here is a precondition violation or a missing
/// closed form, detected before any heavy computation starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameter outside its legal domain (rate <= 0, p outside (0,1], ...).
    IllegalParameter(String),
    /// Variance is zero; standardization is undefined.
    DegenerateDistribution(String),
    /// Expansion order outside the implemented range {3, 4}.
    UnsupportedOrder(u32),
    /// The family has no closed-form k-fold convolution CDF.
    NoClosedFormOracle(&'static str),
    /// k outside [0, n] for a binomial mass.
    IndexOutOfRange { k: i64, n: u64 },
    /// Curves evaluated on grids of different lengths.
    GridMismatch { left: usize, right: usize },
    /// Support specification with no atoms.
    EmptySupport,
    /// Empirical CDF over zero samples.
    EmptySample,
    /// No closed-form characteristic function for the family.
    UnsupportedFamily(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IllegalParameter(what) => write!(f, "illegal parameter: {what}"),
            Error::DegenerateDistribution(what) => {
                write!(f, "degenerate distribution (zero variance): {what}")
            }
            Error::UnsupportedOrder(q) => {
                write!(f, "unsupported expansion order q={q} (implemented: 3, 4)")
            }
            Error::NoClosedFormOracle(family) => {
                write!(f, "no exact standardized-mean oracle for family '{family}'")
            }
            Error::IndexOutOfRange { k, n } => write!(f, "index k={k} outside [0, {n}]"),
            Error::GridMismatch { left, right } => {
                write!(f, "grid length mismatch: {left} vs {right}")
            }
            Error::EmptySupport => write!(f, "support has no atoms"),
            Error::EmptySample => write!(f, "empirical CDF needs at least one sample"),
            Error::UnsupportedFamily(family) => {
                write!(f, "no closed-form characteristic function for family '{family}'")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
