//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An exponent exceeded the configured cap (runaway composition or bad input).
    #[error("exponent {0} exceeds the cap {1}; input too large")]
    ExponentOverflow(u64, u32),

    /// The zero polynomial was passed where a nonzero one is required.
    #[error("operation requires a nonzero polynomial")]
    ZeroPolynomial,

    /// Quasi-homogeneous type with a common factor.
    #[error("type ({0},{1}) is invalid: weights must be positive and coprime")]
    InvalidType(i64, i64),

    /// A polynomial that was expected to be quasi-homogeneous is not.
    #[error("polynomial is not quasi-homogeneous of a single degree for type ({t1},{t2})")]
    NotQuasiHomogeneous { t1: i64, t2: i64 },

    /// The leading field is not Hamiltonian; carries the dissipative residue.
    #[error("leading quasi-homogeneous part is not Hamiltonian (dissipative residue {residue})")]
    NotHamiltonian { residue: String },

    /// H1 or H2 failed where the normal-form machinery requires them.
    #[error("hypothesis {which} fails for the given Hamiltonian")]
    Hypothesis { which: &'static str },

    /// Monodromy precondition failed (orbit construction, center stage).
    #[error("origin is not monodromic: {0}")]
    NotMonodromic(String),

    /// The truncated first-integral construction met a nonzero mixed-partials defect.
    #[error("one-form is not closed; first integral does not exist (defect lowest degree {lowest_degree})")]
    NotClosed { defect: String, lowest_degree: i64 },

    /// Adaptive integration could not meet its budget.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Input files / flags that do not parse or violate basic contracts.
    #[error("invalid input: {0}")]
    Parse(String),

    /// An internal invariant that must never fire.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
