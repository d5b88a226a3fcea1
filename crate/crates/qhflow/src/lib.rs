//! Analysis of planar polynomial systems whose lowest-degree
//! quasi-homogeneous term is Hamiltonian: orbital normal forms `X_h + μ·D0`,
//! existence of algebraic inverse integrating factors up to a truncation
//! degree, monodromy, and the center/focus decision via the first-return
//! integral.
//!
//! The polynomial core is generic over its coefficient scalar; the exact lane
//! runs on arbitrary-precision rationals and the orbit integrator on floats.
//! Concrete aliases for both lanes live at the crate root.

pub mod error;
pub mod iifcheck;
pub mod lieops;
pub mod nform;
pub mod orbit;
pub mod pipeline;
pub mod qhgrade;
pub mod ratpoly;
pub mod report;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};

/// Exact coefficient field: arbitrary-precision rationals, always reduced,
/// positive denominator.
pub type Rational = num_rational::BigRational;

/// Exact sparse bivariate polynomial.
pub type RatPoly = ratpoly::SparsePolynomial<Rational>;

/// Exact planar vector field.
pub type RatField = ratpoly::PlanarField<Rational>;

/// Float-lane polynomial used by the orbit integrator.
pub type FloatPoly = ratpoly::SparsePolynomial<f64>;

/// Float-lane planar field.
pub type FloatField = ratpoly::PlanarField<f64>;

/// Shorthand rational constructor.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}
