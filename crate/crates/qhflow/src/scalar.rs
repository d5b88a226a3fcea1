//! Scalar abstractions: the polynomial layer is generic over its coefficient
//! type so the same arithmetic serves the exact rational lane and the f64
//! evaluation lane used by the orbit integrator.

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::{Debug, Display};
use std::ops::Neg;

/// Coefficient ring for sparse polynomials.
pub trait Coeff:
    Num + Neg<Output = Self> + Clone + PartialEq + Debug + Display + 'static
{
}

impl<T> Coeff for T where T: Num + Neg<Output = T> + Clone + PartialEq + Debug + Display + 'static {}

/// Coefficient fields whose arithmetic is exact: division is an inverse of
/// multiplication and comparisons are decidable. Sturm sequences, gcds and the
/// linear algebra behind operator decompositions require this; only the
/// arbitrary-precision rationals implement it.
pub trait ExactField: Coeff + Signed + PartialOrd + Ord + ToPrimitive {}

impl ExactField for crate::Rational {}

/// Floating-point scalars accepted by the orbit integrator.
pub trait Real: num_traits::Float + FromPrimitive + Debug + Display + 'static {}

impl Real for f32 {}
impl Real for f64 {}
