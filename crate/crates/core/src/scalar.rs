//! Scalar abstractions shared by the dynamics and estimation code.
//!
//! Closed-form results (equilibria, optimal control, curve fits from two
//! points) only need ordered-field arithmetic and are written against
//! [`Scalar`], so they run on `f32`, `f64` and exact rationals alike.
//! Anything iterative (integration, active-set least squares) needs
//! finiteness checks and is written against [`Real`].

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num, Signed};

/// Ordered-field scalar: `f32`, `f64`, or an exact rational.
pub trait Scalar:
    Num + Signed + PartialOrd + Copy + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal not representable in scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn half() -> Self {
        Self::one() / Self::two()
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Whether the value is a usable number (always true for exact types).
    fn is_usable(&self) -> bool;

    fn to_f64_lossy(&self) -> f64;
}

/// Floating-point scalar for iterative numerics.
pub trait Real: Scalar + Float {}

impl Scalar for f32 {
    fn is_usable(&self) -> bool {
        self.is_finite()
    }

    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
}

impl Scalar for f64 {
    fn is_usable(&self) -> bool {
        self.is_finite()
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Real for f32 {}
impl Real for f64 {}

macro_rules! rational_scalar {
    ($int:ty) => {
        impl Scalar for Ratio<$int> {
            fn is_usable(&self) -> bool {
                true
            }

            fn to_f64_lossy(&self) -> f64 {
                *self.numer() as f64 / *self.denom() as f64
            }
        }
    };
}

rational_scalar!(i64);
rational_scalar!(i128);
