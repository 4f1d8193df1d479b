//! Scalar abstractions.
//!
//! [`Real`] covers the floating-point types used by the sampler, the model
//! and the training loop. [`OracleScalar`] covers the probability type used
//! by the finite oracle, where exact rationals make argmin ties exact.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed, ToPrimitive};

/// Exact rational probability used by the theorem oracles.
pub type Exact = Ratio<i64>;

/// Floating-point scalar for the numeric core.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Lossless-enough conversion from `f64` literals.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }
}

impl Real for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Probability / risk scalar for the finite oracle.
pub trait OracleScalar: Num + Signed + Clone + PartialOrd + Debug + Send + Sync {
    /// Whether two risks are equal for argmin purposes.
    fn ties(&self, other: &Self) -> bool;

    fn from_ratio(num: i64, den: i64) -> Self;

    fn to_f64(&self) -> f64;
}

impl OracleScalar for Exact {
    fn ties(&self, other: &Self) -> bool {
        self == other
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

impl OracleScalar for f64 {
    fn ties(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-12 * (1.0 + self.abs().max(other.abs()))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}
