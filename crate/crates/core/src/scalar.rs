//! Scalar abstraction: `f32` or `f64` plus the special functions we need.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the core math.
///
/// `erf` and `ln_gamma` are required on top of [`num_traits::Float`] because
/// Gaussian CDFs and log-space Poisson PMFs are pervasive here.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    fn erf(self) -> Self;
    fn ln_gamma(self) -> Self;

    /// Standard normal CDF.
    fn std_normal_cdf(self) -> Self {
        let half = real::<Self>(0.5);
        half * (Self::one() + (self / real::<Self>(std::f64::consts::SQRT_2)).erf())
    }
}

impl Scalar for f64 {
    fn erf(self) -> Self {
        statrs::function::erf::erf(self)
    }

    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }
}

impl Scalar for f32 {
    fn erf(self) -> Self {
        statrs::function::erf::erf(self as f64) as f32
    }

    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }
}

/// Lift an `f64` constant into the scalar type.
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("constant not representable in scalar type")
}
