//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Rates, kernel weights, densities and moment functions are generic over
//! [`Scalar`]; clocks and random draws stay in `f64` and are converted at the
//! boundary.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable by the simulators and oracles: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    /// Lossy conversion to `f64` for clocks and samplers.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }

    /// Default absolute tolerance for stochasticity checks.
    fn row_sum_tol() -> Self;
}

impl Scalar for f32 {
    fn row_sum_tol() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn row_sum_tol() -> Self {
        1e-12
    }
}

/// `base^exp` with `0^0 = 1`.
#[inline]
pub fn powu<T: Scalar>(base: T, exp: u32) -> T {
    if exp == 0 {
        T::one()
    } else {
        base.powi(exp as i32)
    }
}
