//! Numeric abstraction shared by the step-function algebra, the schemes and
//! the link state.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Floating point type used for time and bandwidth: `f32` or `f64`.
///
/// The three tolerances are properties of the type's precision:
///
/// * [`Scalar::TIME_EPS`]: breakpoints closer than this are merged.
/// * [`Scalar::RATE_EPS`]: jumps (and levels) smaller than this are dropped.
/// * [`Scalar::TOLERANCE`]: slack allowed by feasibility and volume checks.
pub trait Scalar: Float + FromPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static {
    const TIME_EPS: Self;
    const RATE_EPS: Self;
    const TOLERANCE: Self;

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite conversion")
    }
}

impl Scalar for f64 {
    const TIME_EPS: Self = 1e-9;
    const RATE_EPS: Self = 1e-12;
    const TOLERANCE: Self = 1e-9;
}

impl Scalar for f32 {
    const TIME_EPS: Self = 1e-4;
    const RATE_EPS: Self = 1e-6;
    const TOLERANCE: Self = 1e-4;
}
