//! Scalar abstraction for the toolkit's math.
//!
//! Everything numeric in this crate is generic over [`Sample`], which is
//! implemented for `f32` and `f64`. The bounds are chosen so that any
//! `Sample` also satisfies `rustfft::FftNum` via its blanket impl.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, Signed, ToPrimitive};

pub trait Sample:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Signed
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Conversion from `f64`, for constants, config values and RNG draws.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to Sample")
    }

    /// Widen to `f64` for accumulation and reporting.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Sample converts to f64")
    }
}

impl<T> Sample for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Signed
        + NumAssign
        + Sum<Self>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip<T: Sample>() -> f64 {
        T::of(0.25).as_f64()
    }

    #[test]
    fn f32_and_f64_are_samples() {
        assert_eq!(roundtrip::<f32>(), 0.25);
        assert_eq!(roundtrip::<f64>(), 0.25);
    }
}
