//! Floating-point abstraction shared by every numeric stage of the pipeline.

use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Sample and feature value type. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + FftNum
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Significant decimal digits needed for a lossless text round-trip.
    const DECIMAL_DIGITS: usize;

    /// Raw bit pattern, widened to 64 bits. Used for exact value equality.
    fn bit_pattern(self) -> u64;

    fn from_f64_lossy(v: f64) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_f64_lossy(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Scientific notation with `DECIMAL_DIGITS` significant digits.
    fn to_exact_string(self) -> String {
        format!("{:.*e}", Self::DECIMAL_DIGITS - 1, self)
    }
}

impl Scalar for f64 {
    const DECIMAL_DIGITS: usize = 17;

    fn bit_pattern(self) -> u64 {
        self.to_bits()
    }

    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

impl Scalar for f32 {
    const DECIMAL_DIGITS: usize = 9;

    fn bit_pattern(self) -> u64 {
        u64::from(self.to_bits())
    }

    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}
