//! Scalar abstraction for the area/delay/execution-time arithmetic.
//!
//! Cycle counts are always integers; only the cost and timing figures are
//! generic. `f64` is the working type, `Rational64` gives exact arithmetic
//! for checking printed table values digit for digit.

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive};

/// Numeric type usable for slices, nanoseconds and percentages.
pub trait Scalar:
    Num + Neg<Output = Self> + Copy + PartialOrd + Debug + Send + Sync + 'static
{
    /// Converts a table figure. Exact types round to six decimal places.
    fn from_f64(v: f64) -> Self;

    fn from_u64(v: u64) -> Self;

    fn to_f64(self) -> f64;

    fn from_usize(v: usize) -> Self {
        Self::from_u64(v as u64)
    }

    fn hundred() -> Self {
        Self::from_u64(100)
    }

    fn abs_diff(self, other: Self) -> Self {
        if self >= other {
            self - other
        } else {
            other - self
        }
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            fn from_u64(v: u64) -> Self {
                v as $t
            }
            fn to_f64(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

const RATIONAL_SCALE: i64 = 1_000_000;

impl Scalar for Rational64 {
    fn from_f64(v: f64) -> Self {
        Rational64::new((v * RATIONAL_SCALE as f64).round() as i64, RATIONAL_SCALE)
    }

    fn from_u64(v: u64) -> Self {
        Rational64::from_integer(v as i64)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Rounds half away from zero to `places` decimals, for display only.
///
/// A small bias absorbs binary representation error so that values such as
/// 1.005 round the way their decimal spelling says.
pub fn round_half_up(value: f64, places: u32) -> f64 {
    let scale = 10f64.powi(places as i32);
    let scaled = value * scale;
    let nudged = scaled + scaled.signum() * 1e-7;
    nudged.round() / scale
}

/// Formats with exactly two decimals after half-up rounding.
pub fn fmt2(value: f64) -> String {
    let r = round_half_up(value, 2);
    // avoid "-0.00"
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.2}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_table_values_are_exact() {
        let d = <Rational64 as Scalar>::from_f64(26.85);
        assert_eq!(d, Rational64::new(537, 20));
        let et = d * <Rational64 as Scalar>::from_u64(19);
        assert_eq!(et, Rational64::new(51015, 100));
    }

    #[test]
    fn half_up_rounding() {
        assert_eq!(fmt2(1.005), "1.01");
        assert_eq!(fmt2(-30.795), "-30.80");
        assert_eq!(fmt2(16.6381), "16.64");
        assert_eq!(fmt2(-0.001), "0.00");
        assert_eq!(fmt2(390.0), "390.00");
    }
}
