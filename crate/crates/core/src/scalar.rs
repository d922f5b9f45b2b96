//! Scalar abstractions shared by the analytic code paths.
//!
//! Rational-closed formulas (service moments, Pollaczek-Khinchine means,
//! load bounds, ledger splits) only need field arithmetic and are written
//! against [`Scalar`], so they evaluate exactly over `Ratio<i128>` as well as
//! over `f32`/`f64`. Anything that needs `exp`, `log10`, `sqrt` or iteration to
//! a tolerance is written against [`Real`].

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumCast};

/// Field-like scalar: exact rationals and IEEE floats both qualify.
pub trait Scalar: Num + Copy + PartialOrd + FromPrimitive + Debug {
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn clamp_unit(self) -> Self {
        if self < Self::zero() {
            Self::zero()
        } else if self > Self::one() {
            Self::one()
        } else {
            self
        }
    }
}

impl<T> Scalar for T where T: Num + Copy + PartialOrd + FromPrimitive + Debug {}

/// Floating point scalar: f32 or f64.
pub trait Real: Scalar + Float + FloatConst + NumCast {
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where T: Scalar + Float + FloatConst + NumCast {}
