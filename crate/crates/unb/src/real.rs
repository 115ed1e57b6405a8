//! Scalar abstraction for all model math.
//!
//! Everything in [`crate::model`], [`crate::analytic`] and [`crate::sim`] is
//! generic over [`Real`] so the same formulas run in `f32` or `f64`. The
//! default type parameter on the public types selects `f64`, which is what
//! the experiment presets and the CLI use.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only for values no float can hold.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }

    fn of_u32(x: u32) -> Self {
        Self::from_u32(x).expect("u32 conversion")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Neumaier-compensated accumulator for sums with heavy cancellation
/// (alternating binomial series and long harmonic-style sums).
#[derive(Clone, Copy, Debug)]
pub(crate) struct CompensatedSum<F: Real> {
    sum: F,
    comp: F,
}

impl<F: Real> CompensatedSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            comp: F::zero(),
        }
    }

    pub fn add(&mut self, x: F) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.comp
    }
}
