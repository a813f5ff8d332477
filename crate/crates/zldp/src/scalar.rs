//! Scalar abstractions shared by the generic parts of the crate.

use num_traits::{Float, FloatConst, FromPrimitive, Num, NumAssign, Signed};
use std::fmt::{Debug, Display};

/// Floating-point scalar (f32 or f64).
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Send + Sync + Debug + Display + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field, exact or floating. Barrier and constraint arithmetic is
/// purely rational in alpha, so it runs over `BigRational` as well.
pub trait Field: Num + Signed + Clone + PartialOrd + Debug {
    fn int(n: i64) -> Self;
    /// Exact image of a double (binary rationals are exact in every field here).
    fn real(x: f64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Field for f64 {
    fn int(n: i64) -> Self {
        n as f64
    }
    fn real(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Field for f32 {
    fn int(n: i64) -> Self {
        n as f32
    }
    fn real(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
}

impl Field for num_rational::BigRational {
    fn int(n: i64) -> Self {
        num_rational::BigRational::from_integer(n.into())
    }
    fn real(x: f64) -> Self {
        num_rational::BigRational::from_float(x).expect("finite constant")
    }
    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Compensated<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Real> FromIterator<T> for Compensated<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut c = Self::new();
        for x in iter {
            c.add(x);
        }
        c
    }
}

pub fn compensated_sum<T: Real>(xs: impl IntoIterator<Item = T>) -> T {
    xs.into_iter().collect::<Compensated<T>>().value()
}
