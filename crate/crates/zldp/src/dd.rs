//! Double-double arithmetic (about 106 bits) for phase reduction at large heights.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DD {
    pub hi: f64,
    pub lo: f64,
}

pub const TWO_PI: DD = DD { hi: 6.283185307179586, lo: 2.4492935982947064e-16 };
pub const LN_2: DD = DD { hi: 0.6931471805599453, lo: 2.3190468138462996e-17 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DD {
    pub const ZERO: DD = DD { hi: 0.0, lo: 0.0 };
    pub const ONE: DD = DD { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        DD { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact product of two doubles.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        DD { hi, lo }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DD { hi, lo }
    }

    pub fn div(self, b: DD) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DD { hi, lo } + DD::new(q3)
    }

    pub fn round(self) -> Self {
        let hi = self.hi.round();
        if hi == self.hi {
            let (a, b) = quick_two_sum(hi, self.lo.round());
            DD { hi: a, lo: b }
        } else if (hi - self.hi).abs() == 0.5 && self.lo != 0.0 {
            // tie broken by the low word
            let h = if self.lo > 0.0 { self.hi.ceil() } else { self.hi.floor() };
            DD::new(h)
        } else {
            DD::new(hi)
        }
    }

    pub fn ldexp(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        DD { hi: self.hi * s, lo: self.lo * s }
    }

    /// exp by ln 2 reduction, halving and a Taylor series.
    pub fn exp(self) -> Self {
        if self.hi == 0.0 {
            return DD::ONE;
        }
        let k = (self.hi / LN_2.hi).round();
        let r = (self - LN_2.mul_f64(k)).ldexp(-10);
        let mut term = DD::ONE;
        let mut sum = DD::ONE;
        for i in 1..=20 {
            term = (term * r).div(DD::new(i as f64));
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        for _ in 0..10 {
            sum = sum * sum;
        }
        sum.ldexp(k as i32)
    }

    /// Natural log via two Newton steps on exp.
    pub fn ln(self) -> Self {
        let mut y = DD::new(self.hi.ln());
        for _ in 0..2 {
            let e = (-y).exp();
            y = y + (self * e) - DD::ONE;
        }
        y
    }

    /// x mod 2π, reduced to (-π, π].
    pub fn rem_two_pi(self) -> f64 {
        let k = self.div(TWO_PI).round();
        let r = self - TWO_PI * k;
        r.to_f64()
    }
}

impl Add for DD {
    type Output = DD;
    fn add(self, b: DD) -> DD {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DD { hi, lo }
    }
}

impl Neg for DD {
    type Output = DD;
    fn neg(self) -> DD {
        DD { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for DD {
    type Output = DD;
    fn sub(self, b: DD) -> DD {
        self + (-b)
    }
}

impl Mul for DD {
    type Output = DD;
    fn mul(self, b: DD) -> DD {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DD { hi, lo }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_ln_roundtrip() {
        for &x in &[0.5, 1.0, 2.0, 10.0, 123.456, 1e6] {
            let y = DD::new(x).ln().exp();
            let rel = ((y - DD::new(x)).to_f64() / x).abs(); assert!(rel < 1e-28, "x={x}");
        }
    }

    #[test]
    fn ln_two_constant() {
        let l = DD::new(2.0).ln();
        assert!((l - LN_2).to_f64().abs() < 1e-31);
    }

    #[test]
    fn two_pi_reduction_of_multiples() {
        let x = TWO_PI.mul_f64(1e12) + DD::new(0.25);
        assert!((x.rem_two_pi() - 0.25).abs() < 1e-15);
    }
}
