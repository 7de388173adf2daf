use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::rounding::*;
use super::{NumericError, Result};
use crate::algebra::Rat;

/// Closed interval `[lo, hi]` of reals with binary64 endpoints.
///
/// Every operation returns an interval containing all exact results for
/// operands drawn from the inputs (outward rounding). Endpoints may be
/// infinite but never NaN.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self::try_new(lo, hi).unwrap_or_else(|| panic!("invalid interval [{lo}, {hi}]"))
    }

    pub fn try_new(lo: f64, hi: f64) -> Option<Self> {
        (!lo.is_nan() && !hi.is_nan() && lo <= hi).then_some(Interval { lo, hi })
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub const ZERO: Interval = Interval::point(0.0);
    pub const ONE: Interval = Interval::point(1.0);

    /// Tightest binary64 enclosure of an exact rational.
    pub fn from_rat(r: &Rat) -> Self {
        if r.is_zero() {
            return Interval::ZERO;
        }
        let approx = r.to_f64().unwrap_or(f64::NAN);
        if approx.is_nan() {
            return Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        }
        if approx.is_infinite() {
            return if approx > 0.0 {
                Interval::new(f64::MAX, f64::INFINITY)
            } else {
                Interval::new(f64::NEG_INFINITY, f64::MIN)
            };
        }
        let (mut lo, mut hi) = (approx, approx);
        while lo.is_finite() && Rat::from_float(lo).is_some_and(|v| &v > r) {
            lo = lo.next_down();
        }
        while hi.is_finite() && Rat::from_float(hi).is_some_and(|v| &v < r) {
            hi = hi.next_up();
        }
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_infinite() || self.hi.is_infinite() {
            return if self.lo == self.hi { self.lo } else { 0.5 * self.lo + 0.5 * self.hi };
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound of the width.
    pub fn width(&self) -> f64 {
        sub_up(self.hi, self.lo)
    }

    /// Largest absolute value (magnitude).
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value (mignitude).
    pub fn mig(&self) -> f64 {
        if self.contains_zero() {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// `true` when the interval is `[0, 0]` exactly.
    pub fn is_exact_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn abs(&self) -> Interval {
        Interval { lo: self.mig(), hi: self.mag() }
    }

    pub fn sqr(&self) -> Interval {
        let a = self.abs();
        Interval { lo: mul_down(a.lo, a.lo), hi: mul_up(a.hi, a.hi) }
    }

    pub fn checked_div(&self, rhs: &Interval) -> Result<Interval> {
        if rhs.contains_zero() {
            return Err(NumericError::DivisionByZeroInterval);
        }
        let cands_lo = [
            div_down(self.lo, rhs.lo),
            div_down(self.lo, rhs.hi),
            div_down(self.hi, rhs.lo),
            div_down(self.hi, rhs.hi),
        ];
        let cands_hi = [div_up(self.lo, rhs.lo), div_up(self.lo, rhs.hi), div_up(self.hi, rhs.lo), div_up(self.hi, rhs.hi)];
        Ok(Interval { lo: min4(cands_lo), hi: max4(cands_hi) })
    }

    pub fn sqrt(&self) -> Result<Interval> {
        if self.lo < 0.0 {
            return Err(NumericError::SqrtOfNegative);
        }
        Ok(Interval { lo: sqrt_down(self.lo), hi: sqrt_up(self.hi) })
    }

    pub fn scale(&self, k: f64) -> Interval {
        *self * Interval::point(k)
    }
}

fn min4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn max4(v: [f64; 4]) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: add_down(self.lo, rhs.lo), hi: add_up(self.hi, rhs.hi) }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval { lo: sub_down(self.lo, rhs.hi), hi: sub_up(self.hi, rhs.lo) }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        if self.is_exact_zero() || rhs.is_exact_zero() {
            return Interval::ZERO;
        }
        let lo = min4([
            mul_down(self.lo, rhs.lo),
            mul_down(self.lo, rhs.hi),
            mul_down(self.hi, rhs.lo),
            mul_down(self.hi, rhs.hi),
        ]);
        let hi = max4([mul_up(self.lo, rhs.lo), mul_up(self.lo, rhs.hi), mul_up(self.hi, rhs.lo), mul_up(self.hi, rhs.hi)]);
        Interval { lo, hi }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
