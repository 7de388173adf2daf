//! Directed-rounding primitives on binary64.
//!
//! Each operation is evaluated in the default round-to-nearest mode and the
//! rounding error is recovered exactly (TwoSum, FMA residuals). The result is
//! stepped one ulp outward only when the residual shows it was rounded in the
//! wrong direction, so exact operations stay exact. No hardware rounding mode
//! is ever changed, hence nothing here depends on or mutates thread or process
//! state and all functions may be called concurrently.
//!
//! Near the underflow threshold residuals are not guaranteed exact; there the
//! result is widened unconditionally.

/// Below this magnitude FMA residuals of products and quotients may be
/// inexact, so outward widening is applied without inspecting them.
const TINY: f64 = 1.0e-290;

/// Upward rounding of a result that overflowed (or is NaN from infinite
/// operands): a finite negative overflow rounds up to the most negative finite.
fn overflow_up(r: f64, finite_operands: bool) -> f64 {
    if r.is_nan() || r > 0.0 {
        f64::INFINITY
    } else if finite_operands {
        f64::MIN
    } else {
        f64::NEG_INFINITY
    }
}

#[inline]
fn up(x: f64) -> f64 {
    x.next_up()
}

#[inline]
fn down(x: f64) -> f64 {
    x.next_down()
}

/// Exact error of `a + b = s + err` (Knuth's TwoSum). Both `s` and `err`
/// are finite when `s` is.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

pub fn add_up(a: f64, b: f64) -> f64 {
    let (s, e) = two_sum(a, b);
    if !s.is_finite() {
        return overflow_up(s, a.is_finite() && b.is_finite());
    }
    if e > 0.0 {
        up(s)
    } else {
        s
    }
}

pub fn add_down(a: f64, b: f64) -> f64 {
    -add_up(-a, -b)
}

pub fn sub_up(a: f64, b: f64) -> f64 {
    add_up(a, -b)
}

pub fn sub_down(a: f64, b: f64) -> f64 {
    add_down(a, -b)
}

pub fn mul_up(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let p = a * b;
    if !p.is_finite() {
        return overflow_up(p, a.is_finite() && b.is_finite());
    }
    if p.abs() < TINY {
        return up(p);
    }
    let e = a.mul_add(b, -p);
    if e > 0.0 {
        up(p)
    } else {
        p
    }
}

pub fn mul_down(a: f64, b: f64) -> f64 {
    -mul_up(-a, b)
}

pub fn div_up(a: f64, b: f64) -> f64 {
    debug_assert!(b != 0.0);
    if a == 0.0 {
        return 0.0;
    }
    let q = a / b;
    if !q.is_finite() {
        return overflow_up(q, a.is_finite());
    }
    if !b.is_finite() {
        return if q >= 0.0 { up(q) } else { q };
    }
    if q.abs() < TINY {
        return up(q);
    }
    // a - q*b, exact; the true quotient exceeds q iff r/b > 0
    let r = (-q).mul_add(b, a);
    if (r > 0.0 && b > 0.0) || (r < 0.0 && b < 0.0) {
        up(q)
    } else {
        q
    }
}

pub fn div_down(a: f64, b: f64) -> f64 {
    -div_up(-a, b)
}

pub fn sqrt_up(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    let s = a.sqrt();
    if s == 0.0 || !s.is_finite() {
        return if a == 0.0 { 0.0 } else { up(s) };
    }
    if a < TINY {
        return up(s);
    }
    let r = (-s).mul_add(s, a);
    if r > 0.0 {
        up(s)
    } else {
        s
    }
}

pub fn sqrt_down(a: f64) -> f64 {
    debug_assert!(a >= 0.0);
    let s = a.sqrt();
    if s == 0.0 || !s.is_finite() {
        return s;
    }
    if a < TINY {
        return down(s).max(0.0);
    }
    let r = (-s).mul_add(s, a);
    if r < 0.0 {
        down(s)
    } else {
        s
    }
}

/// Upward-rounded sum of a sequence of values.
pub fn sum_up<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    xs.into_iter().fold(0.0, add_up)
}

/// Upward-rounded `x^n` for `x >= 0`.
pub fn powi_up(x: f64, n: u32) -> f64 {
    debug_assert!(x >= 0.0);
    let mut acc = 1.0;
    let mut base = x;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_up(acc, base);
        }
        base = mul_up(base, base);
        e >>= 1;
    }
    acc
}

/// Upward-rounded product where `0 * inf` is taken as 0: a zero coefficient
/// annihilates an unbounded quantity in the error algebra.
pub fn mul_up_nonneg(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        mul_up(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Rat;

    fn exact(x: f64) -> Rat {
        Rat::from_float(x).unwrap()
    }

    #[test]
    fn exact_ops_stay_exact() {
        assert_eq!(add_up(1.0, 2.0), 3.0);
        assert_eq!(add_down(1.0, 2.0), 3.0);
        assert_eq!(mul_up(3.0, 0.5), 1.5);
        assert_eq!(div_up(1.0, 4.0), 0.25);
        assert_eq!(sqrt_up(4.0), 2.0);
        assert_eq!(sqrt_down(4.0), 2.0);
    }

    #[test]
    fn inexact_ops_bracket() {
        let cases = [(0.1, 0.2), (1.0, 1e-20), (-3.3, 7.1), (1e150, 3e-150), (5e-300, 7e-10)];
        for (a, b) in cases {
            let sum = exact(a) + exact(b);
            assert!(exact(add_down(a, b)) <= sum && sum <= exact(add_up(a, b)));
            let prod = exact(a) * exact(b);
            assert!(exact(mul_down(a, b)) <= prod && prod <= exact(mul_up(a, b)));
            let quot = exact(a) / exact(b);
            assert!(exact(div_down(a, b)) <= quot && quot <= exact(div_up(a, b)));
        }
        let two = exact(2.0);
        let lo = exact(sqrt_down(2.0));
        let hi = exact(sqrt_up(2.0));
        assert!(&lo * &lo <= two && two <= &hi * &hi);
        assert!(lo < hi);
    }

    #[test]
    fn overflow_goes_outward() {
        assert_eq!(add_up(f64::MAX, f64::MAX), f64::INFINITY);
        assert_eq!(mul_up(f64::MAX, 2.0), f64::INFINITY);
        assert_eq!(mul_down(f64::MAX, 2.0), f64::MAX);
        assert_eq!(mul_up(-f64::MAX, 2.0), f64::MIN);
        assert_eq!(mul_down(-f64::MAX, 2.0), f64::NEG_INFINITY);
    }

    #[test]
    fn powers() {
        assert_eq!(powi_up(2.0, 10), 1024.0);
        assert_eq!(powi_up(0.5, 0), 1.0);
        let p = exact(powi_up(0.1, 7));
        let truth = num_traits::pow(exact(0.1), 7);
        assert!(p >= truth);
        assert_eq!(mul_up_nonneg(0.0, f64::INFINITY), 0.0);
    }
}
