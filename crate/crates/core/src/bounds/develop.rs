use crate::algebra::RatFun;
use crate::numeric::rounding::sum_up;
use crate::numeric::{Interval, IntervalPoly};

/// Interval enclosures of the first `n` series coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Development {
    pub head: Vec<Interval>,
    /// Number of coefficients in the head.
    pub n: usize,
    /// Upward-rounded bound on the sum of the head's absolute values.
    pub head_l1: f64,
}

impl Development {
    fn from_head(head: Vec<Interval>) -> Self {
        // smallest terms first: decaying kernels then round up only at the end
        let head_l1 = sum_up(head.iter().rev().map(Interval::mag));
        Development { n: head.len(), head, head_l1 }
    }

    /// Largest coefficient magnitude over the head.
    pub fn head_max(&self) -> f64 {
        self.head.iter().map(Interval::mag).fold(0.0, f64::max)
    }
}

/// Develops `num / den` in interval arithmetic until the first coefficient
/// whose sign is unknown (its interval contains 0 without being exactly 0),
/// or until `n_max` coefficients are known. The stopping coefficient is not
/// part of the head.
pub fn develop_interval_until_sign_loss(num: &IntervalPoly, den: &IntervalPoly, n_max: usize) -> Development {
    let d = den.coeffs();
    let p = num.coeffs();
    assert!(d.first().is_some_and(|d0| !d0.contains_zero()), "denominator constant term must exclude 0");
    let d0 = d[0];
    let mut head: Vec<Interval> = Vec::new();
    for k in 0..n_max {
        let mut c = p.get(k).copied().unwrap_or(Interval::ZERO);
        for i in 1..d.len().min(k + 1) {
            if !head[k - i].is_exact_zero() {
                c = c - d[i] * head[k - i];
            }
        }
        let c = if d0 == Interval::ONE { c } else { c.checked_div(&d0).expect("d0 excludes 0") };
        if c.contains_zero() && !c.is_exact_zero() {
            break;
        }
        if !c.is_finite() {
            break;
        }
        head.push(c);
    }
    Development::from_head(head)
}

/// [`develop_interval_until_sign_loss`] on the enclosure of an exact
/// rational function. For polynomials the whole coefficient list is the
/// head, whatever `n_max`.
pub fn develop_until_sign_loss(f: &RatFun, n_max: usize) -> Development {
    if f.is_polynomial() {
        let c0 = Interval::from_rat(&f.den().constant_term());
        let head = f
            .num()
            .coeffs()
            .iter()
            .map(|c| Interval::from_rat(c).checked_div(&c0).expect("nonzero constant"))
            .collect();
        return Development::from_head(head);
    }
    develop_interval_until_sign_loss(&IntervalPoly::from_poly(f.num()), &IntervalPoly::from_poly(f.den()), n_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Poly, Rat};
    use num_traits::{One, Signed, ToPrimitive, Zero};

    #[test]
    fn fir_head_is_everything() {
        let f = RatFun::from_poly(Poly::from_ints(&[1, 2]));
        let d = develop_until_sign_loss(&f, 1);
        assert_eq!(d.head, vec![Interval::point(1.0), Interval::point(2.0)]);
        assert_eq!(d.head_l1, 3.0);
    }

    #[test]
    fn geometric_head_below_two() {
        let f = RatFun::new(Poly::one(), Poly::new(vec![Rat::one(), Rat::new((-1).into(), 2.into())])).unwrap();
        let d = develop_until_sign_loss(&f, 100);
        assert_eq!(d.n, 100);
        let exact: Rat = f.develop(99).iter().map(|c| c.abs()).fold(Rat::zero(), |a, b| a + b);
        assert!(Rat::from_float(d.head_l1).unwrap() >= exact);
        assert!(d.head_l1 <= 2.0 + 1e-12);

        // without a cap the development runs until the coefficients underflow
        let d = develop_until_sign_loss(&f, 4096);
        assert!(d.n > 1000 && d.n < 1100, "{}", d.n);
        assert!(d.head_l1 <= 2.0 + 1e-12);
    }

    #[test]
    fn exact_zero_coefficients_do_not_stop() {
        // 1 / (1 + z^2/4): odd coefficients vanish exactly
        let f = RatFun::new(Poly::one(), Poly::new(vec![Rat::one(), Rat::zero(), Rat::new(1.into(), 4.into())])).unwrap();
        let d = develop_until_sign_loss(&f, 50);
        assert_eq!(d.n, 50);
        assert!(d.head[1].is_exact_zero());
    }

    #[test]
    fn head_encloses_exact_coefficients() {
        let f = RatFun::new(Poly::from_ints(&[3, -1]), Poly::from_ints(&[10, -15, 7])).unwrap();
        let d = develop_until_sign_loss(&f, 4096);
        assert!(d.n > 20);
        for (iv, c) in d.head.iter().zip(f.develop(d.n - 1)) {
            let lo = Rat::from_float(iv.lo()).unwrap();
            let hi = Rat::from_float(iv.hi()).unwrap();
            assert!(lo <= c && c <= hi, "{iv:?} vs {}", c.to_f64().unwrap());
        }
    }
}
