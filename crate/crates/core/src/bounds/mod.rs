//! Certified upper bounds on the L1 and sup norms of the kernel (power
//! series) of a rational function.
//!
//! The series is developed in interval arithmetic until the first
//! coefficient of unknown sign; the exact remainder `R` of that split,
//! `P = D Q + z^N R`, then carries the tail `||R/Q||_1`, bounded from
//! certified root moduli or, for complex pole pairs, from a closed form.

mod develop;
mod stability;
mod tail;

pub use develop::{develop_interval_until_sign_loss, develop_until_sign_loss, Development};
pub use stability::{schur_cohn_stable, stability_of, Stability};
pub use tail::{poly_l1_upper, second_order_params, tail_bound_rough, tail_bound_second_order};

use serde::{Deserialize, Serialize};

use crate::algebra::{Poly, RatFun};
use crate::numeric::rounding::add_up;
use crate::numeric::{enclose_roots, Interval, IntervalPoly, RootCertificate};

/// Default cap on the number of developed coefficients.
pub const DEFAULT_N_MAX: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub n_max: usize,
    /// Worker threads used when many kernels are bounded at once.
    pub jobs: usize,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig { n_max: DEFAULT_N_MAX, jobs: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailMethod {
    PolynomialExact,
    SecondOrderComplex,
    RoughProduct,
    /// No certified tail: the kernel is unstable or its roots could not be
    /// separated from the unit circle.
    None,
}

/// Certified bounds on `||f||_1` and `sup_k |f_k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelBound {
    pub l1_upper: f64,
    pub linf_upper: f64,
    pub dev_length: usize,
    pub head_l1: f64,
    pub tail_l1: f64,
    pub tail_method: TailMethod,
    pub stability: Stability,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roots: Option<RootCertificate>,
}

impl KernelBound {
    pub fn is_bounded(&self) -> bool {
        self.l1_upper.is_finite()
    }

    fn zero() -> Self {
        KernelBound {
            l1_upper: 0.0,
            linf_upper: 0.0,
            dev_length: 0,
            head_l1: 0.0,
            tail_l1: 0.0,
            tail_method: TailMethod::PolynomialExact,
            stability: Stability::Stable,
            roots: None,
        }
    }

    fn unbounded(dev: &Development, stability: Stability, roots: Option<RootCertificate>) -> Self {
        KernelBound {
            l1_upper: f64::INFINITY,
            linf_upper: f64::INFINITY,
            dev_length: dev.n,
            head_l1: dev.head_l1,
            tail_l1: f64::INFINITY,
            tail_method: TailMethod::None,
            stability,
            roots,
        }
    }
}

/// Certified upper bound on the L1 norm of the kernel of `f` (its gain
/// from sup-norm inputs to sup-norm outputs).
pub fn l1_bound(f: &RatFun, cfg: &BoundConfig) -> KernelBound {
    if f.is_zero() {
        return KernelBound::zero();
    }
    let dev = develop_until_sign_loss(f, cfg.n_max);
    if f.is_polynomial() {
        return KernelBound {
            l1_upper: dev.head_l1,
            linf_upper: dev.head_max(),
            dev_length: dev.n,
            head_l1: dev.head_l1,
            tail_l1: 0.0,
            tail_method: TailMethod::PolynomialExact,
            stability: Stability::Stable,
            roots: None,
        };
    }

    let den = f.den();
    if !schur_cohn_stable(den) {
        return KernelBound::unbounded(&dev, Stability::Unstable, None);
    }
    let roots = enclose_roots(&IntervalPoly::from_poly(den)).ok();

    let mut best: Option<(f64, TailMethod)> = None;
    let mut consider = |b: Option<f64>, m: TailMethod| {
        if let Some(b) = b.filter(|b| b.is_finite()) {
            if best.is_none_or(|(cur, _)| b < cur) {
                best = Some((b, m));
            }
        }
    };
    consider(tail_bound_second_order(f.num(), den, dev.n), TailMethod::SecondOrderComplex);
    if let Some(cert) = &roots {
        let r = f.remainder_after(dev.n);
        consider(tail_bound_rough(den, cert, poly_l1_upper(&r)), TailMethod::RoughProduct);
    }

    match best {
        None => {
            log::warn!("stable kernel {f} has no certified tail bound (roots too close to the unit circle)");
            KernelBound::unbounded(&dev, Stability::Stable, roots)
        }
        Some((tail_l1, tail_method)) => KernelBound {
            l1_upper: add_up(dev.head_l1, tail_l1),
            linf_upper: dev.head_max().max(tail_l1),
            dev_length: dev.n,
            head_l1: dev.head_l1,
            tail_l1,
            tail_method,
            stability: Stability::Stable,
            roots,
        },
    }
}

/// Certified upper bound on `sup_k |f_k|`; `inf` when none can be found.
///
/// When the denominator has the factor `1 - z` (a constant-step response),
/// the coefficients of `f` are the partial sums of those of
/// `g = f (1 - z)`, hence bounded by the head partial sums and by
/// `|S_{N-1}| + tail_l1(g)` beyond the head.
pub fn linf_bound(f: &RatFun, cfg: &BoundConfig) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let one_minus_z = Poly::from_ints(&[1, -1]);
    if f.den().div_exact(&one_minus_z).is_some() {
        let g = f.mul(&RatFun::from_poly(one_minus_z.clone())).expect("multiplying by a polynomial stays causal");
        if g.den().div_exact(&one_minus_z).is_some() {
            return f64::INFINITY;
        }
        let kb = l1_bound(&g, cfg);
        if !kb.is_bounded() {
            return f64::INFINITY;
        }
        let dev = develop_until_sign_loss(&g, cfg.n_max);
        let mut partial = Interval::ZERO;
        let mut sup: f64 = 0.0;
        for c in &dev.head {
            partial = partial + *c;
            sup = sup.max(partial.mag());
        }
        return sup.max(add_up(partial.mag(), kb.tail_l1));
    }
    l1_bound(f, cfg).linf_upper
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Rat;
    use num_traits::{One, Signed, ToPrimitive, Zero};

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn rf(num: Vec<Rat>, den: Vec<Rat>) -> RatFun {
        RatFun::new(Poly::new(num), Poly::new(den)).unwrap()
    }

    #[test]
    fn fir_exact() {
        let f = RatFun::from_poly(Poly::from_ints(&[1, 2, -3]));
        let kb = l1_bound(&f, &BoundConfig::default());
        assert_eq!(kb.l1_upper, 6.0);
        assert_eq!(kb.tail_l1, 0.0);
        assert_eq!(kb.tail_method, TailMethod::PolynomialExact);
        assert_eq!(kb.linf_upper, 3.0);
    }

    #[test]
    fn geometric_series() {
        let f = rf(vec![Rat::one()], vec![Rat::one(), q(-1, 2)]);
        let kb = l1_bound(&f, &BoundConfig::default());
        assert!(kb.l1_upper >= 2.0 && kb.l1_upper <= 2.0 + 1e-6, "{kb:?}");
        assert_eq!(kb.stability, Stability::Stable);
    }

    #[test]
    fn pole_on_unit_circle() {
        let f = rf(vec![Rat::one()], vec![Rat::one(), -Rat::one()]);
        let kb = l1_bound(&f, &BoundConfig::default());
        assert_eq!(kb.stability, Stability::Unstable);
        assert!(!kb.is_bounded());
    }

    #[test]
    fn filter1_like_kernel_dominates_partial_sums() {
        let f = RatFun::new(Poly::from_ints(&[5, 3]), Poly::from_ints(&[10, -15, 7])).unwrap();
        let kb = l1_bound(&f, &BoundConfig::default());
        let exact: Rat = f.develop(1999).iter().map(|c| c.abs()).fold(Rat::zero(), |a, b| a + b);
        let exact = exact.to_f64().unwrap();
        assert!(kb.l1_upper >= exact);
        assert!(kb.l1_upper < exact * (1.0 + 1e-3), "{kb:?} vs {exact}");
        assert!(kb.linf_upper <= kb.l1_upper);
    }

    #[test]
    fn linf_examples() {
        let cfg = BoundConfig::default();
        let f = RatFun::from_poly(Poly::monomial(q(3, 1), 5));
        assert_eq!(linf_bound(&f, &cfg), 3.0);
        let step = rf(vec![q(10, 1)], vec![Rat::one(), -Rat::one()]);
        assert_eq!(linf_bound(&step, &cfg), 10.0);
        let g = rf(vec![Rat::one(), Rat::one()], vec![Rat::one(), q(-1, 2)]);
        let b = linf_bound(&g, &cfg);
        assert!((1.5..=3.0 + 1e-9).contains(&b), "{b}");
        let ramp = rf(vec![Rat::one()], vec![Rat::one(), q(-2, 1), Rat::one()]);
        assert_eq!(linf_bound(&ramp, &cfg), f64::INFINITY);
    }

    #[test]
    fn linf_of_step_response_of_decay() {
        // 1 / ((1 - z)(1 - z/2)) has coefficients 2 - 2^-k, sup 2
        let f = rf(vec![Rat::one()], vec![Rat::one(), q(-3, 2), q(1, 2)]);
        let b = linf_bound(&f, &BoundConfig::default());
        assert!((2.0..2.0 + 1e-9).contains(&b), "{b}");
        let exact = f.develop(200).iter().map(|c| c.abs()).max().unwrap();
        assert!(exact.to_f64().unwrap() <= b);
        assert!(!exact.is_negative());
    }

    #[test]
    fn submultiplicative() {
        let cfg = BoundConfig::default();
        let f = RatFun::new(Poly::from_ints(&[1, 1]), Poly::from_ints(&[10, -15, 7])).unwrap();
        let g = rf(vec![Rat::one()], vec![Rat::one(), q(1, 3)]);
        let fg = f.mul(&g).unwrap();
        let (a, b, c) = (l1_bound(&f, &cfg).l1_upper, l1_bound(&g, &cfg).l1_upper, l1_bound(&fg, &cfg).l1_upper);
        assert!(c <= a * b * (1.0 + 1e-9));
    }
}
