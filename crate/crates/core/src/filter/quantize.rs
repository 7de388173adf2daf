use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::norms::par_map;
use super::{closed_loop_error, AbstractFilter};
use crate::algebra::{rat_bits, Poly, Rat, RatFun, RatFunMatrix};
use crate::bounds::{l1_bound, BoundConfig};
use crate::numeric::{Interval, NonnegMatrix};

/// Coefficient size (numerator plus denominator bits) above which
/// [`quantize`] replaces a kernel by a nearby dyadic one.
pub const DEFAULT_QUANTIZE_BITS: u64 = 512;

fn max_bits(f: &RatFun) -> u64 {
    f.num().coeffs().iter().chain(f.den().coeffs()).map(rat_bits).max().unwrap_or(0)
}

fn round_to_grid(c: &Rat, s: u32) -> Rat {
    let scale = Rat::from_integer(BigInt::one() << s);
    (c * &scale).round() / scale
}

fn round_poly(p: &Poly, s: u32) -> Poly {
    Poly::new(p.coeffs().iter().map(|c| round_to_grid(c, s)).collect())
}

fn l1_distance_upper(a: &Poly, b: &Poly) -> f64 {
    let d = a - b;
    let exact: Rat = d.coeffs().iter().map(|c| c.abs()).fold(Rat::zero(), |acc, c| acc + c);
    Interval::from_rat(&exact).hi()
}

/// Replaces `f = P/Q` by `P'/Q'` with coefficients rounded to a dyadic grid
/// small enough to fit `budget` bits, and returns a certified bound `delta`
/// on `||f - P'/Q'||_1`.
///
/// From `Q' y = P u + (P - P') u + (Q' - Q) y` one gets
/// `|y - y'| <= A (eps_i N(u) + eps_o N(y))` with `A = ||1/Q'||_1`,
/// `eps_i = ||P - P'||_1`, `eps_o = ||Q - Q'||_1`, and `N(y) <= ||P'/Q'||_1 N(u) + |y - y'|`;
/// the resulting affine inequality is solved by the closed-loop core.
///
/// `None` when `f` is already small enough or the rounded kernel cannot be
/// certified.
pub fn quantize_ratfun(f: &RatFun, budget: u64, cfg: &BoundConfig) -> Option<(RatFun, f64)> {
    if max_bits(f) <= budget {
        return None;
    }
    let mut s = (budget / 2).clamp(1, u32::MAX as u64) as u32;
    let candidate = loop {
        let p = round_poly(f.num(), s);
        let mut q = round_poly(f.den(), s);
        if q.constant_term().is_zero() {
            return None;
        }
        // keep den(0) = 1 exactly
        if !q.constant_term().is_one() {
            let mut c = q.coeffs().to_vec();
            c[0] = Rat::one();
            q = Poly::new(c);
        }
        let g = RatFun::new(p.clone(), q.clone()).ok()?;
        if max_bits(&g) <= budget || s <= 1 {
            break (g, p, q);
        }
        s = s.saturating_sub((s / 8).max(1));
    };
    let (g, p_q, q_q) = candidate;
    let eps_i = l1_distance_upper(f.num(), &p_q);
    let eps_o = l1_distance_upper(f.den(), &q_q);
    let inv_q = RatFun::new(Poly::one(), q_q).ok()?;
    let a = l1_bound(&inv_q, cfg).l1_upper;
    let g_l1 = l1_bound(&g, cfg).l1_upper;
    if !a.is_finite() || !g_l1.is_finite() {
        return None;
    }
    let single = |v: f64| NonnegMatrix::from_vec(1, 1, vec![v]).expect("nonnegative");
    let y = single(crate::numeric::rounding::add_up(eps_i, crate::numeric::rounding::mul_up(eps_o, g_l1)));
    let delta = closed_loop_error(&single(a), &single(eps_o), &[&y]).ok()?.pop()?.get(0, 0);
    delta.is_finite().then_some((g, delta))
}

/// Shrinks the coefficients of every kernel of `f` whose size exceeds
/// `budget` bits, folding the replacement error into the envelope. Entries
/// that cannot be certified are kept as they are.
pub fn quantize(f: &AbstractFilter, budget: u64, cfg: &BoundConfig) -> AbstractFilter {
    let run = |m: &RatFunMatrix| -> (RatFunMatrix, NonnegMatrix, usize) {
        let results = par_map(m.entries(), cfg.jobs, |e: &RatFun| quantize_ratfun(e, budget, cfg));
        let mut out = m.clone();
        let mut extra = NonnegMatrix::zeros(m.rows(), m.cols());
        let mut failed = 0;
        for (k, r) in results.into_iter().enumerate() {
            let (i, j) = (k / m.cols().max(1), k % m.cols().max(1));
            match r {
                Some((g, delta)) => {
                    out.set(i, j, g);
                    extra.set(i, j, delta);
                }
                None if max_bits(m.get(i, j)) > budget => failed += 1,
                None => {}
            }
        }
        (out, extra, failed)
    };
    let (t, et, ft) = run(f.t());
    let (d, ed, fd) = run(f.d());
    if ft + fd > 0 {
        log::warn!("{} kernel(s) above {budget} bits could not be quantized soundly; kept exact", ft + fd);
    }
    let mut out = f.clone();
    out.replace_kernels(t, d);
    out.widen(&et, &ed);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn small_kernels_untouched() {
        let f = RatFun::new(Poly::from_ints(&[5, 3]), Poly::from_ints(&[10, -15, 7])).unwrap();
        assert!(quantize_ratfun(&f, 512, &BoundConfig::default()).is_none());
    }

    #[test]
    fn big_kernel_is_shrunk_with_certified_error() {
        let cfg = BoundConfig::default();
        let third = q(1, 3);
        let ugly = third.clone() + q(1, 1) / Rat::from_integer(BigInt::from(3u8).pow(60));
        let f = RatFun::new(Poly::new(vec![ugly.clone()]), Poly::new(vec![Rat::one(), -third])).unwrap();
        let (g, delta) = quantize_ratfun(&f, 40, &cfg).expect("quantized");
        assert!(max_bits(&g) <= 40);
        // exact distance over a long prefix must stay below delta
        let diff = f.sub(&g).unwrap();
        let dist: Rat = diff.develop(400).iter().map(|c| c.abs()).fold(Rat::zero(), |a, c| a + c);
        assert!(Interval::from_rat(&dist).lo() <= delta, "{delta}");
        assert!(delta < 1e-4);
    }

    #[test]
    fn quantize_filter_widens_envelope() {
        let cfg = BoundConfig::default();
        let big = q(1, 3) + q(1, 1) / Rat::from_integer(BigInt::from(7u8).pow(80));
        let f = RatFun::new(Poly::new(vec![big]), Poly::from_ints(&[2, -1])).unwrap();
        let t = RatFunMatrix::from_entries(1, 1, vec![f]).unwrap();
        let af = AbstractFilter::ideal(t, RatFunMatrix::zeros(1, 0), Vec::new()).unwrap();
        let out = quantize(&af, 64, &cfg);
        assert!(out.eps_rel_t().get(0, 0) > 0.0);
        assert!(max_bits(out.t().get(0, 0)) <= 64);
    }
}
