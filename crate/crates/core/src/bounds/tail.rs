use num_traits::{One, Signed};

use crate::algebra::{Poly, Rat};
use crate::numeric::rounding::{add_up, div_up, mul_up, powi_up, sqrt_up, sub_down};
use crate::numeric::{Interval, RootCertificate};

/// Upward-rounded bound of `||1/q||_1 * r_l1`, which dominates `||r/q||_1`.
///
/// Writing `q = q_n prod (z - xi_i)`, each factor `1/(z - xi)` has kernel
/// `-xi^(-k-1)`, of L1 norm `1/(|xi| - 1)`; the product of the norms bounds
/// the norm of the product. Returns `None` unless every certified root
/// modulus lower bound exceeds 1.
pub fn tail_bound_rough(q: &Poly, roots: &RootCertificate, r_l1: f64) -> Option<f64> {
    let lead = Interval::from_rat(q.leading()?).mig();
    if lead == 0.0 {
        return None;
    }
    let mut acc = div_up(1.0, lead);
    for e in &roots.enclosures {
        let gap = sub_down(e.modulus_lower, 1.0);
        if gap <= 0.0 || gap.is_nan() {
            return None;
        }
        acc = div_up(acc, gap);
    }
    Some(if r_l1 == 0.0 { 0.0 } else { mul_up(acc, r_l1) })
}

/// `|lambda|^2` and `|xi|^-2` for `p / q`, `q` of degree 2 with complex
/// conjugate roots `xi`, `conj xi` and `deg p <= 1`: the kernel is
/// `a_k = -2 Re(lambda xi^(-k-1))` with `lambda = p(xi) / (q_2 (xi - conj xi))`.
///
/// Everything is a rational expression of the coefficients:
/// `xi + conj xi = -q_1/q_2`, `|xi|^2 = q_0/q_2`, `|xi - conj xi|^2 = -disc/q_2^2`.
pub fn second_order_params(p: &Poly, q: &Poly) -> Option<(Rat, Rat)> {
    if q.degree() != Some(2) || p.degree().unwrap_or(0) > 1 {
        return None;
    }
    let (q0, q1, q2) = (q.coeff(0), q.coeff(1), q.coeff(2));
    let disc = &q1 * &q1 - Rat::from_integer(4.into()) * &q0 * &q2;
    if !disc.is_negative() {
        return None;
    }
    let (p0, p1) = (p.coeff(0), p.coeff(1));
    let sum = -&q1 / &q2;
    let modsq = &q0 / &q2;
    let p_at_xi_sq = &p0 * &p0 + &p0 * &p1 * sum + &p1 * &p1 * &modsq;
    let lambda_sq = p_at_xi_sq / (-disc);
    Some((lambda_sq, Rat::one() / modsq))
}

/// Upward-rounded bound on `sum_{k >= n} |a_k|` for the kernel of `p / q`,
/// with `q` of degree 2 having complex conjugate roots of modulus > 1.
///
/// A numerator of higher degree is first reduced: `p = s q + p'` only
/// changes coefficients `0..=deg s`, so the bound applies whenever `n`
/// exceeds `deg s`. Returns `None` when not applicable.
pub fn tail_bound_second_order(p: &Poly, q: &Poly, n: usize) -> Option<f64> {
    if q.degree() != Some(2) {
        return None;
    }
    let (s, rest) = p.divmod(q).ok()?;
    if let Some(ds) = s.degree() {
        if n <= ds {
            return None;
        }
    }
    let (lambda_sq, rho_sq) = second_order_params(&rest, q)?;
    if rest.is_zero() {
        return Some(0.0);
    }
    let rho = sqrt_up(Interval::from_rat(&rho_sq).hi());
    if rho >= 1.0 {
        return None;
    }
    let lambda = sqrt_up(Interval::from_rat(&lambda_sq.abs()).hi());
    let exponent = u32::try_from(n + 1).ok()?;
    let num = mul_up(mul_up(2.0, lambda), powi_up(rho, exponent));
    Some(div_up(num, sub_down(1.0, rho)))
}

/// Upward-rounded `||p||_1` of an exact polynomial.
pub fn poly_l1_upper(p: &Poly) -> f64 {
    p.coeffs().iter().fold(0.0, |acc, c| add_up(acc, Interval::from_rat(c).mag()))
}
