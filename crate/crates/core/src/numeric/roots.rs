use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::rounding::{add_down, add_up, div_up, mul_up, sqrt_down, sqrt_up, sub_down, sum_up};
use super::{Interval, NumericError, Result};
use crate::algebra::Poly;

/// Rectangular complex interval `re + i im`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexInterval {
    pub re: Interval,
    pub im: Interval,
}

impl ComplexInterval {
    pub fn new(re: Interval, im: Interval) -> Self {
        ComplexInterval { re, im }
    }

    pub fn point(z: Complex64) -> Self {
        ComplexInterval { re: Interval::point(z.re), im: Interval::point(z.im) }
    }

    pub fn real(x: Interval) -> Self {
        ComplexInterval { re: x, im: Interval::ZERO }
    }

    /// Upper bound of the modulus over the box.
    pub fn abs_upper(&self) -> f64 {
        sqrt_up(add_up(self.re.sqr().hi(), self.im.sqr().hi()))
    }

    /// Lower bound of the modulus over the box.
    pub fn abs_lower(&self) -> f64 {
        sqrt_down(add_down(self.re.sqr().lo(), self.im.sqr().lo()).max(0.0))
    }

    pub fn mid(&self) -> Complex64 {
        Complex64::new(self.re.mid(), self.im.mid())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.re.contains(z.re) && self.im.contains(z.im)
    }

    pub fn checked_div(&self, rhs: &ComplexInterval) -> Result<ComplexInterval> {
        let norm2 = rhs.re.sqr() + rhs.im.sqr();
        if norm2.lo() <= 0.0 {
            return Err(NumericError::DivisionByZeroInterval);
        }
        let conj = ComplexInterval { re: rhs.re, im: -rhs.im };
        let num = *self * conj;
        Ok(ComplexInterval { re: num.re.checked_div(&norm2)?, im: num.im.checked_div(&norm2)? })
    }
}

impl Add for ComplexInterval {
    type Output = ComplexInterval;
    fn add(self, rhs: ComplexInterval) -> ComplexInterval {
        ComplexInterval { re: self.re + rhs.re, im: self.im + rhs.im }
    }
}

impl Sub for ComplexInterval {
    type Output = ComplexInterval;
    fn sub(self, rhs: ComplexInterval) -> ComplexInterval {
        ComplexInterval { re: self.re - rhs.re, im: self.im - rhs.im }
    }
}

impl Mul for ComplexInterval {
    type Output = ComplexInterval;
    fn mul(self, rhs: ComplexInterval) -> ComplexInterval {
        ComplexInterval { re: self.re * rhs.re - self.im * rhs.im, im: self.re * rhs.im + self.im * rhs.re }
    }
}

/// Polynomial with interval coefficients; stands for every real polynomial
/// whose coefficients lie in the intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalPoly {
    coeffs: Vec<Interval>,
}

impl IntervalPoly {
    /// Trailing coefficients that are exactly zero are dropped.
    pub fn new(mut coeffs: Vec<Interval>) -> Self {
        while coeffs.last().is_some_and(Interval::is_exact_zero) {
            coeffs.pop();
        }
        IntervalPoly { coeffs }
    }

    pub fn from_poly(p: &Poly) -> Self {
        IntervalPoly::new(p.coeffs().iter().map(Interval::from_rat).collect())
    }

    pub fn from_f64(c: &[f64]) -> Self {
        IntervalPoly::new(c.iter().map(|&x| Interval::point(x)).collect())
    }

    pub fn coeffs(&self) -> &[Interval] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<Interval> {
        self.coeffs.last().copied()
    }

    /// `true` iff every coefficient interval contains 0, i.e. the zero
    /// polynomial cannot be excluded.
    pub fn contains_zero(&self) -> bool {
        self.coeffs.iter().all(Interval::contains_zero)
    }

    pub fn eval(&self, z: &ComplexInterval) -> ComplexInterval {
        self.coeffs
            .iter()
            .rev()
            .fold(ComplexInterval::real(Interval::ZERO), |acc, &c| acc * *z + ComplexInterval::real(c))
    }

    pub fn eval_real(&self, x: &Interval) -> Interval {
        self.coeffs.iter().rev().fold(Interval::ZERO, |acc, &c| acc * *x + c)
    }

    /// The midpoint polynomial.
    pub fn midpoint(&self) -> Vec<f64> {
        self.coeffs.iter().map(Interval::mid).collect()
    }
}

/// Closed disc certified to contain a root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootEnclosure {
    pub center: Complex64,
    pub radius: f64,
    /// Sound lower bound on the modulus of the root(s) enclosed.
    pub modulus_lower: f64,
}

impl RootEnclosure {
    pub fn contains(&self, z: Complex64) -> bool {
        let d = ComplexInterval::point(z) - ComplexInterval::point(self.center);
        d.abs_lower() <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMethod {
    /// Individual discs from the Gerschgorin/Weierstrass inclusion.
    Discs,
    /// One common annulus bound for all roots (clustered roots).
    CauchyFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootCertificate {
    pub method: RootMethod,
    pub enclosures: Vec<RootEnclosure>,
}

impl RootCertificate {
    /// Smallest certified lower bound on a root modulus (`inf` without roots).
    pub fn min_modulus_lower(&self) -> f64 {
        self.enclosures.iter().map(|e| e.modulus_lower).fold(f64::INFINITY, f64::min)
    }
}

const ABERTH_MAX_ITER: usize = 1000;

fn check_root_finding_input(p: &IntervalPoly) -> Result<usize> {
    let n = p.degree().ok_or(NumericError::InvalidPolynomial("zero polynomial"))?;
    if n == 0 {
        return Err(NumericError::InvalidPolynomial("constant polynomial has no roots"));
    }
    if p.leading().is_some_and(|l| l.contains_zero()) {
        return Err(NumericError::InvalidPolynomial("leading coefficient may vanish"));
    }
    if !p.coeffs.iter().all(Interval::is_finite) {
        return Err(NumericError::InvalidPolynomial("non-finite coefficient"));
    }
    Ok(n)
}

/// Approximate roots of the midpoint polynomial by Aberth–Ehrlich iteration.
/// No soundness claim; see [`certify_roots`].
pub fn approx_roots(p: &IntervalPoly) -> Result<Vec<Complex64>> {
    let n = check_root_finding_input(p)?;
    let mid = p.midpoint();
    let lead = mid[n];
    let b: Vec<f64> = mid.iter().map(|c| c / lead).collect();
    if n == 1 {
        return Ok(vec![Complex64::new(-b[0], 0.0)]);
    }

    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut v = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for &c in b.iter().rev() {
            d = d * z + v;
            v = v * z + c;
        }
        (v, d)
    };

    // start on a circle scaled to the geometric mean of the root moduli
    let scale = {
        let c0 = b[0].abs();
        if c0 > 0.0 {
            c0.powf(1.0 / n as f64)
        } else {
            b.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0)
        }
    };
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(scale, std::f64::consts::TAU * k as f64 / n as f64 + 0.4))
        .collect();

    let mut last_step = f64::INFINITY;
    for _ in 0..ABERTH_MAX_ITER {
        let mut converged = true;
        last_step = 0.0;
        for j in 0..n {
            let (v, d) = eval(z[j]);
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = v / d;
            let repulsion: Complex64 = (0..n).filter(|&k| k != j).map(|k| 1.0 / (z[j] - z[k])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if !w.re.is_finite() || !w.im.is_finite() {
                continue;
            }
            z[j] -= w;
            let rel = w.norm() / (1.0 + z[j].norm());
            last_step = last_step.max(rel);
            if rel > 4.0 * f64::EPSILON {
                converged = false;
            }
        }
        if converged {
            break;
        }
    }
    if z.iter().any(|r| !r.re.is_finite() || !r.im.is_finite()) || last_step > 1e-6 {
        return Err(NumericError::RootsNotConverged { degree: n });
    }
    Ok(z)
}

/// Certified discs around approximate roots.
///
/// With `w_j = P(x_j) / (p_n prod_{k != j} (x_j - x_k))`, the roots of every
/// polynomial in the family are the eigenvalues of `diag(x) - w 1^T`, so by
/// Gerschgorin they lie in the discs of center `x_j - w_j` and radius
/// `(n - 1)|w_j|`, and a connected union of `k` discs holds exactly `k` roots.
/// The returned discs enclose those for every admissible `w_j`. Each
/// `modulus_lower` is the least `|center| - radius` over the connected
/// component its disc belongs to, so it bounds every root the component holds.
pub fn certify_roots(p: &IntervalPoly, approx: &[Complex64]) -> Result<Vec<RootEnclosure>> {
    let n = check_root_finding_input(p)?;
    if approx.len() != n {
        return Err(NumericError::InvalidPolynomial("need one approximation per root"));
    }
    let lead = ComplexInterval::real(p.leading().expect("degree >= 1"));
    let xs: Vec<ComplexInterval> = approx.iter().map(|&x| ComplexInterval::point(x)).collect();
    let n_minus_1 = (n - 1) as f64;

    let mut discs = Vec::with_capacity(n);
    for j in 0..n {
        let mut denom = lead;
        for k in (0..n).filter(|&k| k != j) {
            denom = denom * (xs[j] - xs[k]);
        }
        let w = p.eval(&xs[j]).checked_div(&denom).map_err(|_| NumericError::ClusteredRoots)?;
        let shifted = xs[j] - w;
        let center = shifted.mid();
        let radius = add_up((shifted - ComplexInterval::point(center)).abs_upper(), mul_up(n_minus_1, w.abs_upper()));
        if !radius.is_finite() {
            return Err(NumericError::ClusteredRoots);
        }
        let modulus_lower = sub_down(ComplexInterval::point(center).abs_lower(), radius).max(0.0);
        discs.push(RootEnclosure { center, radius, modulus_lower });
    }

    // connected components of overlapping discs
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(comp: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while comp[r] != r {
            r = comp[r];
        }
        comp[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let gap = (ComplexInterval::point(discs[i].center) - ComplexInterval::point(discs[j].center)).abs_lower();
            if gap <= add_up(discs[i].radius, discs[j].radius) {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..n).map(|i| find(&mut comp, i)).collect();
    let mut lower = vec![f64::INFINITY; n];
    for i in 0..n {
        lower[roots[i]] = lower[roots[i]].min(discs[i].modulus_lower);
    }
    for i in 0..n {
        discs[i].modulus_lower = lower[roots[i]];
    }
    Ok(discs)
}

/// Largest `r` (found by bisection) with `|p_0| > sum_{k>=1} |p_k| r^k` for
/// every polynomial of the family; no root has modulus `<= r`.
pub fn cauchy_lower_bound(p: &IntervalPoly) -> f64 {
    let Some(c0) = p.coeffs.first() else { return 0.0 };
    let a0 = c0.mig();
    if a0 == 0.0 {
        return 0.0;
    }
    let mags: Vec<f64> = p.coeffs[1..].iter().map(Interval::mag).collect();
    if mags.iter().all(|&m| m == 0.0) {
        return f64::INFINITY;
    }
    let tail = |r: f64| -> f64 {
        let mut rk = 1.0;
        sum_up(mags.iter().map(|&m| {
            rk = mul_up(rk, r);
            mul_up(m, rk)
        }))
    };
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    while tail(hi) < a0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return lo;
        }
    }
    for _ in 0..80 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if tail(m) < a0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

/// Upper bound `1 + max_k |p_k| / |p_n|` on all root moduli.
fn cauchy_upper_bound(p: &IntervalPoly) -> f64 {
    let n = p.coeffs.len() - 1;
    let lead = p.coeffs[n].mig();
    let m = p.coeffs[..n].iter().map(|c| div_up(c.mag(), lead)).fold(0.0, f64::max);
    add_up(1.0, m)
}

/// Root enclosures for every polynomial of the family: individual discs when
/// the roots can be separated, otherwise one common Cauchy bound.
pub fn enclose_roots(p: &IntervalPoly) -> Result<RootCertificate> {
    let n = check_root_finding_input(p)?;
    let certified = approx_roots(p).and_then(|approx| certify_roots(p, &approx));
    match certified {
        Ok(enclosures) => Ok(RootCertificate { method: RootMethod::Discs, enclosures }),
        Err(NumericError::ClusteredRoots) | Err(NumericError::RootsNotConverged { .. }) => {
            let lower = cauchy_lower_bound(p);
            let upper = cauchy_upper_bound(p);
            log::debug!("root discs overlap or diverge; falling back to the Cauchy bound {lower}");
            let e = RootEnclosure { center: Complex64::new(0.0, 0.0), radius: upper, modulus_lower: lower.min(upper) };
            Ok(RootCertificate { method: RootMethod::CauchyFallback, enclosures: vec![e; n] })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_by_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v
    }

    #[test]
    fn contains_zero_cases() {
        let p = IntervalPoly::new(vec![Interval::new(-0.5, 0.5), Interval::new(-1.0, 1.0)]);
        assert!(p.contains_zero());
        assert!(!IntervalPoly::new(vec![Interval::ZERO, Interval::new(1.0, 2.0)]).contains_zero());
        assert!(IntervalPoly::new(vec![]).contains_zero());
    }

    #[test]
    fn approx_factored_quadratic() {
        let p = IntervalPoly::from_f64(&[2.0, -3.0, 1.0]);
        let r = sorted_by_re(approx_roots(&p).unwrap());
        assert!((r[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((r[1] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn approx_filter_denominators() {
        for (c, m) in [([10.0, -15.0, 7.0], 1.195), ([60.0, 35.0, 51.0], 1.085)] {
            let r = approx_roots(&IntervalPoly::from_f64(&c)).unwrap();
            assert!(r[0].im.abs() > 0.1, "complex pair expected");
            for z in r {
                assert!((z.norm() - m).abs() < 5e-3, "{z}");
            }
        }
    }

    #[test]
    fn certify_perturbed_approximations() {
        let p = IntervalPoly::from_f64(&[2.0, -3.0, 1.0]);
        let approx = [Complex64::new(1.0 + 1e-7, 0.0), Complex64::new(2.0 + 1e-7, 0.0)];
        let discs = certify_roots(&p, &approx).unwrap();
        assert!(discs[0].contains(Complex64::new(1.0, 0.0)));
        assert!(discs[1].contains(Complex64::new(2.0, 0.0)));
        assert!(discs[0].radius < 1e-6);
    }

    #[test]
    fn linear_case() {
        let p = IntervalPoly::from_f64(&[-2.0, 1.0]);
        let c = enclose_roots(&p).unwrap();
        assert_eq!(c.method, RootMethod::Discs);
        let e = c.enclosures[0];
        assert!(e.contains(Complex64::new(2.0, 0.0)));
        assert!(e.radius <= 1e-15 && e.modulus_lower <= 2.0);
    }

    #[test]
    fn filter1_denominator_is_stable() {
        let p = IntervalPoly::from_poly(&Poly::from_ints(&[10, -15, 7]));
        let c = enclose_roots(&p).unwrap();
        assert!(c.enclosures.iter().all(|e| e.modulus_lower > 1.0));
    }

    #[test]
    fn double_root_falls_back() {
        // (z - 2)^2
        let p = IntervalPoly::from_f64(&[4.0, -4.0, 1.0]);
        let c = enclose_roots(&p).unwrap();
        assert!(c.min_modulus_lower() <= 2.0);
        assert!(c.min_modulus_lower() > 0.5);
    }

    #[test]
    fn cauchy_bound_is_sound() {
        // roots 2 and 3: z^2 - 5z + 6
        let p = IntervalPoly::from_f64(&[6.0, -5.0, 1.0]);
        let r = cauchy_lower_bound(&p);
        assert!(r > 0.5 && r < 2.0);
        let at_r = p.eval_real(&Interval::point(r));
        assert!(!at_r.contains_zero());
    }

    #[test]
    fn complex_division() {
        let a = ComplexInterval::point(Complex64::new(1.0, 2.0));
        let b = ComplexInterval::point(Complex64::new(3.0, -1.0));
        let q = a.checked_div(&b).unwrap();
        assert!(q.contains(Complex64::new(0.1, 0.7)));
        assert!(a.checked_div(&ComplexInterval::real(Interval::new(-1.0, 1.0))).is_err());
    }
}
