use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::{AlgebraError, Poly, Rat, Result, DEFAULT_DEGREE_CAP};

/// A causal rational function `num / den`, i.e. an element of the ring of
/// rational functions whose denominator does not vanish at `z = 0`.
///
/// Stored reduced by the polynomial gcd, with `den(0) = 1`. Identified with
/// its power series around 0, whose coefficients are the convolution kernel
/// of the filter it describes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatFun {
    num: Poly,
    den: Poly,
}

impl RatFun {
    /// Builds and normalizes `num / den`. Common factors are cancelled first,
    /// so `z / z` is accepted while `1 / z` is [`AlgebraError::NotCausal`].
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        Self::with_cap(num, den, DEFAULT_DEGREE_CAP)
    }

    pub fn with_cap(num: Poly, den: Poly, cap: usize) -> Result<Self> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if num.is_zero() {
            return Ok(RatFun::zero());
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let c0 = den.constant_term();
        if c0.is_zero() {
            return Err(AlgebraError::NotCausal);
        }
        if !c0.is_one() {
            let inv = Rat::one() / c0;
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        let degree = num.degree().unwrap_or(0).max(den.degree().unwrap_or(0));
        if degree > cap {
            return Err(AlgebraError::DegreeTooLarge { degree, cap });
        }
        Ok(RatFun { num, den })
    }

    pub fn zero() -> Self {
        RatFun { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        RatFun::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        RatFun { num: Poly::constant(c), den: Poly::one() }
    }

    pub fn from_poly(p: Poly) -> Self {
        RatFun { num: p, den: Poly::one() }
    }

    /// `z^k`, the pure delay by `k` ticks.
    pub fn z_pow(k: usize) -> Self {
        RatFun::from_poly(Poly::monomial(Rat::one(), k))
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_constant() && self.num == Poly::one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_constant()
    }

    pub fn add(&self, other: &RatFun) -> Result<RatFun> {
        if self.den == other.den {
            return RatFun::new(&self.num + &other.num, self.den.clone());
        }
        RatFun::new(&(&self.num * &other.den) + &(&other.num * &self.den), &self.den * &other.den)
    }

    pub fn sub(&self, other: &RatFun) -> Result<RatFun> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &RatFun) -> Result<RatFun> {
        if self.is_zero() || other.is_zero() {
            return Ok(RatFun::zero());
        }
        RatFun::new(&self.num * &other.num, &self.den * &other.den)
    }

    /// Quotient in the localized ring. Fails with [`AlgebraError::NotCausal`]
    /// when the result would have a pole at `z = 0`.
    pub fn div(&self, other: &RatFun) -> Result<RatFun> {
        if other.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        RatFun::new(&self.num * &other.den, &self.den * &other.num)
    }

    pub fn neg(&self) -> RatFun {
        RatFun { num: -&self.num, den: self.den.clone() }
    }

    pub fn scale(&self, c: &Rat) -> RatFun {
        if c.is_zero() {
            return RatFun::zero();
        }
        RatFun { num: self.num.scale(c), den: self.den.clone() }
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> RatFun {
        RatFun { num: self.num.shift(k), den: self.den.clone() }
    }

    /// The first `n + 1` power-series coefficients, by long division of the
    /// series: `c_k = num_k - sum_{i>=1} den_i c_{k-i}` (recall `den_0 = 1`).
    /// This is exactly the impulse response of the recurrence the rational
    /// function describes.
    pub fn develop(&self, n: usize) -> Vec<Rat> {
        let mut out: Vec<Rat> = Vec::with_capacity(n + 1);
        let q = self.den.coeffs();
        for k in 0..=n {
            let mut c = self.num.coeff(k);
            for i in 1..q.len().min(k + 1) {
                c -= &q[i] * &out[k - i];
            }
            out.push(c);
        }
        out
    }

    /// The remainder `R` of the development at order `n`:
    /// `num = D * den + z^n * R` with `D` the first `n` series terms.
    ///
    /// Runs the division recurrence on integer-scaled coefficients so no gcd is
    /// taken until the very end, which keeps long developments cheap.
    pub fn remainder_after(&self, n: usize) -> Poly {
        let lp = self.num.coeffs().iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let lq = self.den.coeffs().iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let to_int = |p: &Poly, l: &BigInt| -> Vec<BigInt> {
            p.coeffs().iter().map(|c| (c * Rat::from_integer(l.clone())).to_integer()).collect()
        };
        let p_int = to_int(&self.num, &lp);
        let q_int = to_int(&self.den, &lq);
        let q0 = q_int[0].clone();
        let dq = q_int.len() - 1;
        let p_at = |k: usize| p_int.get(k).cloned().unwrap_or_else(BigInt::zero);

        // powers q0^0 .. q0^dq
        let mut q0_pow = vec![BigInt::one()];
        for i in 1..=dq.max(1) {
            let next = &q0_pow[i - 1] * &q0;
            q0_pow.push(next);
        }

        // m_k = e_k * q0^(k+1) where e_k are the series coefficients of
        // p_int / q_int; only the last dq values are ever needed.
        let mut window: std::collections::VecDeque<BigInt> = std::collections::VecDeque::with_capacity(dq + 1);
        let mut p_scale = BigInt::one(); // q0^k while k <= deg p
        for k in 0..n {
            let mut m = if k < p_int.len() { &p_int[k] * &p_scale } else { BigInt::zero() };
            for i in 1..=dq.min(k) {
                let prev = &window[window.len() - i];
                if !prev.is_zero() && !q_int[i].is_zero() {
                    m -= &q_int[i] * prev * &q0_pow[i - 1];
                }
            }
            if k + 1 < p_int.len() {
                p_scale *= &q0;
            }
            window.push_back(m);
            if window.len() > dq {
                window.pop_front();
            }
        }

        // R_j * q0^n = p_{n+j} q0^n - sum_i m_i q0^(n-1-i) q_{n+j-i}
        let r_len = p_int.len().saturating_sub(n).max(dq);
        let q0_n = num_traits::pow(q0.clone(), n);
        let mut r = Vec::with_capacity(r_len);
        for j in 0..r_len {
            let mut acc = p_at(n + j) * &q0_n;
            for (w, m) in window.iter().enumerate() {
                let i = n - window.len() + w;
                let qi = n + j - i;
                if qi <= dq && !m.is_zero() {
                    acc -= m * &q0_pow[n - 1 - i] * &q_int[qi];
                }
            }
            r.push(Rat::new(acc, &q0_n * &lp));
        }
        Poly::new(r)
    }
}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_constant() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFun({self})")
    }
}
