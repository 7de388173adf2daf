use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{AlgebraError, Rat, Result};

/// Dense univariate polynomial in `z` over the rationals; `coeffs[k]` is the
/// coefficient of `z^k`. No trailing zero is ever stored, so the zero
/// polynomial is the empty sequence.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly {
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_ints(coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| Rat::from_integer(c.into())).collect())
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Poly::new(vec![c])
    }

    /// `c * z^k`
    pub fn monomial(c: Rat, k: usize) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rat::zero(); k];
        coeffs.push(c);
        Poly { coeffs }
    }

    /// The polynomial `z`.
    pub fn z() -> Self {
        Poly::monomial(Rat::one(), 1)
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Rat> {
        self.coeffs
    }

    /// Coefficient of `z^k` (zero past the degree).
    pub fn coeff(&self, k: usize) -> Rat {
        self.coeffs.get(k).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Number of stored coefficients (`degree + 1`, 0 for the zero polynomial).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn constant_term(&self) -> Rat {
        self.coeff(0)
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Multiplication by `z^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rat::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        Poly { coeffs }
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    /// Exact sum of absolute values of the coefficients.
    pub fn l1_norm(&self) -> Rat {
        self.coeffs.iter().fold(Rat::zero(), |acc, c| acc + c.abs())
    }

    /// Euclidean division: `self = q * divisor + r` with `deg r < deg divisor`.
    pub fn divmod(&self, divisor: &Poly) -> Result<(Poly, Poly)> {
        let dlead = divisor.leading().ok_or(AlgebraError::ZeroPolynomialDivisor)?.clone();
        let ddeg = divisor.coeffs.len() - 1;
        let mut rem = self.coeffs.clone();
        if rem.len() <= ddeg {
            return Ok((Poly::zero(), self.clone()));
        }
        let mut quot = vec![Rat::zero(); rem.len() - ddeg];
        for k in (0..quot.len()).rev() {
            let c = &rem[k + ddeg] / &dlead;
            if !c.is_zero() {
                for (i, d) in divisor.coeffs.iter().enumerate() {
                    rem[k + i] -= &c * d;
                }
            }
            quot[k] = c;
        }
        rem.truncate(ddeg);
        Ok((Poly::new(quot), Poly::new(rem)))
    }

    /// Exact division, `None` when a remainder is left.
    pub fn div_exact(&self, divisor: &Poly) -> Option<Poly> {
        match self.divmod(divisor) {
            Ok((q, r)) if r.is_zero() => Some(q),
            _ => None,
        }
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            Some(l) => self.scale(&(Rat::one() / l)),
            None => Poly::zero(),
        }
    }

    /// Monic greatest common divisor. `gcd(0, 0) = 0`.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.monic();
        let mut b = other.monic();
        while !b.is_zero() {
            let (_, r) = a.divmod(&b).expect("nonzero divisor");
            a = b;
            b = r.monic();
        }
        a
    }

    /// Coefficients reversed: `z^deg * p(1/z)`.
    pub fn reversed(&self) -> Poly {
        let mut c = self.coeffs.clone();
        c.reverse();
        Poly::new(c)
    }

    /// The integer polynomial with coprime coefficients proportional to
    /// `self`, sign chosen so the constant term (or the first nonzero
    /// coefficient) is positive.
    pub fn primitive_integer(&self) -> Vec<BigInt> {
        if self.is_zero() {
            return Vec::new();
        }
        let lcm = self.coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let mut ints: Vec<BigInt> = self.coeffs.iter().map(|c| (c * Rat::from_integer(lcm.clone())).to_integer()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, c| acc.gcd(c));
        let first_sign_negative = ints.iter().find(|c| !c.is_zero()).is_some_and(|c| c.is_negative());
        for c in ints.iter_mut() {
            *c = &*c / &g;
            if first_sign_negative {
                *c = -&*c;
            }
        }
        ints
    }

    /// Largest bit length among the coefficients.
    pub fn max_bits(&self) -> u64 {
        self.coeffs.iter().map(super::rat_bits).max().unwrap_or(0)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (sign, mag) = if c.is_negative() { ("-", -c) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "z")?;
                    } else {
                        write!(f, "z^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly({self})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_degree() {
        let p = Poly::from_ints(&[1, 2, 0, 0]);
        assert_eq!(p.degree(), Some(1));
        assert!(Poly::from_ints(&[0, 0]).is_zero());
        assert_eq!(Poly::zero().degree(), None);
    }

    #[test]
    fn product_and_divmod() {
        let a = Poly::from_ints(&[1, -1]);
        let b = Poly::from_ints(&[1, 1]);
        assert_eq!(&a * &b, Poly::from_ints(&[1, 0, -1]));

        let z3 = Poly::from_ints(&[0, 0, 0, 1]);
        let (q, r) = z3.divmod(&Poly::from_ints(&[-1, 1])).unwrap();
        assert_eq!(q, Poly::from_ints(&[1, 1, 1]));
        assert_eq!(r, Poly::from_ints(&[1]));
        assert_eq!(z3.divmod(&Poly::zero()), Err(AlgebraError::ZeroPolynomialDivisor));
    }

    #[test]
    fn gcd_is_monic_common_factor() {
        let g = Poly::from_ints(&[1, 0, -1]).gcd(&Poly::from_ints(&[1, -1]));
        assert_eq!(g, Poly::from_ints(&[-1, 1]));
        assert_eq!(Poly::from_ints(&[2, 4]).gcd(&Poly::from_ints(&[3])), Poly::one());
        assert_eq!(Poly::zero().gcd(&Poly::from_ints(&[2, 4])), Poly::new(vec![Rat::new(1.into(), 2.into()), Rat::one()]));
    }

    #[test]
    fn primitive_form() {
        let p = Poly::new(vec![Rat::one(), Rat::new((-3).into(), 2.into()), Rat::new(7.into(), 10.into())]);
        let ints: Vec<i64> = p.primitive_integer().iter().map(|c| c.try_into().unwrap()).collect();
        assert_eq!(ints, vec![10, -15, 7]);
    }

    #[test]
    fn display() {
        assert_eq!(Poly::from_ints(&[1, -2, 0, 3]).to_string(), "1 - 2*z + 3*z^3");
    }
}
