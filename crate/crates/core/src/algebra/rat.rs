use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::{AlgebraError, Result};

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rat = BigRational;

pub fn rat_checked_div(a: &Rat, b: &Rat) -> Result<Rat> {
    if b.is_zero() {
        return Err(AlgebraError::DivisionByZero);
    }
    Ok(a / b)
}

/// Total bit length of numerator and denominator.
pub fn rat_bits(r: &Rat) -> u64 {
    r.numer().bits() + r.denom().bits()
}

/// Parses `p/q`, a decimal (`-0.75`, `1e-3`, `2.5E2`) or an integer, exactly.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let bad = || AlgebraError::BadRational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rat(n)?;
        let d = parse_rat(d)?;
        return rat_checked_div(&n, &d).map_err(|_| bad());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| bad())?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let numer: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    let scale = exponent - frac_part.len() as i64;
    if scale.unsigned_abs() > 100_000 {
        return Err(bad());
    }
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Rat::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact rational value of a finite binary64 number.
pub fn rat_from_f64(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn exact_ops() {
        assert_eq!(q(1, 3) + q(1, 6), q(1, 2));
        assert_eq!(q(2, 4), q(1, 2));
        assert_eq!(*q(2, 4).numer(), BigInt::from(1));
        assert_eq!(q(10, 3) * q(3, 10), Rat::one());
        assert_eq!(rat_checked_div(&q(1, 2), &Rat::zero()), Err(AlgebraError::DivisionByZero));
        assert_eq!(rat_checked_div(&q(1, 2), &q(1, 4)).unwrap(), q(2, 1));
        assert!(q(-1, 3) < q(1, 7));
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rat("0.7").unwrap(), q(7, 10));
        assert_eq!(parse_rat("-1.5").unwrap(), q(-3, 2));
        assert_eq!(parse_rat("3/6").unwrap(), q(1, 2));
        assert_eq!(parse_rat("-2/-4").unwrap(), q(1, 2));
        assert_eq!(parse_rat("1e-2").unwrap(), q(1, 100));
        assert_eq!(parse_rat("2.5E2").unwrap(), q(250, 1));
        assert_eq!(parse_rat(".25").unwrap(), q(1, 4));
        assert_eq!(parse_rat("400").unwrap(), q(400, 1));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat(".").is_err());
    }

    #[test]
    fn bit_length() {
        assert_eq!(rat_bits(&q(3, 4)), 2 + 3);
        assert!(rat_from_f64(f64::NAN).is_none());
        assert_eq!(rat_from_f64(0.5).unwrap(), q(1, 2));
    }
}
