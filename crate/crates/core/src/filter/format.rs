use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use num_traits::ToPrimitive;

use super::FilterError;
use crate::algebra::{rat_from_f64, Rat};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatKind {
    IeeeFloat,
    FixedPoint,
    /// Exact arithmetic; no rounding error at all.
    Exact,
}

/// Rounding-error parameters of a number format: every rounded operation
/// returns `x (1 + d) + a` with `|d| <= eps_rel` and `|a| <= eps_abs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatFormat {
    pub kind: FormatKind,
    pub eps_rel: f64,
    pub eps_abs: f64,
    /// Grid step of a fixed-point format (0 otherwise).
    #[serde(default)]
    pub delta: f64,
    /// Round-to-nearest fixed point (truncation otherwise).
    #[serde(default)]
    pub rne: bool,
}

impl FloatFormat {
    /// IEEE-754 binary64, round to nearest.
    pub const fn ieee64() -> Self {
        FloatFormat {
            kind: FormatKind::IeeeFloat,
            eps_rel: f64::EPSILON / 2.0,
            eps_abs: 5e-324,
            delta: 0.0,
            rne: false,
        }
    }

    /// IEEE-754 binary32, round to nearest.
    pub const fn ieee32() -> Self {
        FloatFormat {
            kind: FormatKind::IeeeFloat,
            eps_rel: f32::EPSILON as f64 / 2.0,
            eps_abs: 1.401298464324817e-45,
            delta: 0.0,
            rne: false,
        }
    }

    /// Fixed point on the grid `delta Z`: truncation errs by less than
    /// `delta`, round-to-nearest by at most `delta / 2`.
    pub fn fixed(delta: f64, rne: bool) -> Self {
        assert!(delta > 0.0 && delta.is_finite(), "fixed-point step must be positive");
        FloatFormat { kind: FormatKind::FixedPoint, eps_rel: 0.0, eps_abs: if rne { delta / 2.0 } else { delta }, delta, rne }
    }

    pub const fn exact() -> Self {
        FloatFormat { kind: FormatKind::Exact, eps_rel: 0.0, eps_abs: 0.0, delta: 0.0, rne: false }
    }

    pub fn is_exact(&self) -> bool {
        self.eps_rel == 0.0 && self.eps_abs == 0.0
    }

    /// Whether the constant `k` is stored without rounding. Fixed-point
    /// coefficients are kept exact; only products are rounded to the grid.
    pub fn represents(&self, k: &Rat) -> bool {
        match self.kind {
            FormatKind::Exact | FormatKind::FixedPoint => true,
            FormatKind::IeeeFloat if *self == FloatFormat::ieee64() => {
                k.to_f64().and_then(rat_from_f64).is_some_and(|r| &r == k)
            }
            FormatKind::IeeeFloat if *self == FloatFormat::ieee32() => k
                .to_f32()
                .filter(|x| x.is_finite())
                .and_then(|x| rat_from_f64(x as f64))
                .is_some_and(|r| &r == k),
            FormatKind::IeeeFloat => false,
        }
    }
}

impl Default for FloatFormat {
    fn default() -> Self {
        FloatFormat::ieee64()
    }
}

impl FromStr for FloatFormat {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FilterError::BadFormat(s.to_string());
        match s {
            "ieee64" | "double" => Ok(FloatFormat::ieee64()),
            "ieee32" | "float" => Ok(FloatFormat::ieee32()),
            "exact" => Ok(FloatFormat::exact()),
            _ => {
                let rest = s.strip_prefix("fixed:").ok_or_else(bad)?;
                let (delta, rne) = match rest.strip_suffix(":rne") {
                    Some(d) => (d, true),
                    None => (rest, false),
                };
                let delta = parse_step(delta).ok_or_else(bad)?;
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(bad());
                }
                Ok(FloatFormat::fixed(delta, rne))
            }
        }
    }
}

/// Accepts a float literal or `2^-k`.
fn parse_step(s: &str) -> Option<f64> {
    if let Some(e) = s.strip_prefix("2^") {
        let e: i32 = e.parse().ok()?;
        return Some(2f64.powi(e));
    }
    s.parse().ok()
}

impl fmt::Display for FloatFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FormatKind::Exact => write!(f, "exact"),
            FormatKind::FixedPoint => write!(f, "fixed:{}{}", self.delta, if self.rne { ":rne" } else { "" }),
            FormatKind::IeeeFloat if *self == FloatFormat::ieee64() => write!(f, "ieee64"),
            FormatKind::IeeeFloat if *self == FloatFormat::ieee32() => write!(f, "ieee32"),
            FormatKind::IeeeFloat => write!(f, "float(eps_rel={:e}, eps_abs={:e})", self.eps_rel, self.eps_abs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ieee64_constants_are_bit_exact() {
        let f = FloatFormat::ieee64();
        assert_eq!(f.eps_rel.to_bits(), 2f64.powi(-53).to_bits());
        assert_eq!(f.eps_abs.to_bits(), 1);
        assert_eq!(f.eps_abs, f64::from_bits(1));
    }

    #[test]
    fn ieee32_constants() {
        let f = FloatFormat::ieee32();
        assert_eq!(f.eps_rel, 2f64.powi(-24));
        assert_eq!(f.eps_abs, 2f64.powi(-149));
    }

    #[test]
    fn representable_constants() {
        let q = |n: i64, d: i64| Rat::new(n.into(), d.into());
        let f = FloatFormat::ieee64();
        assert!(f.represents(&q(3, 4)));
        assert!(!f.represents(&q(1, 10)));
        assert!(FloatFormat::ieee32().represents(&q(5, 8)));
        assert!(!FloatFormat::ieee32().represents(&Rat::from_float(0.1f64).unwrap()));
        assert!(FloatFormat::fixed(0.5, true).represents(&q(1, 3)));
    }

    #[test]
    fn parsing() {
        assert_eq!("ieee64".parse::<FloatFormat>().unwrap(), FloatFormat::ieee64());
        let f: FloatFormat = "fixed:2^-16:rne".parse().unwrap();
        assert_eq!(f.eps_abs, 2f64.powi(-17));
        let f: FloatFormat = "fixed:0.001".parse().unwrap();
        assert_eq!((f.eps_rel, f.eps_abs), (0.0, 0.001));
        assert!("fixed:-1".parse::<FloatFormat>().is_err());
        assert!("quad".parse::<FloatFormat>().is_err());
        for s in ["ieee64", "ieee32", "exact", "fixed:0.5:rne"] {
            assert_eq!(s.parse::<FloatFormat>().unwrap().to_string(), s);
        }
    }
}
