use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::Poly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
    Unknown,
}

/// Decides exactly whether every root of `q` lies strictly outside the
/// closed unit disc (the kernel of `p / q` is then summable).
///
/// Schur–Cohn recursion on the reversed polynomial, whose roots are the
/// inverses of those of `q`: `r` of degree `n` has all roots strictly inside
/// the unit disc iff `|r_0| < |r_n|` and `(r_n r - r_0 r*) / z` has the same
/// property, `r*` being the reversal. Integer coefficients are reduced to
/// their primitive part at every step to keep them small.
pub fn schur_cohn_stable(q: &Poly) -> bool {
    if q.is_zero() {
        return false;
    }
    if q.constant_term().is_zero() {
        return false;
    }
    let mut r: Vec<BigInt> = q.reversed().primitive_integer();
    // trailing zeros of the reversal are roots at 0 of r, i.e. degree drops of q
    while r.len() > 1 {
        let n = r.len() - 1;
        let (r0, rn) = (r[0].clone(), r[n].clone());
        if r0.abs() >= rn.abs() {
            return false;
        }
        let next: Vec<BigInt> = (1..=n).map(|k| &rn * &r[k] - &r0 * &r[n - k]).collect();
        r = primitive(next);
    }
    true
}

fn primitive(mut v: Vec<BigInt>) -> Vec<BigInt> {
    while v.last().is_some_and(|c| c.is_zero()) {
        v.pop();
    }
    let g = v.iter().fold(BigInt::zero(), |acc, c| num_integer::Integer::gcd(&acc, c));
    if !g.is_zero() {
        for c in v.iter_mut() {
            *c = &*c / &g;
        }
    }
    v
}

pub fn stability_of(q: &Poly) -> Stability {
    if schur_cohn_stable(q) {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}
