use super::rounding::{add_up, div_up, mul_up_nonneg, powi_up, sub_down};
use super::{subordinate_inf_norm, NonnegMatrix, NumericError, Result};

/// Explicit iterations before the geometric tail is added.
pub const FIXPOINT_ITERATIONS: u32 = 64;
/// Widenings attempted when the post-check fails.
pub const FIXPOINT_RETRIES: u32 = 8;

const WIDEN: f64 = 1.0 + 1.0 / (1u64 << 20) as f64;

/// `true` iff `K1 * b + y <= b` holds coordinate-wise, evaluated with upward
/// rounding (so a `true` answer is a proof).
pub fn verify_fixpoint(k1: &NonnegMatrix, y: &[f64], b: &[f64]) -> bool {
    let kb = k1.mul_vec(b);
    kb.iter().zip(y).zip(b).all(|((&kb, &y), &b)| add_up(kb, y) <= b)
}

/// Certified upper bound `B` on the least solution of `d = K1 d + y`, i.e. on
/// `(1 - K1)^-1 y = sum_k K1^k y`.
///
/// Iterates `d_n = K1 d_{n-1} + y`, adds the remaining geometric mass
/// `|K1|^(n+1) / (1 - |K1|) * |y|_inf` to every coordinate and then checks
/// `K1 B + y <= B` explicitly; on failure `B` is widened a few times.
pub fn fixpoint_upper_bound(k1: &NonnegMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if k1.rows() != k1.cols() || k1.rows() != y.len() {
        return Err(NumericError::DimensionMismatch(format!(
            "fixpoint of a {}x{} matrix with a {}-vector",
            k1.rows(),
            k1.cols(),
            y.len()
        )));
    }
    let norm = subordinate_inf_norm(k1);
    if norm.is_nan() || norm >= 1.0 {
        return Err(NumericError::NotContracting { norm });
    }
    let mut d = y.to_vec();
    let mut n = 0;
    while n < FIXPOINT_ITERATIONS {
        let next: Vec<f64> = k1.mul_vec(&d).into_iter().zip(y).map(|(a, &b)| add_up(a, b)).collect();
        n += 1;
        let stalled = next == d;
        d = next;
        if stalled {
            break;
        }
    }
    let y_inf = y.iter().copied().fold(0.0, f64::max);
    let tail = if norm == 0.0 {
        0.0
    } else {
        mul_up_nonneg(div_up(powi_up(norm, n + 1), sub_down(1.0, norm)), y_inf)
    };
    let mut b: Vec<f64> = d.iter().map(|&x| add_up(x, tail)).collect();
    for _ in 0..=FIXPOINT_RETRIES {
        if verify_fixpoint(k1, y, &b) {
            return Ok(b);
        }
        b = b.iter().map(|&x| mul_up_nonneg(x, WIDEN)).collect();
    }
    Err(NumericError::PostCheckFailed { retries: FIXPOINT_RETRIES })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn scalar_geometric() {
        let k = m(&[vec![0.5]]);
        let b = fixpoint_upper_bound(&k, &[1.0]).unwrap();
        assert!(b[0] >= 2.0 && b[0] < 2.0 + 1e-9);
        assert!(0.5 * b[0] + 1.0 <= b[0]);
    }

    #[test]
    fn zero_feedback_returns_input() {
        let k = NonnegMatrix::zeros(2, 2);
        assert_eq!(fixpoint_upper_bound(&k, &[1.0, 3.0]).unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn tiny_feedback() {
        let k = m(&[vec![1e-15]]);
        let b = fixpoint_upper_bound(&k, &[1.0]).unwrap();
        assert!(b[0] > 1.0 && b[0] < 1.0 + 1e-14);
    }

    #[test]
    fn rejects_non_contracting() {
        let k = m(&[vec![0.5, 0.5], vec![0.0, 0.1]]);
        assert!(matches!(fixpoint_upper_bound(&k, &[1.0, 1.0]), Err(NumericError::NotContracting { .. })));
        let k = m(&[vec![2.0]]);
        assert!(matches!(fixpoint_upper_bound(&k, &[0.0]), Err(NumericError::NotContracting { .. })));
    }

    #[test]
    fn slow_contraction_still_certified() {
        let k = m(&[vec![0.6, 0.39], vec![0.2, 0.79]]);
        let y = [1.0, 2.0];
        let b = fixpoint_upper_bound(&k, &y).unwrap();
        assert!(verify_fixpoint(&k, &y, &b));
        assert!(b.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn unbounded_input_propagates() {
        let k = m(&[vec![0.5, 0.0], vec![0.0, 0.0]]);
        let b = fixpoint_upper_bound(&k, &[f64::INFINITY, 1.0]).unwrap();
        assert_eq!(b[0], f64::INFINITY);
    }
}
