use std::fmt;

use num_traits::One;

use super::{AlgebraError, Poly, Rat, RatFun, Result};

/// Dense row-major matrix of causal rational functions.
#[derive(Clone, PartialEq, Eq)]
pub struct RatFunMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<RatFun>,
}

impl RatFunMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatFunMatrix { rows, cols, entries: vec![RatFun::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, RatFun::one());
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<RatFun>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(RatFunMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: Vec<Vec<RatFun>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(AlgebraError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_entries(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &RatFun {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: RatFun) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[RatFun] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[RatFun] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, other: &RatFunMatrix) -> Result<RatFunMatrix> {
        if self.cols != other.rows {
            return Err(AlgebraError::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RatFunMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RatFun::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &RatFunMatrix) -> Result<RatFunMatrix> {
        self.zip(other, RatFun::add)
    }

    pub fn sub(&self, other: &RatFunMatrix) -> Result<RatFunMatrix> {
        self.zip(other, RatFun::sub)
    }

    fn zip(&self, other: &RatFunMatrix, op: impl Fn(&RatFun, &RatFun) -> Result<RatFun>) -> Result<RatFunMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(AlgebraError::DimensionMismatch("elementwise operation".into()));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| op(a, b)).collect::<Result<_>>()?;
        Ok(RatFunMatrix { rows: self.rows, cols: self.cols, entries })
    }

    /// Multiplies every entry by `z^k`.
    pub fn shift(&self, k: usize) -> RatFunMatrix {
        RatFunMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|e| e.shift(k)).collect() }
    }

    /// Columns `range` as a new matrix.
    pub fn columns(&self, range: std::ops::Range<usize>) -> RatFunMatrix {
        let cols = range.len();
        let mut entries = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            entries.extend(range.clone().map(|j| self.get(i, j).clone()));
        }
        RatFunMatrix { rows: self.rows, cols, entries }
    }

    /// Rows `range` as a new matrix.
    pub fn select_rows(&self, rows: &[usize]) -> RatFunMatrix {
        let mut entries = Vec::with_capacity(rows.len() * self.cols);
        for &i in rows {
            entries.extend(self.row(i).iter().cloned());
        }
        RatFunMatrix { rows: rows.len(), cols: self.cols, entries }
    }

    /// `[self | other]`
    pub fn hcat(&self, other: &RatFunMatrix) -> Result<RatFunMatrix> {
        if self.rows != other.rows {
            return Err(AlgebraError::DimensionMismatch("hcat".into()));
        }
        let mut entries = Vec::with_capacity(self.rows * (self.cols + other.cols));
        for i in 0..self.rows {
            entries.extend(self.row(i).iter().cloned());
            entries.extend(other.row(i).iter().cloned());
        }
        Ok(RatFunMatrix { rows: self.rows, cols: self.cols + other.cols, entries })
    }

    pub fn block_diag(&self, other: &RatFunMatrix) -> RatFunMatrix {
        let mut out = RatFunMatrix::zeros(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).clone());
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out.set(self.rows + i, self.cols + j, other.get(i, j).clone());
            }
        }
        out
    }
}

impl fmt::Debug for RatFunMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RatFunMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|e| e.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Element of the full field of fractions; used inside elimination where
/// intermediate pivots may leave the causal ring.
#[derive(Clone, Debug)]
struct Frac {
    num: Poly,
    den: Poly,
}

impl Frac {
    fn new(num: Poly, den: Poly) -> Frac {
        if num.is_zero() {
            return Frac::zero();
        }
        let g = num.gcd(&den);
        let (num, den) = if g.is_constant() {
            (num, den)
        } else {
            (num.div_exact(&g).expect("gcd divides"), den.div_exact(&g).expect("gcd divides"))
        };
        let lead = den.leading().expect("nonzero denominator").clone();
        let inv = Rat::one() / lead;
        Frac { num: num.scale(&inv), den: den.scale(&inv) }
    }

    fn zero() -> Frac {
        Frac { num: Poly::zero(), den: Poly::one() }
    }

    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    fn from_ratfun(f: &RatFun) -> Frac {
        Frac::new(f.num().clone(), f.den().clone())
    }

    fn to_ratfun(&self) -> Result<RatFun> {
        RatFun::new(self.num.clone(), self.den.clone()).map_err(|e| match e {
            AlgebraError::NotCausal => AlgebraError::NonCausalSystem,
            other => other,
        })
    }

    fn mul(&self, o: &Frac) -> Frac {
        if self.is_zero() || o.is_zero() {
            return Frac::zero();
        }
        Frac::new(&self.num * &o.num, &self.den * &o.den)
    }

    fn sub(&self, o: &Frac) -> Frac {
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return Frac::new(&self.num - &o.num, self.den.clone());
        }
        Frac::new(&(&self.num * &o.den) - &(&o.num * &self.den), &self.den * &o.den)
    }

    fn inv(&self) -> Frac {
        Frac::new(self.den.clone(), self.num.clone())
    }

    /// Structural size used for pivot preference.
    fn weight(&self) -> usize {
        self.num.len() + self.den.len()
    }
}

/// Forward elimination with row swaps. Pivot: among rows with a nonzero entry
/// in the column, the one of least numerator+denominator size (first on ties).
/// Returns the reduced augmented rows and the determinant of `m`.
fn eliminate(m: &RatFunMatrix, rhs: Option<&RatFunMatrix>) -> (Vec<Vec<Frac>>, Frac, bool) {
    let n = m.rows();
    let extra = rhs.map_or(0, |b| b.cols());
    let mut a: Vec<Vec<Frac>> = (0..n)
        .map(|i| {
            let mut row: Vec<Frac> = m.row(i).iter().map(Frac::from_ratfun).collect();
            if let Some(b) = rhs {
                row.extend(b.row(i).iter().map(Frac::from_ratfun));
            }
            row
        })
        .collect();
    let mut det = Frac::new(Poly::one(), Poly::one());
    for col in 0..n {
        let pivot = (col..n).filter(|&r| !a[r][col].is_zero()).min_by_key(|&r| a[r][col].weight());
        let Some(p) = pivot else {
            return (a, Frac::zero(), false);
        };
        if p != col {
            a.swap(p, col);
            det = Frac::new(-&det.num, det.den.clone());
        }
        det = det.mul(&a[col][col]);
        let inv = a[col][col].inv();
        for j in col..n + extra {
            a[col][j] = a[col][j].mul(&inv);
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in col..n + extra {
                if a[col][j].is_zero() {
                    continue;
                }
                let t = factor.mul(&a[col][j]);
                a[r][j] = a[r][j].sub(&t);
            }
        }
    }
    (a, det, true)
}

/// Solves `m * x = b` by Gauss-Jordan elimination over the field of fractions
/// and checks that the solution is causal.
pub fn solve_linear_system(m: &RatFunMatrix, b: &RatFunMatrix) -> Result<RatFunMatrix> {
    if !m.is_square() {
        return Err(AlgebraError::DimensionMismatch("system matrix is not square".into()));
    }
    if m.rows() != b.rows() {
        return Err(AlgebraError::DimensionMismatch("right-hand side rows".into()));
    }
    let n = m.rows();
    let (a, _, ok) = eliminate(m, Some(b));
    if !ok {
        return Err(AlgebraError::Singular);
    }
    let mut out = RatFunMatrix::zeros(n, b.cols());
    for i in 0..n {
        for j in 0..b.cols() {
            out.set(i, j, a[i][n + j].to_ratfun()?);
        }
    }
    Ok(out)
}

/// Determinant by elimination, as a rational function. `None` if the result is
/// not causal (it always is for matrices over the causal ring).
pub fn determinant(m: &RatFunMatrix) -> Result<RatFun> {
    if !m.is_square() {
        return Err(AlgebraError::DimensionMismatch("determinant of a non-square matrix".into()));
    }
    let (_, det, ok) = eliminate(m, None);
    if !ok {
        return Ok(RatFun::zero());
    }
    det.to_ratfun()
}

/// `(Id - z A)^{-1}`, which always exists in the causal ring because
/// `det(Id - z A)` has constant term 1.
///
/// # Panics
/// If elimination fails, which would mean an arithmetic bug, not bad input.
pub fn invert_id_minus_z_a(a: &RatFunMatrix) -> Result<RatFunMatrix> {
    if !a.is_square() {
        return Err(AlgebraError::DimensionMismatch("feedback matrix is not square".into()));
    }
    let n = a.rows();
    if a.entries().iter().all(RatFun::is_zero) {
        return Ok(RatFunMatrix::identity(n));
    }
    let m = RatFunMatrix::identity(n).sub(&a.shift(1))?;
    match solve_linear_system(&m, &RatFunMatrix::identity(n)) {
        Ok(inv) => Ok(inv),
        Err(AlgebraError::DegreeTooLarge { degree, cap }) => Err(AlgebraError::DegreeTooLarge { degree, cap }),
        Err(e) => panic!("Id - zA must be invertible over the causal ring, elimination reported: {e}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn c(n: i64, d: i64) -> RatFun {
        RatFun::constant(q(n, d))
    }

    #[test]
    fn scalar_feedback_inverse() {
        let a = RatFunMatrix::from_rows(vec![vec![c(1, 3)]]).unwrap();
        let inv = invert_id_minus_z_a(&a).unwrap();
        let expect = RatFun::new(Poly::one(), Poly::new(vec![Rat::one(), q(-1, 3)])).unwrap();
        assert_eq!(inv.get(0, 0), &expect);
        assert_eq!(invert_id_minus_z_a(&RatFunMatrix::zeros(3, 3)).unwrap(), RatFunMatrix::identity(3));
    }

    #[test]
    fn companion_inverse_multiplies_back() {
        let (b1, b2) = (q(3, 2), q(-7, 10));
        let a = RatFunMatrix::from_rows(vec![
            vec![RatFun::constant(b1.clone()), RatFun::constant(b2.clone())],
            vec![RatFun::one(), RatFun::zero()],
        ])
        .unwrap();
        let inv = invert_id_minus_z_a(&a).unwrap();
        let m = RatFunMatrix::identity(2).sub(&a.shift(1)).unwrap();
        assert_eq!(inv.mul(&m).unwrap(), RatFunMatrix::identity(2));
        assert_eq!(m.mul(&inv).unwrap(), RatFunMatrix::identity(2));
        let tf = RatFun::new(Poly::one(), Poly::new(vec![Rat::one(), -b1, -b2])).unwrap();
        assert_eq!(inv.get(0, 0), &tf);
    }

    #[test]
    fn solve_scalar_tf2() {
        let alpha = Poly::new(vec![q(1, 2), q(1, 3), q(1, 5)]);
        let beta = Poly::new(vec![Rat::one(), q(-1, 2), q(1, 4)]);
        let m = RatFunMatrix::from_rows(vec![vec![RatFun::from_poly(beta.clone())]]).unwrap();
        let b = RatFunMatrix::from_rows(vec![vec![RatFun::from_poly(alpha.clone())]]).unwrap();
        let x = solve_linear_system(&m, &b).unwrap();
        assert_eq!(x.get(0, 0), &RatFun::new(alpha, beta).unwrap());
        let id = RatFunMatrix::identity(1);
        assert_eq!(solve_linear_system(&id, &b).unwrap(), b);
    }

    #[test]
    fn solve_errors() {
        let sing = RatFunMatrix::from_rows(vec![vec![c(1, 1), c(2, 1)], vec![c(2, 1), c(4, 1)]]).unwrap();
        let b = RatFunMatrix::identity(2);
        assert_eq!(solve_linear_system(&sing, &b), Err(AlgebraError::Singular));
        let z = RatFunMatrix::from_rows(vec![vec![RatFun::z_pow(1)]]).unwrap();
        let one = RatFunMatrix::identity(1);
        assert_eq!(solve_linear_system(&z, &one), Err(AlgebraError::NonCausalSystem));
    }

    #[test]
    fn determinant_of_feedback_has_unit_constant() {
        let a = RatFunMatrix::from_rows(vec![
            vec![c(1, 2), RatFun::z_pow(1)],
            vec![RatFun::new(Poly::one(), Poly::from_ints(&[1, 1])).unwrap(), c(-3, 1)],
        ])
        .unwrap();
        let m = RatFunMatrix::identity(2).sub(&a.shift(1)).unwrap();
        let d = determinant(&m).unwrap();
        let (num0, den0) = (d.num().constant_term(), d.den().constant_term());
        assert_eq!(num0 / den0, Rat::one());
    }
}
