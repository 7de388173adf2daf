use serde::{Deserialize, Serialize};

use super::norms::{l1_matrix, linf_matrix};
use super::{FilterError, FloatFormat, FormatKind, Result};
use crate::algebra::{invert_id_minus_z_a, Poly, Rat, RatFun, RatFunMatrix};
use crate::bounds::BoundConfig;
use crate::numeric::rounding::{add_up, mul_up};
use crate::numeric::{fixpoint_upper_bound, subordinate_inf_norm, Interval, NonnegMatrix};
use num_traits::{One, Signed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotKind {
    /// Initial value of a delay element.
    Reset,
    /// Always 1; its `D` column carries a constant stream `c / (1 - z)`.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSlot {
    pub label: String,
    pub kind: SlotKind,
}

impl ResetSlot {
    pub fn reset(label: impl Into<String>) -> Self {
        ResetSlot { label: label.into(), kind: SlotKind::Reset }
    }

    pub fn constant(label: impl Into<String>) -> Self {
        ResetSlot { label: label.into(), kind: SlotKind::Constant }
    }
}

/// Basic building blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Basic {
    /// Two inputs, their rounded sum.
    Plus,
    /// Rounded multiplication by a constant.
    Scale(Rat),
    /// Delay by `n` ticks, zero-initialized; `Delay(0)` is a wire.
    Delay(usize),
    /// Unit delay whose initial content is a reset value.
    UnitDelayInit(String),
    /// Copies its input to `k` outputs.
    Split(usize),
}

/// `(T, D, eps_rel_t, eps_rel_d, eps_abs)` plus the description of the
/// reset slots (columns of `D`).
#[derive(Clone, Debug, PartialEq)]
pub struct AbstractFilter {
    t: RatFunMatrix,
    d: RatFunMatrix,
    eps_rel_t: NonnegMatrix,
    eps_rel_d: NonnegMatrix,
    eps_abs: Vec<f64>,
    slots: Vec<ResetSlot>,
}

impl AbstractFilter {
    pub fn from_parts(
        t: RatFunMatrix,
        d: RatFunMatrix,
        eps_rel_t: NonnegMatrix,
        eps_rel_d: NonnegMatrix,
        eps_abs: Vec<f64>,
        slots: Vec<ResetSlot>,
    ) -> Result<Self> {
        let n_o = t.rows();
        let ok = d.rows() == n_o
            && eps_rel_t.rows() == n_o
            && eps_rel_t.cols() == t.cols()
            && eps_rel_d.rows() == n_o
            && eps_rel_d.cols() == d.cols()
            && eps_abs.len() == n_o
            && slots.len() == d.cols();
        if !ok {
            return Err(FilterError::DimensionMismatch(format!(
                "T {}x{}, D {}x{}, eps_t {}x{}, eps_d {}x{}, eps_abs {}, {} slots",
                t.rows(),
                t.cols(),
                d.rows(),
                d.cols(),
                eps_rel_t.rows(),
                eps_rel_t.cols(),
                eps_rel_d.rows(),
                eps_rel_d.cols(),
                eps_abs.len(),
                slots.len()
            )));
        }
        if eps_abs.iter().any(|x| x.is_nan() || *x < 0.0) {
            return Err(FilterError::DimensionMismatch("eps_abs must be nonnegative".into()));
        }
        Ok(AbstractFilter { t, d, eps_rel_t, eps_rel_d, eps_abs, slots })
    }

    /// Exact, error-free filter with the given transfer matrices.
    pub fn ideal(t: RatFunMatrix, d: RatFunMatrix, slots: Vec<ResetSlot>) -> Result<Self> {
        let (n_o, n_i, n_r) = (t.rows(), t.cols(), d.cols());
        Self::from_parts(t, d, NonnegMatrix::zeros(n_o, n_i), NonnegMatrix::zeros(n_o, n_r), vec![0.0; n_o], slots)
    }

    /// No inputs, no outputs: the neutral element of parallel composition.
    pub fn empty() -> Self {
        Self::ideal(RatFunMatrix::zeros(0, 0), RatFunMatrix::zeros(0, 0), Vec::new()).expect("consistent")
    }

    pub fn n_inputs(&self) -> usize {
        self.t.cols()
    }

    pub fn n_outputs(&self) -> usize {
        self.t.rows()
    }

    pub fn n_resets(&self) -> usize {
        self.d.cols()
    }

    pub fn t(&self) -> &RatFunMatrix {
        &self.t
    }

    pub fn d(&self) -> &RatFunMatrix {
        &self.d
    }

    pub fn eps_rel_t(&self) -> &NonnegMatrix {
        &self.eps_rel_t
    }

    pub fn eps_rel_d(&self) -> &NonnegMatrix {
        &self.eps_rel_d
    }

    pub fn eps_abs(&self) -> &[f64] {
        &self.eps_abs
    }

    pub fn slots(&self) -> &[ResetSlot] {
        &self.slots
    }

    /// Keeps only the given outputs (rows), in the given order.
    pub fn select_outputs(&self, rows: &[usize]) -> AbstractFilter {
        let pick = |m: &NonnegMatrix| {
            let mut out = NonnegMatrix::zeros(rows.len(), m.cols());
            for (k, &i) in rows.iter().enumerate() {
                for j in 0..m.cols() {
                    out.set(k, j, m.get(i, j));
                }
            }
            out
        };
        AbstractFilter {
            t: self.t.select_rows(rows),
            d: self.d.select_rows(rows),
            eps_rel_t: pick(&self.eps_rel_t),
            eps_rel_d: pick(&self.eps_rel_d),
            eps_abs: rows.iter().map(|&i| self.eps_abs[i]).collect(),
            slots: self.slots.clone(),
        }
    }

    /// Adds nonnegative increments to the error envelope.
    pub(crate) fn widen(&mut self, eps_t: &NonnegMatrix, eps_d: &NonnegMatrix) {
        self.eps_rel_t = self.eps_rel_t.add(eps_t);
        self.eps_rel_d = self.eps_rel_d.add(eps_d);
    }

    pub(crate) fn replace_kernels(&mut self, t: RatFunMatrix, d: RatFunMatrix) {
        assert!(t.rows() == self.t.rows() && t.cols() == self.t.cols() && d.rows() == self.d.rows() && d.cols() == self.d.cols());
        self.t = t;
        self.d = d;
    }
}

fn scalar(f: RatFun) -> RatFunMatrix {
    RatFunMatrix::from_entries(1, 1, vec![f]).expect("1x1")
}

fn row_of(v: f64, n: usize) -> NonnegMatrix {
    NonnegMatrix::from_vec(1, n, vec![v; n]).expect("nonnegative")
}

/// Relative error of `x -> round(k~ x)` against `k x`, where `k~` is `k`
/// rounded to the format: `k~ = k (1 + d1) + a1`, so the error is at most
/// `|k| eps (2 + eps) + eps_abs (1 + eps)` per unit of `|x|` (only
/// `|k| eps` when `k` is representable).
fn scale_error(k: &Rat, fmt: &FloatFormat) -> f64 {
    let mag = Interval::from_rat(&k.abs()).hi();
    if fmt.represents(k) {
        mul_up(mag, fmt.eps_rel)
    } else {
        let eps = fmt.eps_rel;
        add_up(mul_up(mag, mul_up(eps, add_up(2.0, eps))), mul_up(fmt.eps_abs, add_up(1.0, eps)))
    }
}

/// Error of the stored constant `k~` against `k`.
fn constant_error(k: &Rat, fmt: &FloatFormat) -> f64 {
    if fmt.kind == FormatKind::FixedPoint {
        let on_grid = crate::algebra::rat_from_f64(fmt.delta).is_some_and(|d| (k / d).is_integer());
        return if on_grid { 0.0 } else { fmt.eps_abs };
    }
    if fmt.represents(k) {
        0.0
    } else {
        add_up(mul_up(Interval::from_rat(&k.abs()).hi(), fmt.eps_rel), fmt.eps_abs)
    }
}

/// Abstract value of a basic block in the given format.
///
/// Multiplication by `1` or `-1` is exact and carries no error.
pub fn make_basic(kind: &Basic, fmt: &FloatFormat) -> AbstractFilter {
    let built = match kind {
        Basic::Plus => {
            // sums of grid values stay on a fixed-point grid
            let (rel, abs) = match fmt.kind {
                FormatKind::FixedPoint => (0.0, 0.0),
                _ => (fmt.eps_rel, fmt.eps_abs),
            };
            AbstractFilter::from_parts(
                RatFunMatrix::from_entries(1, 2, vec![RatFun::one(), RatFun::one()]).expect("1x2"),
                RatFunMatrix::zeros(1, 0),
                row_of(rel, 2),
                NonnegMatrix::zeros(1, 0),
                vec![abs],
                Vec::new(),
            )
        }
        Basic::Scale(k) => {
            let exact = k.abs().is_one() || fmt.is_exact();
            let eps_t = if exact { 0.0 } else { scale_error(k, fmt) };
            AbstractFilter::from_parts(
                scalar(RatFun::constant(k.clone())),
                RatFunMatrix::zeros(1, 0),
                row_of(eps_t, 1),
                NonnegMatrix::zeros(1, 0),
                vec![if exact { 0.0 } else { fmt.eps_abs }],
                Vec::new(),
            )
        }
        Basic::Delay(n) => AbstractFilter::ideal(scalar(RatFun::z_pow(*n)), RatFunMatrix::zeros(1, 0), Vec::new()),
        Basic::UnitDelayInit(label) => {
            AbstractFilter::ideal(scalar(RatFun::z_pow(1)), scalar(RatFun::one()), vec![ResetSlot::reset(label.clone())])
        }
        Basic::Split(k) => AbstractFilter::ideal(
            RatFunMatrix::from_entries(*k, 1, vec![RatFun::one(); *k]).expect("kx1"),
            RatFunMatrix::zeros(*k, 0),
            Vec::new(),
        ),
    };
    built.expect("basic blocks are consistent")
}

/// Zero-input source of the constant stream `c, c, c, ...`, modelled as a
/// slot of value 1 whose `D` entry is `c / (1 - z)`; storing `c` in the
/// format may cost one rounding.
pub fn make_constant_source(c: &Rat, label: impl Into<String>, fmt: &FloatFormat) -> AbstractFilter {
    let step = RatFun::new(Poly::constant(c.clone()), Poly::from_ints(&[1, -1])).expect("causal");
    AbstractFilter::from_parts(
        RatFunMatrix::zeros(1, 0),
        scalar(step),
        NonnegMatrix::zeros(1, 0),
        NonnegMatrix::from_vec(1, 1, vec![constant_error(c, fmt)]).expect("nonnegative"),
        vec![0.0],
        vec![ResetSlot::constant(label)],
    )
    .expect("consistent")
}

/// Side-by-side composition: inputs, outputs and reset slots concatenated.
pub fn compose_parallel(f: &AbstractFilter, g: &AbstractFilter) -> AbstractFilter {
    let mut slots = f.slots.clone();
    slots.extend(g.slots.iter().cloned());
    let mut eps_abs = f.eps_abs.clone();
    eps_abs.extend_from_slice(&g.eps_abs);
    AbstractFilter {
        t: f.t.block_diag(&g.t),
        d: f.d.block_diag(&g.d),
        eps_rel_t: f.eps_rel_t.block_diag(&g.eps_rel_t),
        eps_rel_d: f.eps_rel_d.block_diag(&g.eps_rel_d),
        eps_abs,
        slots,
    }
}

/// `f` then `g`. With `G' = N1(T_g) + eps_rel_t^g`:
///
/// * `eps_rel_t = G' eps_rel_t^f + eps_rel_t^g N1(T_f)`
/// * `eps_rel_d = [G' eps_rel_d^f + eps_rel_t^g Ninf(D_f) | eps_rel_d^g]`
/// * `eps_abs = G' eps_abs^f + eps_abs^g`
///
/// `g`'s relative error applies to the sup norm of its actual input, which
/// is bounded by `N1(T_f) N(I) + Ninf(D_f) |R_f|` plus `f`'s error.
pub fn compose_serial(f: &AbstractFilter, g: &AbstractFilter, cfg: &BoundConfig) -> Result<AbstractFilter> {
    if f.n_outputs() != g.n_inputs() {
        return Err(FilterError::DimensionMismatch(format!(
            "serial composition of a filter with {} outputs into one with {} inputs",
            f.n_outputs(),
            g.n_inputs()
        )));
    }
    let t = g.t.mul(&f.t)?;
    let d = g.t.mul(&f.d)?.hcat(&g.d)?;

    let g_prime = l1_matrix(&g.t, cfg).add(&g.eps_rel_t);
    let g_has_rel = !g.eps_rel_t.is_zero();
    let mut eps_t = g_prime.mul(&f.eps_rel_t);
    let mut eps_df = g_prime.mul(&f.eps_rel_d);
    if g_has_rel {
        eps_t = eps_t.add(&g.eps_rel_t.mul(&l1_matrix(&f.t, cfg)));
        eps_df = eps_df.add(&g.eps_rel_t.mul(&linf_matrix(&f.d, cfg)));
    }
    let eps_d = eps_df.hcat(&g.eps_rel_d);
    let eps_abs: Vec<f64> = g_prime
        .mul_vec(&f.eps_abs)
        .into_iter()
        .zip(&g.eps_abs)
        .map(|(a, &b)| add_up(a, b))
        .collect();

    let mut slots = f.slots.clone();
    slots.extend(g.slots.iter().cloned());
    AbstractFilter::from_parts(t, d, eps_t, eps_d, eps_abs, slots)
}

/// Error envelope of a closed loop.
///
/// With `a` bounding the L1 norms of the loop's injection kernels (how an
/// error created inside the loop reaches its outputs) and `eps_o` the
/// relative error created per unit of fed-back signal, the accumulated error
/// `d` obeys `d <= K1 d + a y` with `K1 = a eps_o`; each returned matrix
/// bounds `(1 - K1)^-1 a y` column by column for the matching `y`, and every
/// column passes the explicit fixpoint post-check.
pub fn closed_loop_error(a: &NonnegMatrix, eps_o: &NonnegMatrix, ys: &[&NonnegMatrix]) -> Result<Vec<NonnegMatrix>> {
    let k1 = a.mul(eps_o);
    let norm = subordinate_inf_norm(&k1);
    if !(norm < 1.0) {
        return Err(FilterError::NotContracting { norm });
    }
    ys.iter()
        .map(|y| {
            let ay = a.mul(y);
            let mut out = NonnegMatrix::zeros(ay.rows(), ay.cols());
            for j in 0..ay.cols() {
                let col: Vec<f64> = (0..ay.rows()).map(|i| ay.get(i, j)).collect();
                let b = if k1.is_zero() { col } else { fixpoint_upper_bound(&k1, &col)? };
                for (i, v) in b.into_iter().enumerate() {
                    out.set(i, j, v);
                }
            }
            Ok(out)
        })
        .collect()
}

/// Feeds the `n` outputs of `f` back, through unit delays, into its last
/// `n` inputs.
///
/// Ideal part: `T = (Id - z T_O)^-1 T_I`, `D = (Id - z T_O)^-1 D_f`.
/// Error part with `A = N1((Id - z T_O)^-1)` and `K1 = A eps_O`:
/// `eps_rel_t = (1-K1)^-1 A (eps_I + eps_O N1(T))`,
/// `eps_rel_d = (1-K1)^-1 A (eps_rel_d^f + eps_O Ninf(D))`,
/// `eps_abs = (1-K1)^-1 A eps_abs^f`.
pub fn compose_feedback(f: &AbstractFilter, n: usize, cfg: &BoundConfig) -> Result<AbstractFilter> {
    if f.n_outputs() != n || f.n_inputs() < n {
        return Err(FilterError::DimensionMismatch(format!(
            "feedback of {n} signals needs {n} outputs and at least {n} inputs, got {} and {}",
            f.n_outputs(),
            f.n_inputs()
        )));
    }
    let m = f.n_inputs() - n;
    let t_i = f.t.columns(0..m);
    let t_o = f.t.columns(m..m + n);
    let loop_inv = invert_id_minus_z_a(&t_o)?;
    let t = loop_inv.mul(&t_i)?;
    let d = loop_inv.mul(&f.d)?;

    let eps_i = f.eps_rel_t.columns(0, m);
    let eps_o = f.eps_rel_t.columns(m, m + n);
    let (eps_t, eps_d, eps_abs) = if f.eps_rel_t.is_zero() && f.eps_rel_d.is_zero() && f.eps_abs.iter().all(|&x| x == 0.0) {
        (NonnegMatrix::zeros(n, m), NonnegMatrix::zeros(n, f.n_resets()), vec![0.0; n])
    } else {
        let a = l1_matrix(&loop_inv, cfg);
        let (y_t, y_d) = if eps_o.is_zero() {
            (eps_i, f.eps_rel_d.clone())
        } else {
            (eps_i.add(&eps_o.mul(&l1_matrix(&t, cfg))), f.eps_rel_d.add(&eps_o.mul(&linf_matrix(&d, cfg))))
        };
        let y_a = NonnegMatrix::column(&f.eps_abs)?;
        let mut out = closed_loop_error(&a, &eps_o, &[&y_t, &y_d, &y_a])?.into_iter();
        let (et, ed, ea) = (out.next().expect("3"), out.next().expect("3"), out.next().expect("3"));
        let ea = (0..n).map(|i| ea.get(i, 0)).collect();
        (et, ed, ea)
    };
    AbstractFilter::from_parts(t, d, eps_t, eps_d, eps_abs, f.slots.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Poly;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    fn cfg() -> BoundConfig {
        BoundConfig::default()
    }

    #[test]
    fn basic_tables() {
        let f = FloatFormat::ieee64();
        let plus = make_basic(&Basic::Plus, &f);
        assert_eq!(plus.eps_rel_t().row(0), &[2f64.powi(-53), 2f64.powi(-53)]);
        assert_eq!(plus.eps_abs(), &[f64::from_bits(1)]);

        let d3 = make_basic(&Basic::Delay(3), &f);
        assert_eq!(d3.t().get(0, 0), &RatFun::z_pow(3));
        assert!(d3.eps_rel_t().is_zero() && d3.eps_abs() == [0.0]);

        let s2 = make_basic(&Basic::Scale(q(2, 1)), &f);
        assert_eq!(s2.t().get(0, 0), &RatFun::constant(q(2, 1)));
        assert_eq!(s2.eps_rel_t().get(0, 0), 2.0 * 2f64.powi(-53));

        let s = make_basic(&Basic::Scale(q(1, 10)), &f);
        assert!(s.eps_rel_t().get(0, 0) >= 0.2 * 2f64.powi(-53));
        assert_eq!(make_basic(&Basic::Scale(q(-1, 1)), &f).eps_abs(), &[0.0]);
    }

    #[test]
    fn constant_source() {
        let c = make_constant_source(&q(10, 1), "tau", &FloatFormat::ieee64());
        assert_eq!((c.n_inputs(), c.n_outputs(), c.n_resets()), (0, 1, 1));
        assert_eq!(c.slots()[0].kind, SlotKind::Constant);
    }

    #[test]
    fn parallel_dimensions() {
        let f = FloatFormat::ieee64();
        let p = compose_parallel(&make_basic(&Basic::Plus, &f), &make_basic(&Basic::Plus, &f));
        assert_eq!((p.n_inputs(), p.n_outputs()), (4, 2));
        assert!(p.t().get(0, 2).is_zero() && p.t().get(1, 3).is_one());
        let e = compose_parallel(&p, &AbstractFilter::empty());
        assert_eq!(e, p);
        let split = make_basic(&Basic::Split(2), &f);
        let mixed = compose_parallel(&make_basic(&Basic::Plus, &f), &split);
        assert_eq!((mixed.n_inputs(), mixed.n_outputs()), (3, 3));
    }

    #[test]
    fn serial_identity_and_abs() {
        let exact = FloatFormat::exact();
        let g = make_basic(&Basic::Scale(q(3, 7)), &FloatFormat::ieee64());
        let s = compose_serial(&make_basic(&Basic::Scale(Rat::one()), &exact), &g, &cfg()).unwrap();
        assert_eq!(s.t(), g.t());
        assert_eq!(s.eps_abs(), g.eps_abs());
        assert!(compose_serial(&make_basic(&Basic::Split(2), &exact), &g, &cfg()).is_err());
    }

    #[test]
    fn scalar_feedback_is_first_order_iir() {
        // inputs (u, y): output u + b*y, with y the delayed output
        let exact = FloatFormat::exact();
        let b = q(1, 2);
        let inner = AbstractFilter::ideal(
            RatFunMatrix::from_entries(1, 2, vec![RatFun::one(), RatFun::constant(b.clone())]).unwrap(),
            RatFunMatrix::zeros(1, 0),
            Vec::new(),
        )
        .unwrap();
        let closed = compose_feedback(&inner, 1, &cfg()).unwrap();
        let expected = RatFun::new(Poly::one(), Poly::new(vec![Rat::one(), -b])).unwrap();
        assert_eq!(closed.t().get(0, 0), &expected);
        assert!(closed.eps_rel_t().is_zero());
        let _ = exact;
    }

    #[test]
    fn float_feedback_error() {
        // s = plus(u, y/2) in ieee64, fed back
        let f = FloatFormat::ieee64();
        let half = make_basic(&Basic::Scale(q(1, 2)), &f);
        let wire = make_basic(&Basic::Delay(0), &f);
        let pre = compose_parallel(&wire, &half);
        let inner = compose_serial(&pre, &make_basic(&Basic::Plus, &f), &cfg()).unwrap();
        let closed = compose_feedback(&inner, 1, &cfg()).unwrap();
        let e = closed.eps_rel_t().get(0, 0);
        assert!(e > 0.0 && e < 1e-14, "{e}");
        assert!(closed.eps_abs()[0] > 0.0 && closed.eps_abs()[0] < 1e-300);
    }

    #[test]
    fn non_contracting_loop_rejected() {
        let big = FloatFormat { eps_rel: 0.3, ..FloatFormat::ieee64() };
        let inner = compose_serial(
            &compose_parallel(&make_basic(&Basic::Delay(0), &big), &make_basic(&Basic::Scale(q(9, 10)), &big)),
            &make_basic(&Basic::Plus, &big),
            &cfg(),
        )
        .unwrap();
        assert!(matches!(compose_feedback(&inner, 1, &cfg()), Err(FilterError::NotContracting { .. })));
    }

    #[test]
    fn closed_loop_core_post_check() {
        let a = NonnegMatrix::from_rows(&[vec![2.0]]).unwrap();
        let eps_o = NonnegMatrix::from_rows(&[vec![0.25]]).unwrap();
        let y = NonnegMatrix::from_rows(&[vec![1.0]]).unwrap();
        let out = closed_loop_error(&a, &eps_o, &[&y]).unwrap();
        let b = out[0].get(0, 0);
        // K1 = 0.5, A y = 2 -> 4
        assert!((4.0..4.0 + 1e-9).contains(&b));
        assert!(crate::numeric::verify_fixpoint(&a.mul(&eps_o), &[2.0], &[b]));
    }
}
