use std::collections::VecDeque;

use num_traits::{One, Signed};

use super::norms::{l1_matrix, linf_matrix};
use super::sim::Arithmetic;
use super::{closed_loop_error, AbstractFilter, FilterError, FloatFormat, FormatKind, ResetSlot, Result, SlotKind};
use crate::algebra::{rat_from_f64, solve_linear_system, Poly, Rat, RatFun, RatFunMatrix};
use crate::bounds::BoundConfig;
use crate::numeric::rounding::{add_up, div_up, mul_up, mul_up_nonneg, powi_up, sub_down, sub_up};
use crate::numeric::{Interval, NonnegMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Node(usize),
    Input(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Signal(Source),
    /// `delay(source, n, init)`: `init` (or 0) for the first `n` ticks,
    /// then the source `n` ticks late.
    Delayed { source: Source, n: usize, init: Option<usize> },
    /// A constant slot; the term's coefficient is the constant.
    Const(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Rat,
    pub operand: Operand,
}

impl Term {
    pub fn new(coeff: Rat, operand: Operand) -> Self {
        Term { coeff, operand }
    }

    /// The node this term reads without delay, if any.
    fn instant_node(&self) -> Option<usize> {
        match self.operand {
            Operand::Signal(Source::Node(x)) | Operand::Delayed { source: Source::Node(x), n: 0, .. } => Some(x),
            _ => None,
        }
    }

    fn is_multiplication(&self) -> bool {
        !matches!(self.operand, Operand::Const(_)) && !self.coeff.abs().is_one()
    }
}

/// A network of equations `x = sum_t c_t v_t`, each evaluated left to
/// right in the target format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationSystem {
    nodes: Vec<String>,
    inputs: Vec<String>,
    slots: Vec<ResetSlot>,
    equations: Vec<Vec<Term>>,
    outputs: Vec<usize>,
    order: Vec<usize>,
}

/// Exact transfer matrices of every node: `X = T_X I + D_X R`, and the
/// injection matrix `E` giving the response of the nodes to a stream added
/// to one equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealSolution {
    pub injection: RatFunMatrix,
    pub t: RatFunMatrix,
    pub d: RatFunMatrix,
}

impl EquationSystem {
    pub fn new(
        nodes: Vec<String>,
        inputs: Vec<String>,
        slots: Vec<ResetSlot>,
        equations: Vec<Vec<Term>>,
        outputs: Vec<usize>,
    ) -> Result<Self> {
        if equations.len() != nodes.len() {
            return Err(FilterError::DimensionMismatch(format!("{} equations for {} nodes", equations.len(), nodes.len())));
        }
        let bad = |what: String| Err(FilterError::DimensionMismatch(what));
        let check_source = |s: &Source| match *s {
            Source::Node(x) => x < nodes.len(),
            Source::Input(j) => j < inputs.len(),
        };
        for (x, eq) in equations.iter().enumerate() {
            for t in eq {
                let ok = match &t.operand {
                    Operand::Signal(s) => check_source(s),
                    Operand::Delayed { source, init, .. } => {
                        check_source(source) && init.is_none_or(|s| s < slots.len() && slots[s].kind == SlotKind::Reset)
                    }
                    Operand::Const(s) => *s < slots.len() && slots[*s].kind == SlotKind::Constant,
                };
                if !ok {
                    return bad(format!("bad operand in the equation of `{}`", nodes[x]));
                }
            }
        }
        if let Some(o) = outputs.iter().find(|&&o| o >= nodes.len()) {
            return bad(format!("output index {o} out of range"));
        }
        let order = topological_order(&nodes, &equations)?;
        Ok(EquationSystem { nodes, inputs, slots, equations, outputs, order })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn slots(&self) -> &[ResetSlot] {
        &self.slots
    }

    pub fn equations(&self) -> &[Vec<Term>] {
        &self.equations
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Evaluation order: every node after the nodes it reads without delay.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Solves `X = B X + A I + C R` exactly.
    pub fn ideal(&self) -> Result<IdealSolution> {
        let (n, m, r) = (self.nodes.len(), self.inputs.len(), self.slots.len());
        let mut b = RatFunMatrix::zeros(n, n);
        let mut a = RatFunMatrix::zeros(n, m);
        let mut c = RatFunMatrix::zeros(n, r);
        let step = RatFun::new(Poly::one(), Poly::from_ints(&[1, -1])).expect("causal");
        let bump = |mat: &mut RatFunMatrix, i: usize, j: usize, v: RatFun| -> Result<()> {
            let sum = mat.get(i, j).add(&v)?;
            mat.set(i, j, sum);
            Ok(())
        };
        for (x, eq) in self.equations.iter().enumerate() {
            for t in eq {
                match &t.operand {
                    Operand::Signal(s) | Operand::Delayed { source: s, n: 0, .. } => {
                        let v = RatFun::constant(t.coeff.clone());
                        match *s {
                            Source::Node(y) => bump(&mut b, x, y, v)?,
                            Source::Input(j) => bump(&mut a, x, j, v)?,
                        }
                    }
                    Operand::Delayed { source, n: k, init } => {
                        let v = RatFun::constant(t.coeff.clone()).shift(*k);
                        match *source {
                            Source::Node(y) => bump(&mut b, x, y, v)?,
                            Source::Input(j) => bump(&mut a, x, j, v)?,
                        }
                        if let Some(s) = init {
                            let ones = Poly::new(vec![t.coeff.clone(); *k]);
                            bump(&mut c, x, *s, RatFun::from_poly(ones))?;
                        }
                    }
                    Operand::Const(s) => bump(&mut c, x, *s, step.scale(&t.coeff))?,
                }
            }
        }
        let lhs = RatFunMatrix::identity(n).sub(&b)?;
        let rhs = RatFunMatrix::identity(n).hcat(&a)?.hcat(&c)?;
        let sol = solve_linear_system(&lhs, &rhs).map_err(|e| match e {
            crate::algebra::AlgebraError::Singular | crate::algebra::AlgebraError::NonCausalSystem => {
                FilterError::NonCausalLoop("the equations have no causal solution".into())
            }
            other => other.into(),
        })?;
        Ok(IdealSolution { injection: sol.columns(0..n), t: sol.columns(n..n + m), d: sol.columns(n + m..n + m + r) })
    }

    /// Abstract filter of the declared outputs, executed in `fmt`.
    ///
    /// Each equation creates a local error `L_x` with
    /// `|L_x| <= W_X (N(X) + N(Delta)) + W_I N(I) + W_R |R| + abs_x`, where the
    /// weights collect, per term, `|c| ((1+eps)^m_t - 1)` (`m_t` the roundings
    /// the term goes through: its product, a rounded stored constant, and the
    /// additions it takes part in). The node errors `Delta = E L` then obey the
    /// closed-loop inequality with `A = N1(E)` and `K1 = A W_X`.
    pub fn to_abstract(&self, fmt: &FloatFormat, cfg: &BoundConfig) -> Result<AbstractFilter> {
        let ideal = self.ideal()?;
        let (n, m, r) = (self.nodes.len(), self.inputs.len(), self.slots.len());
        let (t_rows, d_rows) = (ideal.t.select_rows(&self.outputs), ideal.d.select_rows(&self.outputs));
        if fmt.is_exact() {
            return AbstractFilter::ideal(t_rows, d_rows, self.slots.clone());
        }

        let mut w_x = NonnegMatrix::zeros(n, n);
        let mut w_i = NonnegMatrix::zeros(n, m);
        let mut w_r = NonnegMatrix::zeros(n, r);
        let mut abs = vec![0.0; n];
        let bump = |mat: &mut NonnegMatrix, i: usize, j: usize, v: f64| {
            let cur = mat.get(i, j);
            mat.set(i, j, add_up(cur, v));
        };
        for (x, eq) in self.equations.iter().enumerate() {
            let (errs, a) = equation_errors(eq, fmt);
            abs[x] = a;
            for (t, e) in eq.iter().zip(errs) {
                match &t.operand {
                    Operand::Signal(s) | Operand::Delayed { source: s, init: None, .. } => match *s {
                        Source::Node(y) => bump(&mut w_x, x, y, e),
                        Source::Input(j) => bump(&mut w_i, x, j, e),
                    },
                    Operand::Delayed { source, init: Some(s), .. } => {
                        match *source {
                            Source::Node(y) => bump(&mut w_x, x, y, e),
                            Source::Input(j) => bump(&mut w_i, x, j, e),
                        }
                        bump(&mut w_r, x, *s, e);
                    }
                    Operand::Const(s) => bump(&mut w_r, x, *s, e),
                }
            }
        }

        let a = l1_matrix(&ideal.injection, cfg);
        let y_t = w_x.mul(&l1_matrix(&ideal.t, cfg)).add(&w_i);
        let y_d = w_x.mul(&linf_matrix(&ideal.d, cfg)).add(&w_r);
        let y_a = NonnegMatrix::column(&abs)?;
        let mut out = closed_loop_error(&a, &w_x, &[&y_t, &y_d, &y_a])?.into_iter();
        let (et, ed, ea) = (out.next().expect("3"), out.next().expect("3"), out.next().expect("3"));
        let pick = |mat: &NonnegMatrix| {
            let mut o = NonnegMatrix::zeros(self.outputs.len(), mat.cols());
            for (k, &i) in self.outputs.iter().enumerate() {
                for j in 0..mat.cols() {
                    o.set(k, j, mat.get(i, j));
                }
            }
            o
        };
        AbstractFilter::from_parts(
            t_rows,
            d_rows,
            pick(&et),
            pick(&ed),
            self.outputs.iter().map(|&i| ea.get(i, 0)).collect(),
            self.slots.clone(),
        )
    }

    /// Executes the network for `inputs[t][j]`, with reset values `resets`
    /// (one per slot; constant slots are ignored). Returns the outputs.
    pub fn simulate<A: Arithmetic>(&self, arith: &A, inputs: &[Vec<A::Value>], resets: &[Rat]) -> Vec<Vec<Rat>> {
        assert_eq!(resets.len(), self.slots.len(), "one reset value per slot");
        let coefs: Vec<Vec<A::Coef>> =
            self.equations.iter().map(|eq| eq.iter().map(|t| arith.coef(&t.coeff)).collect()).collect();
        let consts: Vec<Vec<A::Value>> =
            self.equations.iter().map(|eq| eq.iter().map(|t| arith.value(&t.coeff)).collect()).collect();
        let init_values: Vec<A::Value> = resets.iter().map(|r| arith.value(r)).collect();
        let depth = self
            .equations
            .iter()
            .flatten()
            .map(|t| match t.operand {
                Operand::Delayed { n, .. } => n,
                _ => 0,
            })
            .max()
            .unwrap_or(0);
        let mut node_hist: Vec<VecDeque<A::Value>> = vec![VecDeque::new(); self.nodes.len()];
        let mut input_hist: Vec<VecDeque<A::Value>> = vec![VecDeque::new(); self.inputs.len()];
        let mut out = Vec::with_capacity(inputs.len());
        for (tick, x_in) in inputs.iter().enumerate() {
            assert_eq!(x_in.len(), self.inputs.len(), "simulation input arity");
            let mut now: Vec<Option<A::Value>> = vec![None; self.nodes.len()];
            for &x in &self.order {
                let mut acc: Option<A::Value> = None;
                for (k, t) in self.equations[x].iter().enumerate() {
                    let read = |s: &Source| -> A::Value {
                        match *s {
                            Source::Node(y) => now[y].clone().expect("topological order"),
                            Source::Input(j) => x_in[j].clone(),
                        }
                    };
                    let v = match &t.operand {
                        Operand::Signal(s) | Operand::Delayed { source: s, n: 0, .. } => read(s),
                        Operand::Delayed { source, n, init } => {
                            if tick < *n {
                                init.map_or_else(|| arith.zero(), |s| init_values[s].clone())
                            } else {
                                let hist = match *source {
                                    Source::Node(y) => &node_hist[y],
                                    Source::Input(j) => &input_hist[j],
                                };
                                hist[hist.len() - n].clone()
                            }
                        }
                        Operand::Const(_) => consts[x][k].clone(),
                    };
                    let term = if matches!(t.operand, Operand::Const(_)) || t.coeff.is_one() {
                        v
                    } else {
                        arith.scale(&coefs[x][k], &v)
                    };
                    acc = Some(match acc {
                        None => term,
                        Some(a) => arith.add(&a, &term),
                    });
                }
                now[x] = Some(acc.unwrap_or_else(|| arith.zero()));
            }
            out.push(self.outputs.iter().map(|&o| arith.to_rat(now[o].as_ref().expect("evaluated"))).collect());
            for (x, v) in now.into_iter().enumerate() {
                push_bounded(&mut node_hist[x], v.expect("evaluated"), depth);
            }
            for (j, v) in x_in.iter().enumerate() {
                push_bounded(&mut input_hist[j], v.clone(), depth);
            }
        }
        out
    }
}

fn push_bounded<T>(q: &mut VecDeque<T>, v: T, cap: usize) {
    if cap == 0 {
        return;
    }
    if q.len() == cap {
        q.pop_front();
    }
    q.push_back(v);
}

fn topological_order(nodes: &[String], equations: &[Vec<Term>]) -> Result<Vec<usize>> {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; nodes.len()];
    let mut order = Vec::with_capacity(nodes.len());
    fn dfs(
        x: usize,
        nodes: &[String],
        equations: &[Vec<Term>],
        state: &mut [u8],
        order: &mut Vec<usize>,
        path: &mut Vec<usize>,
    ) -> Result<()> {
        state[x] = 1;
        path.push(x);
        for t in &equations[x] {
            if let Some(y) = t.instant_node() {
                match state[y] {
                    0 => dfs(y, nodes, equations, state, order, path)?,
                    1 => {
                        let start = path.iter().position(|&p| p == y).expect("on path");
                        let mut cycle: Vec<&str> = path[start..].iter().map(|&p| nodes[p].as_str()).collect();
                        cycle.push(&nodes[y]);
                        return Err(FilterError::NonCausalLoop(cycle.join(" -> ")));
                    }
                    _ => {}
                }
            }
        }
        path.pop();
        state[x] = 2;
        order.push(x);
        Ok(())
    }
    for x in 0..nodes.len() {
        if state[x] == 0 {
            dfs(x, nodes, equations, &mut state, &mut order, &mut Vec::new())?;
        }
    }
    Ok(order)
}

/// Upper bound on `(1 + eps)^m - 1`: `m eps / (1 - m eps)`.
fn gamma(eps: f64, m: u32) -> f64 {
    if eps == 0.0 || m == 0 {
        return 0.0;
    }
    let me = mul_up(m as f64, eps);
    if me >= 0.5 {
        return sub_up(powi_up(add_up(1.0, eps), m), 1.0);
    }
    div_up(me, sub_down(1.0, me))
}

/// Per-term relative weights and the absolute error of one equation.
fn equation_errors(eq: &[Term], fmt: &FloatFormat) -> (Vec<f64>, f64) {
    let m = eq.len();
    let fixed = fmt.kind == FormatKind::FixedPoint;
    let eps = fmt.eps_rel;
    let grid = if fixed { rat_from_f64(fmt.delta) } else { None };
    let mut n_abs = 0u32;
    let errs = eq
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let adds = if m <= 1 { 0 } else if k == 0 { m - 1 } else { m - k } as u32;
            let mult = t.is_multiplication();
            let is_const = matches!(t.operand, Operand::Const(_));
            let stored_inexact = if fixed {
                is_const && grid.as_ref().is_some_and(|d| !(&t.coeff / d).is_integer())
            } else {
                (mult || is_const) && !fmt.represents(&t.coeff)
            };
            if mult {
                n_abs += 1;
            }
            let m_t = adds + mult as u32 + (stored_inexact && !fixed) as u32;
            let mag = Interval::from_rat(&t.coeff.abs()).hi();
            let rel = mul_up_nonneg(mag, gamma(eps, m_t));
            if stored_inexact {
                add_up(rel, mul_up(fmt.eps_abs, add_up(1.0, gamma(eps, m_t))))
            } else {
                rel
            }
        })
        .collect();
    if !fixed {
        n_abs += m.saturating_sub(1) as u32;
    }
    let abs = if n_abs == 0 { 0.0 } else { mul_up(mul_up(n_abs as f64, fmt.eps_abs), add_up(1.0, gamma(eps, n_abs))) };
    (errs, abs)
}
