//! Reference executions of filters in concrete number formats.

use std::collections::{HashMap, VecDeque};
use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Block, FilterError, FloatFormat, FormatKind, Result};
use crate::algebra::{rat_from_f64, Rat};
use crate::numeric::Interval;

/// A number format as executed: constants are stored once, every sum and
/// product is rounded.
pub trait Arithmetic: Sync {
    type Value: Clone + Debug;
    type Coef: Clone + Debug;

    fn zero(&self) -> Self::Value;
    /// Stored multiplier.
    fn coef(&self, k: &Rat) -> Self::Coef;
    /// Stored value (constants, inputs, reset values).
    fn value(&self, x: &Rat) -> Self::Value;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn scale(&self, k: &Self::Coef, x: &Self::Value) -> Self::Value;
    fn to_rat(&self, v: &Self::Value) -> Rat;
    fn to_f64(&self, v: &Self::Value) -> f64;
}

/// Nearest binary64 to `x` (ties broken toward the even mantissa).
pub fn nearest_f64(x: &Rat) -> f64 {
    let iv = Interval::from_rat(x);
    if iv.is_point() {
        return iv.lo();
    }
    let (lo, hi) = (iv.lo(), iv.hi());
    if !lo.is_finite() || !hi.is_finite() {
        return if lo.is_finite() { lo } else { hi };
    }
    let d_lo = x - rat_from_f64(lo).expect("finite");
    let d_hi = rat_from_f64(hi).expect("finite") - x;
    match d_lo.cmp(&d_hi) {
        std::cmp::Ordering::Less => lo,
        std::cmp::Ordering::Greater => hi,
        std::cmp::Ordering::Equal if lo.to_bits() & 1 == 0 => lo,
        std::cmp::Ordering::Equal => hi,
    }
}

/// Nearest binary32 to `x`.
pub fn nearest_f32(x: &Rat) -> f32 {
    let guess = x.to_f32().unwrap_or(0.0);
    if !guess.is_finite() {
        return guess;
    }
    let step = |v: f32, up: bool| -> f32 {
        if v == 0.0 {
            let tiny = f32::from_bits(1);
            return if up { tiny } else { -tiny };
        }
        let bits = v.to_bits();
        let away = (v > 0.0) == up;
        f32::from_bits(if away { bits + 1 } else { bits - 1 })
    };
    let dist = |v: f32| (rat_from_f64(v as f64).expect("finite") - x).abs();
    let mut best = guess;
    for cand in [step(guess, false), step(guess, true)] {
        if cand.is_finite() {
            let (dc, db) = (dist(cand), dist(best));
            if dc < db || (dc == db && cand.to_bits() & 1 == 0) {
                best = cand;
            }
        }
    }
    best
}

pub struct F64Arith;

impl Arithmetic for F64Arith {
    type Value = f64;
    type Coef = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn coef(&self, k: &Rat) -> f64 {
        nearest_f64(k)
    }
    fn value(&self, x: &Rat) -> f64 {
        nearest_f64(x)
    }
    fn add(&self, a: &f64, b: &f64) -> f64 {
        a + b
    }
    fn scale(&self, k: &f64, x: &f64) -> f64 {
        k * x
    }
    fn to_rat(&self, v: &f64) -> Rat {
        rat_from_f64(*v).expect("finite simulation value")
    }
    fn to_f64(&self, v: &f64) -> f64 {
        *v
    }
}

pub struct F32Arith;

impl Arithmetic for F32Arith {
    type Value = f32;
    type Coef = f32;

    fn zero(&self) -> f32 {
        0.0
    }
    fn coef(&self, k: &Rat) -> f32 {
        nearest_f32(k)
    }
    fn value(&self, x: &Rat) -> f32 {
        nearest_f32(x)
    }
    fn add(&self, a: &f32, b: &f32) -> f32 {
        a + b
    }
    fn scale(&self, k: &f32, x: &f32) -> f32 {
        k * x
    }
    fn to_rat(&self, v: &f32) -> Rat {
        rat_from_f64(*v as f64).expect("finite simulation value")
    }
    fn to_f64(&self, v: &f32) -> f64 {
        *v as f64
    }
}

/// Exact rational arithmetic: the ideal filter.
pub struct ExactArith;

impl Arithmetic for ExactArith {
    type Value = Rat;
    type Coef = Rat;

    fn zero(&self) -> Rat {
        Rat::zero()
    }
    fn coef(&self, k: &Rat) -> Rat {
        k.clone()
    }
    fn value(&self, x: &Rat) -> Rat {
        x.clone()
    }
    fn add(&self, a: &Rat, b: &Rat) -> Rat {
        a + b
    }
    fn scale(&self, k: &Rat, x: &Rat) -> Rat {
        k * x
    }
    fn to_rat(&self, v: &Rat) -> Rat {
        v.clone()
    }
    fn to_f64(&self, v: &Rat) -> f64 {
        nearest_f64(v)
    }
}

/// Fixed point on the grid `delta Z`, values held as integer multiples of
/// `delta`; products are rounded to nearest (ties to even) or truncated
/// toward minus infinity.
pub struct FixedArith {
    pub delta: Rat,
    pub rne: bool,
}

impl FixedArith {
    pub fn new(delta: Rat, rne: bool) -> Self {
        assert!(delta.is_positive());
        FixedArith { delta, rne }
    }

    fn round(&self, x: &Rat) -> BigInt {
        let t = x / &self.delta;
        let fl = t.floor();
        if !self.rne {
            return fl.to_integer();
        }
        let frac = &t - &fl;
        let half = Rat::new(BigInt::one(), BigInt::from(2));
        let base = fl.to_integer();
        match frac.cmp(&half) {
            std::cmp::Ordering::Less => base,
            std::cmp::Ordering::Greater => base + 1,
            std::cmp::Ordering::Equal if base.is_even() => base,
            std::cmp::Ordering::Equal => base + 1,
        }
    }
}

impl Arithmetic for FixedArith {
    type Value = BigInt;
    type Coef = Rat;

    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn coef(&self, k: &Rat) -> Rat {
        k.clone()
    }
    fn value(&self, x: &Rat) -> BigInt {
        self.round(x)
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn scale(&self, k: &Rat, x: &BigInt) -> BigInt {
        let exact = k * Rat::from_integer(x.clone());
        if exact.is_integer() {
            return exact.to_integer();
        }
        self.round(&(exact * &self.delta))
    }
    fn to_rat(&self, v: &BigInt) -> Rat {
        Rat::from_integer(v.clone()) * &self.delta
    }
    fn to_f64(&self, v: &BigInt) -> f64 {
        nearest_f64(&self.to_rat(v))
    }
}

/// Runs `f` with the arithmetic matching `fmt`.
pub fn with_arithmetic<R>(fmt: &FloatFormat, f: impl ArithVisitor<Output = R>) -> Result<R> {
    match fmt.kind {
        FormatKind::Exact => Ok(f.visit(&ExactArith)),
        FormatKind::FixedPoint => {
            let delta = rat_from_f64(fmt.delta).ok_or_else(|| FilterError::BadFormat(fmt.to_string()))?;
            Ok(f.visit(&FixedArith::new(delta, fmt.rne)))
        }
        FormatKind::IeeeFloat if *fmt == FloatFormat::ieee64() => Ok(f.visit(&F64Arith)),
        FormatKind::IeeeFloat if *fmt == FloatFormat::ieee32() => Ok(f.visit(&F32Arith)),
        FormatKind::IeeeFloat => Err(FilterError::BadFormat(format!("no executable arithmetic for {fmt}"))),
    }
}

/// Generic callback for [`with_arithmetic`].
pub trait ArithVisitor {
    type Output;
    fn visit<A: Arithmetic>(self, arith: &A) -> Self::Output;
}

enum Node<A: Arithmetic> {
    Plus,
    Scale(A::Coef),
    Delay(VecDeque<A::Value>),
    Split(usize),
    Const(A::Value),
    Serial(Vec<Node<A>>),
    Parallel(Vec<(Node<A>, usize)>),
    Feedback(Box<Node<A>>, Vec<A::Value>),
}

/// Step-by-step execution of a block tree.
pub struct BlockSim<'a, A: Arithmetic> {
    arith: &'a A,
    root: Node<A>,
    n_inputs: usize,
}

impl<'a, A: Arithmetic> BlockSim<'a, A> {
    /// `resets` gives the initial content of every `delay_init`; missing
    /// labels start at 0.
    pub fn new(arith: &'a A, block: &Block, resets: &HashMap<String, Rat>) -> Result<Self> {
        let (n_inputs, _) = block.arity()?;
        Ok(BlockSim { arith, root: Self::build(arith, block, resets)?, n_inputs })
    }

    fn build(arith: &A, block: &Block, resets: &HashMap<String, Rat>) -> Result<Node<A>> {
        Ok(match block {
            Block::Plus => Node::Plus,
            Block::Scale(k) => Node::Scale(arith.coef(k)),
            Block::Delay(n) => Node::Delay(std::iter::repeat_n(arith.zero(), *n).collect()),
            Block::DelayInit(l) => Node::Delay(std::iter::once(resets.get(l).map_or_else(|| arith.zero(), |r| arith.value(r))).collect()),
            Block::Split(k) => Node::Split(*k),
            Block::Const(c) => Node::Const(arith.value(c)),
            Block::Serial(bs) => Node::Serial(bs.iter().map(|b| Self::build(arith, b, resets)).collect::<Result<_>>()?),
            Block::Parallel(bs) => Node::Parallel(
                bs.iter().map(|b| Ok((Self::build(arith, b, resets)?, b.arity()?.0))).collect::<Result<_>>()?,
            ),
            Block::Feedback(b, n) => Node::Feedback(Box::new(Self::build(arith, b, resets)?), vec![arith.zero(); *n]),
        })
    }

    pub fn step(&mut self, inputs: &[A::Value]) -> Vec<A::Value> {
        assert_eq!(inputs.len(), self.n_inputs, "simulation input arity");
        Self::step_node(self.arith, &mut self.root, inputs)
    }

    fn step_node(arith: &A, node: &mut Node<A>, x: &[A::Value]) -> Vec<A::Value> {
        match node {
            Node::Plus => vec![arith.add(&x[0], &x[1])],
            Node::Scale(k) => vec![arith.scale(k, &x[0])],
            Node::Delay(q) => match q.pop_front() {
                Some(out) => {
                    q.push_back(x[0].clone());
                    vec![out]
                }
                None => vec![x[0].clone()],
            },
            Node::Split(k) => vec![x[0].clone(); *k],
            Node::Const(c) => vec![c.clone()],
            Node::Serial(ns) => {
                let mut cur = x.to_vec();
                for n in ns.iter_mut() {
                    cur = Self::step_node(arith, n, &cur);
                }
                cur
            }
            Node::Parallel(ns) => {
                let mut out = Vec::new();
                let mut at = 0;
                for (n, arity) in ns.iter_mut() {
                    out.extend(Self::step_node(arith, n, &x[at..at + *arity]));
                    at += *arity;
                }
                out
            }
            Node::Feedback(inner, prev) => {
                let mut all = x.to_vec();
                all.extend(prev.iter().cloned());
                let out = Self::step_node(arith, inner, &all);
                *prev = out.clone();
                out
            }
        }
    }

    /// Runs over a whole input sequence (`inputs[t][j]`), returning the
    /// outputs as rationals.
    pub fn run(&mut self, inputs: &[Vec<A::Value>]) -> Vec<Vec<Rat>> {
        inputs.iter().map(|x| self.step(x).iter().map(|v| self.arith.to_rat(v)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Poly, RatFun};
    use crate::filter::AbstractOptions;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn nearest_rounding() {
        assert_eq!(nearest_f64(&q(1, 10)), 0.1);
        assert_eq!(nearest_f64(&q(1, 3)), 1.0 / 3.0);
        assert_eq!(nearest_f32(&q(1, 10)), 0.1f32);
        assert_eq!(nearest_f32(&q(-1, 3)), -1.0f32 / 3.0);
        assert_eq!(nearest_f32(&Rat::zero()), 0.0);
    }

    #[test]
    fn fixed_rounding() {
        let a = FixedArith::new(q(1, 4), true);
        assert_eq!(a.value(&q(3, 8)), BigInt::from(2)); // 1.5 -> 2 (even)
        assert_eq!(a.value(&q(1, 8)), BigInt::from(0)); // 0.5 -> 0
        let t = FixedArith::new(q(1, 4), false);
        assert_eq!(t.value(&q(-1, 8)), BigInt::from(-1));
        assert_eq!(t.scale(&q(1, 3), &BigInt::from(4)), BigInt::from(1));
    }

    #[test]
    fn exact_sim_matches_kernel() {
        let b = Block::tf2([q(1, 2), q(1, 3), q(1, 4)], [q(3, 2), q(-7, 10)]);
        let mut sim = BlockSim::new(&ExactArith, &b, &HashMap::new()).unwrap();
        let mut inputs = vec![vec![Rat::zero()]; 30];
        inputs[0][0] = Rat::one();
        let out = sim.run(&inputs);
        let f = b.to_abstract(&FloatFormat::exact(), &AbstractOptions::default()).unwrap();
        let kernel = f.t().get(0, 0).develop(29);
        for (k, c) in kernel.iter().enumerate() {
            assert_eq!(&out[k][0], c, "coefficient {k}");
        }
    }

    #[test]
    fn delay_init_and_const() {
        let b = Block::Parallel(vec![Block::DelayInit("r".into()), Block::Const(q(5, 1))]);
        let resets = HashMap::from([("r".to_string(), q(7, 1))]);
        let mut sim = BlockSim::new(&ExactArith, &b, &resets).unwrap();
        let out = sim.run(&[vec![q(1, 1)], vec![q(2, 1)]]);
        assert_eq!(out, vec![vec![q(7, 1), q(5, 1)], vec![q(1, 1), q(5, 1)]]);
        let _ = RatFun::from_poly(Poly::one());
    }
}
