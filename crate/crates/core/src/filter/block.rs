use std::fmt;

use num_traits::{One, Zero};

use super::{
    compose_feedback, compose_parallel, compose_serial, make_basic, make_constant_source, quantize, AbstractFilter, Basic,
    FilterError, FloatFormat, Result,
};
use crate::algebra::Rat;
use crate::bounds::BoundConfig;

/// A filter built from basic blocks with serial, parallel and feedback
/// combinators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Plus,
    Scale(Rat),
    Delay(usize),
    /// Unit delay whose initial content is the named reset value.
    DelayInit(String),
    Split(usize),
    /// Zero-input source of a constant stream.
    Const(Rat),
    Serial(Vec<Block>),
    Parallel(Vec<Block>),
    /// Feeds the outputs of the inner block back, one tick late, into its
    /// last `n` inputs.
    Feedback(Box<Block>, usize),
}

/// Options of the abstract interpretation of a block tree.
#[derive(Clone, Copy, Debug)]
pub struct AbstractOptions {
    pub bounds: BoundConfig,
    /// Coefficient size above which loop kernels are quantized.
    pub quantize_bits: Option<u64>,
}

impl Default for AbstractOptions {
    fn default() -> Self {
        AbstractOptions { bounds: BoundConfig::default(), quantize_bits: Some(super::DEFAULT_QUANTIZE_BITS) }
    }
}

impl Block {
    /// Second-order section `(a0 + a1 z + a2 z^2) / (1 - b1 z - b2 z^2)`,
    /// i.e. `y_k = a0 x_k + a1 x_{k-1} + a2 x_{k-2} + b1 y_{k-1} + b2 y_{k-2}`,
    /// summed left to right in that order.
    pub fn tf2(a: [Rat; 3], b: [Rat; 2]) -> Block {
        use Block::*;
        let [a0, a1, a2] = a;
        let [b1, b2] = b;
        let wire = || Delay(0);
        let feed_forward = Serial(vec![
            Split(3),
            Parallel(vec![Scale(a0), Serial(vec![Delay(1), Scale(a1)]), Serial(vec![Delay(2), Scale(a2)])]),
        ]);
        // the loop input is already y delayed by one tick
        let feed_back = Serial(vec![Split(2), Parallel(vec![Scale(b1), Serial(vec![Delay(1), Scale(b2)])])]);
        let sum5 = Serial(vec![
            Parallel(vec![Plus, wire(), wire(), wire()]),
            Parallel(vec![Plus, wire(), wire()]),
            Parallel(vec![Plus, wire()]),
            Plus,
        ]);
        Feedback(Box::new(Serial(vec![Parallel(vec![feed_forward, feed_back]), sum5])), 1)
    }

    /// Number of inputs and outputs.
    pub fn arity(&self) -> Result<(usize, usize)> {
        Ok(match self {
            Block::Plus => (2, 1),
            Block::Scale(_) | Block::Delay(_) | Block::DelayInit(_) => (1, 1),
            Block::Split(k) => (1, *k),
            Block::Const(_) => (0, 1),
            Block::Serial(bs) => {
                let first = bs.first().ok_or_else(|| FilterError::DimensionMismatch("empty serial composition".into()))?;
                let (n_in, mut n_out) = first.arity()?;
                for b in &bs[1..] {
                    let (i, o) = b.arity()?;
                    if i != n_out {
                        return Err(FilterError::DimensionMismatch(format!(
                            "serial composition feeds {n_out} signals into `{b}`, which takes {i}"
                        )));
                    }
                    n_out = o;
                }
                (n_in, n_out)
            }
            Block::Parallel(bs) => bs.iter().try_fold((0, 0), |(i, o), b| b.arity().map(|(bi, bo)| (i + bi, o + bo)))?,
            Block::Feedback(b, n) => {
                let (i, o) = b.arity()?;
                if o != *n || i < *n {
                    return Err(FilterError::DimensionMismatch(format!(
                        "feedback of {n} signals around `{b}` with {i} inputs and {o} outputs"
                    )));
                }
                (i - n, o)
            }
        })
    }

    /// Labels of the named resets, in slot order.
    pub fn reset_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |b| {
            if let Block::DelayInit(l) = b {
                out.push(l.clone());
            }
        });
        out
    }

    fn visit(&self, f: &mut impl FnMut(&Block)) {
        f(self);
        match self {
            Block::Serial(bs) | Block::Parallel(bs) => bs.iter().for_each(|b| b.visit(f)),
            Block::Feedback(b, _) => b.visit(f),
            _ => {}
        }
    }

    /// Abstract interpretation in the format `fmt`.
    pub fn to_abstract(&self, fmt: &FloatFormat, opts: &AbstractOptions) -> Result<AbstractFilter> {
        self.arity()?;
        let mut consts = 0;
        self.abstract_rec(fmt, opts, &mut consts)
    }

    fn abstract_rec(&self, fmt: &FloatFormat, opts: &AbstractOptions, consts: &mut usize) -> Result<AbstractFilter> {
        let cfg = &opts.bounds;
        Ok(match self {
            Block::Plus => make_basic(&Basic::Plus, fmt),
            Block::Scale(k) => make_basic(&Basic::Scale(k.clone()), fmt),
            Block::Delay(n) => make_basic(&Basic::Delay(*n), fmt),
            Block::DelayInit(l) => make_basic(&Basic::UnitDelayInit(l.clone()), fmt),
            Block::Split(k) => make_basic(&Basic::Split(*k), fmt),
            Block::Const(c) => {
                *consts += 1;
                make_constant_source(c, format!("const#{}", *consts), fmt)
            }
            Block::Serial(bs) => {
                let mut acc = bs[0].abstract_rec(fmt, opts, consts)?;
                for b in &bs[1..] {
                    acc = compose_serial(&acc, &b.abstract_rec(fmt, opts, consts)?, cfg)?;
                }
                acc
            }
            Block::Parallel(bs) => {
                let mut acc = AbstractFilter::empty();
                for b in bs {
                    acc = compose_parallel(&acc, &b.abstract_rec(fmt, opts, consts)?);
                }
                acc
            }
            Block::Feedback(b, n) => {
                let closed = compose_feedback(&b.abstract_rec(fmt, opts, consts)?, *n, cfg)?;
                match opts.quantize_bits {
                    Some(bits) => quantize(&closed, bits, cfg),
                    None => closed,
                }
            }
        })
    }
}

fn write_rat(f: &mut fmt::Formatter<'_>, r: &Rat) -> fmt::Result {
    if r.denom().is_one() || r.is_zero() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, name: &str, bs: &[Block]) -> fmt::Result {
    write!(f, "{name}(")?;
    for (k, b) in bs.iter().enumerate() {
        if k > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{b}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Plus => write!(f, "plus"),
            Block::Scale(k) => {
                write!(f, "scale(")?;
                write_rat(f, k)?;
                write!(f, ")")
            }
            Block::Delay(n) => write!(f, "delay({n})"),
            Block::DelayInit(l) => write!(f, "delay_init({l})"),
            Block::Split(k) => write!(f, "split({k})"),
            Block::Const(c) => {
                write!(f, "const(")?;
                write_rat(f, c)?;
                write!(f, ")")
            }
            Block::Serial(bs) => write_list(f, "serial", bs),
            Block::Parallel(bs) => write_list(f, "parallel", bs),
            Block::Feedback(b, n) => write!(f, "feedback({b}, {n})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Poly, RatFun};

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn tf2_transfer_function() {
        let b = Block::tf2([q(1, 2), q(1, 3), q(1, 4)], [q(3, 2), q(-7, 10)]);
        assert_eq!(b.arity().unwrap(), (1, 1));
        let f = b.to_abstract(&FloatFormat::exact(), &AbstractOptions::default()).unwrap();
        let expected = RatFun::new(
            Poly::new(vec![q(1, 2), q(1, 3), q(1, 4)]),
            Poly::new(vec![Rat::one(), q(-3, 2), q(7, 10)]),
        )
        .unwrap();
        assert_eq!(f.t().get(0, 0), &expected);
        assert!(f.eps_rel_t().is_zero());
    }

    #[test]
    fn tf2_float_error_is_small() {
        let b = Block::tf2([q(1, 2), q(1, 3), q(1, 4)], [q(3, 2), q(-7, 10)]);
        let f = b.to_abstract(&FloatFormat::ieee64(), &AbstractOptions::default()).unwrap();
        let e = f.eps_rel_t().get(0, 0);
        assert!(e > 0.0 && e < 1e-11, "{e}");
    }

    #[test]
    fn arity_errors() {
        assert!(Block::Serial(vec![Block::Split(2), Block::Scale(q(1, 1))]).arity().is_err());
        assert!(Block::Feedback(Box::new(Block::Plus), 2).arity().is_err());
        assert!(Block::Serial(vec![]).arity().is_err());
        assert_eq!(Block::Parallel(vec![Block::Plus, Block::Const(q(1, 1))]).arity().unwrap(), (2, 2));
    }

    #[test]
    fn display() {
        let b = Block::Feedback(Box::new(Block::Serial(vec![Block::Parallel(vec![Block::Delay(0), Block::Scale(q(-1, 2))]), Block::Plus])), 1);
        assert_eq!(b.to_string(), "feedback(serial(parallel(delay(0), scale(-1/2)), plus), 1)");
    }
}
