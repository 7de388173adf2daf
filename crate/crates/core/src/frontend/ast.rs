use std::fmt;

use num_traits::{One, Signed, Zero};

use super::Pos;
use crate::algebra::Rat;
use crate::filter::FloatFormat;

/// A parsed network file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Network {
    pub format: Option<FloatFormat>,
    pub groups: Vec<GroupDecl>,
    pub inputs: Vec<InputDecl>,
    pub resets: Vec<ResetDecl>,
    pub outputs: Vec<Named>,
    pub blocks: Vec<BlockDecl>,
    pub system: Option<BlockExpr>,
    pub equations: Vec<Equation>,
}

/// A name with the position where it appears (ignored by equality).
#[derive(Clone, Debug)]
pub struct Named {
    pub name: String,
    pub pos: Pos,
}

impl PartialEq for Named {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Named {
    pub fn new(name: impl Into<String>) -> Self {
        Named { name: name.into(), pos: Pos::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupDecl {
    pub name: Named,
    /// `None`: unbounded.
    pub bound: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputDecl {
    pub name: Named,
    pub bound: Option<Rat>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ResetSpec {
    /// Independent value, optionally bounded.
    Free(Option<Rat>),
    /// `coeff * group`.
    Shared { group: Named, coeff: Rat },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResetDecl {
    pub name: Named,
    pub spec: ResetSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Ref {
    Name(Named),
    Delay { name: Named, n: usize, init: Option<Named> },
    /// The constant 1; the term coefficient carries the value.
    Const,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AstTerm {
    pub coeff: Rat,
    pub reference: Ref,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equation {
    pub name: Named,
    pub terms: Vec<AstTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlockExpr {
    Plus,
    Scale(Rat),
    Delay(usize),
    DelayInit(Named),
    Split(usize),
    Const(Rat),
    Tf2([Rat; 3], [Rat; 2]),
    Serial(Vec<BlockExpr>),
    Parallel(Vec<BlockExpr>),
    Feedback(Box<BlockExpr>, usize),
    Name(Named),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockDecl {
    pub name: Named,
    pub expr: BlockExpr,
}

pub(crate) struct R<'a>(pub &'a Rat);

impl fmt::Display for R<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() || self.0.is_zero() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Name(n) => write!(f, "{}", n.name),
            Ref::Delay { name, n, init: None } => write!(f, "delay({}, {n})", name.name),
            Ref::Delay { name, n, init: Some(i) } => write!(f, "delay({}, {n}, {})", name.name, i.name),
            Ref::Const => write!(f, "const(1)"),
        }
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, t: &AstTerm, first: bool) -> fmt::Result {
    let neg = t.coeff.is_negative();
    let mag = t.coeff.abs();
    match (first, neg) {
        (true, true) => write!(f, "-")?,
        (false, true) => write!(f, " - ")?,
        (false, false) => write!(f, " + ")?,
        (true, false) => {}
    }
    match &t.reference {
        Ref::Const => write!(f, "{}", R(&mag)),
        r if mag.is_one() => write!(f, "{r}"),
        r => write!(f, "{} * {r}", R(&mag)),
    }
}

impl fmt::Display for BlockExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, bs: &[BlockExpr]| -> fmt::Result {
            write!(f, "{name}(")?;
            for (k, b) in bs.iter().enumerate() {
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{b}")?;
            }
            write!(f, ")")
        };
        match self {
            BlockExpr::Plus => write!(f, "plus"),
            BlockExpr::Scale(k) => write!(f, "scale({})", R(k)),
            BlockExpr::Delay(n) => write!(f, "delay({n})"),
            BlockExpr::DelayInit(l) => write!(f, "delay_init({})", l.name),
            BlockExpr::Split(k) => write!(f, "split({k})"),
            BlockExpr::Const(c) => write!(f, "const({})", R(c)),
            BlockExpr::Tf2(a, b) => {
                write!(f, "tf2({}, {}, {}; {}, {})", R(&a[0]), R(&a[1]), R(&a[2]), R(&b[0]), R(&b[1]))
            }
            BlockExpr::Serial(bs) => list(f, "serial", bs),
            BlockExpr::Parallel(bs) => list(f, "parallel", bs),
            BlockExpr::Feedback(b, n) => write!(f, "feedback({b}, {n})"),
            BlockExpr::Name(n) => write!(f, "{}", n.name),
        }
    }
}

/// Canonical text: declarations grouped by kind, then blocks, then
/// equations.
impl fmt::Display for Network {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(fmt_) = &self.format {
            writeln!(f, "format {fmt_};")?;
        }
        let bound = |b: &Option<Rat>| b.as_ref().map(|b| format!(" <= {}", R(b))).unwrap_or_default();
        for g in &self.groups {
            writeln!(f, "group {}{};", g.name.name, bound(&g.bound))?;
        }
        for i in &self.inputs {
            writeln!(f, "input {}{};", i.name.name, bound(&i.bound))?;
        }
        for r in &self.resets {
            match &r.spec {
                ResetSpec::Free(b) => writeln!(f, "reset {}{};", r.name.name, bound(b))?,
                ResetSpec::Shared { group, coeff } if coeff.is_one() => writeln!(f, "reset {} = {};", r.name.name, group.name)?,
                ResetSpec::Shared { group, coeff } => {
                    let sign = if coeff.is_negative() { "-" } else { "" };
                    writeln!(f, "reset {} = {sign}{} * {};", r.name.name, R(&coeff.abs()), group.name)?
                }
            }
        }
        for o in &self.outputs {
            writeln!(f, "output {};", o.name)?;
        }
        for b in &self.blocks {
            writeln!(f, "block {} = {};", b.name.name, b.expr)?;
        }
        if let Some(s) = &self.system {
            writeln!(f, "system {s};")?;
        }
        for e in &self.equations {
            write!(f, "{} = ", e.name.name)?;
            if e.terms.is_empty() {
                write!(f, "0")?;
            }
            for (k, t) in e.terms.iter().enumerate() {
                write_term(f, t, k == 0)?;
            }
            writeln!(f, ";")?;
        }
        Ok(())
    }
}
