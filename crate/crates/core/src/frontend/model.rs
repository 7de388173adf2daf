use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::{ParseError, ParseErrorKind, Pos};
use crate::algebra::Rat;
use crate::filter::sim::{Arithmetic, BlockSim};
use crate::filter::{
    quantize, AbstractFilter, AbstractOptions, Block, EquationSystem, FilterError, FloatFormat, Operand, ResetEnv, ResetSlot,
    SlotBinding, SlotKind, Source, Term,
};
use crate::numeric::Interval;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Equations(EquationSystem),
    Blocks(Block),
}

/// A validated network: every name resolved, causality checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub network: Network,
    pub kind: ModelKind,
    pub inputs: Vec<String>,
    /// `None`: unbounded input.
    pub input_bounds: Vec<Option<Rat>>,
    pub outputs: Vec<String>,
    pub format: Option<FloatFormat>,
    resets: Vec<(String, ResetSpec)>,
    groups: Vec<(String, Option<Rat>)>,
}

fn err(pos: Pos, kind: ParseErrorKind) -> ParseError {
    ParseError::new(pos, kind)
}

fn upper(b: &Option<Rat>) -> f64 {
    b.as_ref().map_or(f64::INFINITY, |b| Interval::from_rat(b).hi())
}

impl Model {
    pub fn from_network(net: &Network) -> Result<Model, ParseError> {
        // one namespace for declared names
        let mut declared: HashMap<String, &'static str> = HashMap::new();
        let mut declare = |n: &Named, what: &'static str| -> Result<(), ParseError> {
            if let Some(prev) = declared.insert(n.name.clone(), what) {
                let kind = if prev == "node" && what == "node" {
                    ParseErrorKind::MultipleAssignment(n.name.clone())
                } else {
                    ParseErrorKind::Invalid(format!("`{}` is declared as a {prev} and a {what}", n.name))
                };
                return Err(err(n.pos, kind));
            }
            Ok(())
        };
        for g in &net.groups {
            declare(&g.name, "group")?;
        }
        for i in &net.inputs {
            declare(&i.name, "input")?;
        }
        for r in &net.resets {
            declare(&r.name, "reset")?;
        }
        for b in &net.blocks {
            declare(&b.name, "block")?;
        }
        for e in &net.equations {
            declare(&e.name, "node")?;
        }
        let groups: Vec<(String, Option<Rat>)> = net.groups.iter().map(|g| (g.name.name.clone(), g.bound.clone())).collect();
        for r in &net.resets {
            if let ResetSpec::Shared { group, .. } = &r.spec {
                if !groups.iter().any(|(g, _)| *g == group.name) {
                    return Err(err(group.pos, ParseErrorKind::Undeclared(group.name.clone())));
                }
            }
        }
        let resets: Vec<(String, ResetSpec)> = net.resets.iter().map(|r| (r.name.name.clone(), r.spec.clone())).collect();
        let inputs: Vec<String> = net.inputs.iter().map(|i| i.name.name.clone()).collect();
        let input_bounds = net.inputs.iter().map(|i| i.bound.clone()).collect();

        let (kind, outputs) = match &net.system {
            Some(sys) => {
                if let Some(e) = net.equations.first() {
                    return Err(err(e.name.pos, ParseErrorKind::Invalid("a file holds either equations or a system, not both".into())));
                }
                let block = Self::blocks(net, sys)?;
                let (n_in, n_out) = block.arity().map_err(|e| err(Pos::default(), ParseErrorKind::Invalid(e.to_string())))?;
                if n_in != inputs.len() {
                    return Err(err(
                        Pos { line: 1, col: 1 },
                        ParseErrorKind::Invalid(format!("the system has {n_in} inputs but {} are declared", inputs.len())),
                    ));
                }
                let outputs: Vec<String> = if net.outputs.is_empty() {
                    (0..n_out).map(|k| format!("out{k}")).collect()
                } else if net.outputs.len() == n_out {
                    net.outputs.iter().map(|o| o.name.clone()).collect()
                } else {
                    return Err(err(
                        net.outputs[0].pos,
                        ParseErrorKind::Invalid(format!("the system has {n_out} outputs but {} are declared", net.outputs.len())),
                    ));
                };
                (ModelKind::Blocks(block), outputs)
            }
            None => {
                if net.outputs.is_empty() {
                    return Err(err(Pos { line: 1, col: 1 }, ParseErrorKind::NoOutputs));
                }
                let sys = Self::equations(net, &inputs, &resets)?;
                (ModelKind::Equations(sys), net.outputs.iter().map(|o| o.name.clone()).collect())
            }
        };
        Ok(Model { network: net.clone(), kind, inputs, input_bounds, outputs, format: net.format, resets, groups })
    }

    fn equations(net: &Network, inputs: &[String], resets: &[(String, ResetSpec)]) -> Result<EquationSystem, ParseError> {
        let nodes: Vec<String> = net.equations.iter().map(|e| e.name.name.clone()).collect();
        let node_ix: HashMap<&str, usize> = nodes.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
        let input_ix: HashMap<&str, usize> = inputs.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
        let reset_ix: HashMap<&str, usize> = resets.iter().enumerate().map(|(k, (n, _))| (n.as_str(), k)).collect();
        let mut slots: Vec<ResetSlot> = resets.iter().map(|(n, _)| ResetSlot::reset(n.clone())).collect();

        let source = |n: &Named| -> Result<Source, ParseError> {
            if let Some(&x) = node_ix.get(n.name.as_str()) {
                Ok(Source::Node(x))
            } else if let Some(&j) = input_ix.get(n.name.as_str()) {
                Ok(Source::Input(j))
            } else {
                Err(err(n.pos, ParseErrorKind::Undeclared(n.name.clone())))
            }
        };
        let mut equations = Vec::with_capacity(nodes.len());
        for e in &net.equations {
            let mut terms = Vec::with_capacity(e.terms.len());
            for t in &e.terms {
                let operand = match &t.reference {
                    Ref::Name(n) => Operand::Signal(source(n)?),
                    Ref::Delay { name, n, init } => {
                        let init = match init {
                            None => None,
                            Some(i) => Some(
                                *reset_ix.get(i.name.as_str()).ok_or_else(|| err(i.pos, ParseErrorKind::Undeclared(i.name.clone())))?,
                            ),
                        };
                        Operand::Delayed { source: source(name)?, n: *n, init }
                    }
                    Ref::Const => {
                        slots.push(ResetSlot::constant(format!("const#{}", slots.len() - resets.len() + 1)));
                        Operand::Const(slots.len() - 1)
                    }
                };
                terms.push(Term::new(t.coeff.clone(), operand));
            }
            equations.push(terms);
        }
        let mut outputs = Vec::with_capacity(net.outputs.len());
        for o in &net.outputs {
            match node_ix.get(o.name.as_str()) {
                Some(&x) => outputs.push(x),
                None if input_ix.contains_key(o.name.as_str()) => {
                    return Err(err(o.pos, ParseErrorKind::Invalid(format!("output `{}` is an input; assign it to a node", o.name))))
                }
                None => return Err(err(o.pos, ParseErrorKind::Undeclared(o.name.clone()))),
            }
        }
        EquationSystem::new(nodes, inputs.to_vec(), slots, equations, outputs).map_err(|e| match e {
            FilterError::NonCausalLoop(cycle) => {
                let first = cycle.split(" -> ").next().unwrap_or_default();
                let pos = net.equations.iter().find(|e| e.name.name == first).map_or(Pos::default(), |e| e.name.pos);
                err(pos, ParseErrorKind::NonCausal(cycle))
            }
            other => err(Pos::default(), ParseErrorKind::Invalid(other.to_string())),
        })
    }

    fn blocks(net: &Network, sys: &BlockExpr) -> Result<Block, ParseError> {
        let reset_names: HashSet<&str> = net.resets.iter().map(|r| r.name.name.as_str()).collect();
        let mut defined: HashMap<String, Block> = HashMap::new();
        fn lower(e: &BlockExpr, defined: &HashMap<String, Block>, resets: &HashSet<&str>) -> Result<Block, ParseError> {
            let list = |bs: &[BlockExpr]| bs.iter().map(|b| lower(b, defined, resets)).collect::<Result<Vec<_>, _>>();
            Ok(match e {
                BlockExpr::Plus => Block::Plus,
                BlockExpr::Scale(k) => Block::Scale(k.clone()),
                BlockExpr::Delay(n) => Block::Delay(*n),
                BlockExpr::DelayInit(l) => {
                    if !resets.contains(l.name.as_str()) {
                        return Err(err(l.pos, ParseErrorKind::Undeclared(l.name.clone())));
                    }
                    Block::DelayInit(l.name.clone())
                }
                BlockExpr::Split(k) => Block::Split(*k),
                BlockExpr::Const(c) => Block::Const(c.clone()),
                BlockExpr::Tf2(a, b) => Block::tf2(a.clone(), b.clone()),
                BlockExpr::Serial(bs) => Block::Serial(list(bs)?),
                BlockExpr::Parallel(bs) => Block::Parallel(list(bs)?),
                BlockExpr::Feedback(b, n) => Block::Feedback(Box::new(lower(b, defined, resets)?), *n),
                BlockExpr::Name(n) => {
                    defined.get(&n.name).cloned().ok_or_else(|| err(n.pos, ParseErrorKind::Undeclared(n.name.clone())))?
                }
            })
        }
        for d in &net.blocks {
            let b = lower(&d.expr, &defined, &reset_names)?;
            b.arity().map_err(|e| err(d.name.pos, ParseErrorKind::Invalid(e.to_string())))?;
            defined.insert(d.name.name.clone(), b);
        }
        let b = lower(sys, &defined, &reset_names)?;
        b.arity().map_err(|e| err(Pos::default(), ParseErrorKind::Invalid(e.to_string())))?;
        Ok(b)
    }

    pub fn input_bounds_upper(&self) -> Vec<f64> {
        self.input_bounds.iter().map(upper).collect()
    }

    /// Abstract filter of the outputs in `fmt`.
    pub fn abstract_filter(&self, fmt: &FloatFormat, opts: &AbstractOptions) -> Result<AbstractFilter, FilterError> {
        match &self.kind {
            ModelKind::Equations(sys) => {
                let f = sys.to_abstract(fmt, &opts.bounds)?;
                Ok(match opts.quantize_bits {
                    Some(bits) => quantize(&f, bits, &opts.bounds),
                    None => f,
                })
            }
            ModelKind::Blocks(b) => b.to_abstract(fmt, opts),
        }
    }

    /// What is known about the value of each slot. A free reset used by
    /// several slots (block form) becomes an implicit shared group.
    pub fn reset_env(&self, slots: &[ResetSlot]) -> ResetEnv {
        let mut groups: Vec<f64> = self.groups.iter().map(|(_, b)| upper(b)).collect();
        let mut implicit: HashMap<&str, usize> = HashMap::new();
        let mut uses: HashMap<&str, usize> = HashMap::new();
        for s in slots {
            *uses.entry(s.label.as_str()).or_default() += 1;
        }
        let bindings = slots
            .iter()
            .map(|s| {
                if s.kind == SlotKind::Constant {
                    return SlotBinding::Unit;
                }
                match self.resets.iter().find(|(n, _)| *n == s.label).map(|(_, spec)| spec) {
                    Some(ResetSpec::Shared { group, coeff }) => SlotBinding::Shared {
                        group: self.groups.iter().position(|(g, _)| *g == group.name).expect("validated"),
                        coeff: coeff.clone(),
                    },
                    Some(ResetSpec::Free(b)) if uses[s.label.as_str()] > 1 => {
                        let g = *implicit.entry(s.label.as_str()).or_insert_with(|| {
                            groups.push(upper(b));
                            groups.len() - 1
                        });
                        SlotBinding::Shared { group: g, coeff: Rat::from_integer(1.into()) }
                    }
                    Some(ResetSpec::Free(b)) => SlotBinding::Free(upper(b)),
                    None => SlotBinding::Free(f64::INFINITY),
                }
            })
            .collect();
        ResetEnv { bindings, groups }
    }

    pub fn has_groups(&self) -> bool {
        !self.groups.is_empty()
    }

    pub fn reset_decls(&self) -> &[(String, ResetSpec)] {
        &self.resets
    }

    pub fn group_decls(&self) -> &[(String, Option<Rat>)] {
        &self.groups
    }

    /// Runs the network; `resets` maps reset names to their values (missing
    /// ones are 0).
    pub fn simulate<A: Arithmetic>(&self, arith: &A, inputs: &[Vec<A::Value>], resets: &HashMap<String, Rat>) -> Vec<Vec<Rat>> {
        match &self.kind {
            ModelKind::Equations(sys) => {
                let values: Vec<Rat> = sys
                    .slots()
                    .iter()
                    .map(|s| resets.get(&s.label).cloned().unwrap_or_else(|| Rat::from_integer(0.into())))
                    .collect();
                sys.simulate(arith, inputs, &values)
            }
            ModelKind::Blocks(b) => BlockSim::new(arith, b, resets).expect("validated block").run(inputs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::*;

    #[test]
    fn tf2_recurrence_has_four_resets() {
        let src = "input i <= 1;\noutput o;\nreset i1; reset i2; reset o1; reset o2;\n\
                   y = 1/2 i + 1/3 delay(i, 1, i1) + 1/4 delay(i, 2, i2);\n\
                   o = y + 3/2 delay(o, 1, o1) - 7/10 delay(o, 2, o2);";
        let m = parse(src).unwrap();
        let ModelKind::Equations(sys) = &m.kind else { panic!() };
        assert_eq!((sys.inputs().len(), sys.slots().len(), sys.outputs().len()), (1, 4, 1));
    }

    #[test]
    fn block_form() {
        let src = "input u <= 1;\nreset r <= 2;\nblock s = tf2(1/2, 1/3, 1/4; 3/2, -7/10);\nsystem serial(s, parallel(delay_init(r)), s);";
        let m = parse(src).unwrap();
        assert_eq!(m.outputs, vec!["out0".to_string()]);
        let f = m.abstract_filter(&FloatFormat::ieee64(), &AbstractOptions::default()).unwrap();
        assert_eq!(f.n_resets(), 1);
        let env = m.reset_env(f.slots());
        assert_eq!(env.bindings, vec![SlotBinding::Free(2.0)]);
        assert!(parse("input u;\nsystem plus;").is_err());
        assert!(parse("input u; input v;\nsystem serial(plus, delay_init(q));").is_err());
    }
}
