//! Text formats for filter networks, the analysis driver and its reports.
//!
//! A network file is either a system of equations (`x = 1/2 e + delay(x, 1, r);`)
//! or a block expression (`system serial(tf2(...), tf2(...));`), plus
//! declarations of inputs, outputs, reset values and the number format.

mod ast;
mod check;
mod lexer;
mod model;
mod parser;
mod report;

pub use ast::{AstTerm, BlockDecl, BlockExpr, Equation, GroupDecl, InputDecl, Named, Network, Ref, ResetDecl, ResetSpec};
pub use check::{check, CheckOptions, CheckOutcome, Violation};
pub use model::{Model, ModelKind};
pub use parser::parse_syntax;
pub use report::{analyze, hex_float, AnalyzeOptions, KernelReport, Num, OutputReport, Report, RootReport};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("`{0}` is assigned more than once")]
    MultipleAssignment(String),
    #[error("non-causal: delay-free cycle {0}")]
    NonCausal(String),
    #[error("undeclared name `{0}`")]
    Undeclared(String),
    #[error("no outputs declared")]
    NoOutputs,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{}:{}: {kind}", pos.line, pos.col)]
pub struct ParseError {
    pub pos: Pos,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(pos: Pos, kind: ParseErrorKind) -> Self {
        ParseError { pos, kind }
    }
}

/// Parses and validates a network file.
pub fn parse(src: &str) -> Result<Model, ParseError> {
    Model::from_network(&parse_syntax(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_has_no_outputs() {
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::NoOutputs);
        assert_eq!(parse("# nothing\n").unwrap_err().kind, ParseErrorKind::NoOutputs);
    }

    #[test]
    fn self_reference_without_delay_is_non_causal() {
        let e = parse("input u;\noutput x;\nx = u + 1/2 x;").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NonCausal(_)), "{e}");
        assert_eq!(e.pos.line, 3);
    }

    #[test]
    fn diagnostics() {
        let e = parse("input u;\noutput x;\nx = u;\nx = 2 u;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MultipleAssignment("x".into()));
        assert_eq!((e.pos.line, e.pos.col), (4, 1));
        let e = parse("input u;\noutput x;\nx = u + y;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared("y".into()));
        assert_eq!((e.pos.line, e.pos.col), (3, 9));
        let e = parse("input u;\noutput x;\nx = delay(u, 1, r);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared("r".into()));
        let e = parse("input u;\noutput y;\nx = u;").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Undeclared("y".into()));
    }
}
