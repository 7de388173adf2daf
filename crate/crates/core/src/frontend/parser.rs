use num_traits::{One, Zero};

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind, Pos};
use crate::algebra::{parse_rat, Rat};
use crate::filter::FloatFormat;

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;

fn syntax(pos: Pos, msg: impl Into<String>) -> ParseError {
    ParseError::new(pos, ParseErrorKind::Syntax(msg.into()))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_sym(&self, c: char) -> bool {
        self.peek().tok == Tok::Sym(c)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.is_sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> PResult<()> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            let t = self.peek();
            Err(syntax(t.pos, format!("expected `{c}`, found `{}`", t.text())))
        }
    }

    fn ident(&mut self) -> PResult<Named> {
        let t = self.next();
        match t.tok {
            Tok::Ident(name) => Ok(Named { name, pos: t.pos }),
            _ => Err(syntax(t.pos, format!("expected a name, found `{}`", t.text()))),
        }
    }

    fn nat(&mut self) -> PResult<usize> {
        let t = self.next();
        match &t.tok {
            Tok::Number(s) => s.parse().map_err(|_| syntax(t.pos, format!("expected a natural number, found `{s}`"))),
            _ => Err(syntax(t.pos, format!("expected a natural number, found `{}`", t.text()))),
        }
    }

    fn starts_rational(&self) -> bool {
        matches!(self.peek().tok, Tok::Number(_)) || (self.is_sym('-') && matches!(self.peek_at(1), Tok::Number(_)))
    }

    /// `[-] number [/ number]`
    fn rational(&mut self) -> PResult<Rat> {
        let neg = self.eat_sym('-');
        let t = self.next();
        let Tok::Number(n) = &t.tok else {
            return Err(syntax(t.pos, format!("expected a number, found `{}`", t.text())));
        };
        let mut text = n.clone();
        if self.is_sym('/') && matches!(self.peek_at(1), Tok::Number(_)) {
            self.next();
            text.push('/');
            text.push_str(&self.next().text());
        }
        let r = parse_rat(&text).map_err(|e| syntax(t.pos, e.to_string()))?;
        Ok(if neg { -r } else { r })
    }

    fn bound(&mut self) -> PResult<Option<Rat>> {
        if self.peek().tok == Tok::Le {
            self.next();
            let pos = self.peek().pos;
            let b = self.rational()?;
            if b < Rat::zero() {
                return Err(syntax(pos, "bounds must be nonnegative"));
            }
            Ok(Some(b))
        } else {
            Ok(None)
        }
    }

    fn end(&mut self) -> PResult<()> {
        self.expect_sym(';')
    }

    fn network(&mut self) -> PResult<Network> {
        let mut net = Network::default();
        while self.peek().tok != Tok::Eof {
            let head = self.peek().clone();
            let keyword = match (&head.tok, self.peek_at(1)) {
                (Tok::Ident(k), Tok::Ident(_)) => Some(k.clone()),
                (Tok::Ident(k), _) if k == "format" || k == "system" => Some(k.clone()),
                _ => None,
            };
            match keyword.as_deref() {
                Some("input") => {
                    self.next();
                    let name = self.ident()?;
                    let bound = self.bound()?;
                    net.inputs.push(InputDecl { name, bound });
                }
                Some("output") => {
                    self.next();
                    net.outputs.push(self.ident()?);
                }
                Some("group") => {
                    self.next();
                    let name = self.ident()?;
                    let bound = self.bound()?;
                    net.groups.push(GroupDecl { name, bound });
                }
                Some("reset") => {
                    self.next();
                    let name = self.ident()?;
                    let spec = if self.eat_sym('=') {
                        let coeff = if self.starts_rational() {
                            let c = self.rational()?;
                            self.eat_sym('*');
                            c
                        } else if self.eat_sym('-') {
                            -Rat::one()
                        } else {
                            Rat::one()
                        };
                        ResetSpec::Shared { group: self.ident()?, coeff }
                    } else {
                        ResetSpec::Free(self.bound()?)
                    };
                    net.resets.push(ResetDecl { name, spec });
                }
                Some("format") => {
                    self.next();
                    let mut text = String::new();
                    let pos = self.peek().pos;
                    while !self.is_sym(';') && self.peek().tok != Tok::Eof {
                        text.push_str(&self.next().text());
                    }
                    if net.format.is_some() {
                        return Err(syntax(head.pos, "format declared twice"));
                    }
                    net.format = Some(text.parse::<FloatFormat>().map_err(|e| syntax(pos, e.to_string()))?);
                }
                Some("block") => {
                    self.next();
                    let name = self.ident()?;
                    self.expect_sym('=')?;
                    let expr = self.block_expr()?;
                    net.blocks.push(BlockDecl { name, expr });
                }
                Some("system") => {
                    self.next();
                    if net.system.is_some() {
                        return Err(syntax(head.pos, "system declared twice"));
                    }
                    net.system = Some(self.block_expr()?);
                }
                Some(other) => return Err(syntax(head.pos, format!("unknown declaration `{other}`"))),
                None => {
                    let name = self.ident()?;
                    self.expect_sym('=')?;
                    let terms = self.linear_expr()?;
                    net.equations.push(Equation { name, terms });
                }
            }
            self.end()?;
        }
        Ok(net)
    }

    fn linear_expr(&mut self) -> PResult<Vec<AstTerm>> {
        let mut terms = Vec::new();
        let mut sign = if self.eat_sym('-') { -Rat::one() } else { Rat::one() };
        loop {
            let mut t = self.term()?;
            t.coeff *= &sign;
            if !(t.reference == Ref::Const && t.coeff.is_zero()) {
                terms.push(t);
            }
            sign = if self.eat_sym('+') {
                Rat::one()
            } else if self.eat_sym('-') {
                -Rat::one()
            } else {
                break;
            };
        }
        Ok(terms)
    }

    /// `rat | rat ['*'] ref | ref [('*' | '/') rat]`
    fn term(&mut self) -> PResult<AstTerm> {
        if matches!(self.peek().tok, Tok::Number(_)) {
            let c = self.rational()?;
            let explicit = self.eat_sym('*');
            if explicit || matches!(self.peek().tok, Tok::Ident(_)) {
                let (k, reference) = self.reference()?;
                return Ok(AstTerm { coeff: c * k, reference });
            }
            return Ok(AstTerm { coeff: c, reference: Ref::Const });
        }
        let (mut coeff, reference) = self.reference()?;
        if self.eat_sym('*') {
            coeff *= self.rational()?;
        } else if self.is_sym('/') {
            let pos = self.next().pos;
            let d = self.rational()?;
            if d.is_zero() {
                return Err(syntax(pos, "division by zero"));
            }
            coeff /= d;
        }
        Ok(AstTerm { coeff, reference })
    }

    /// A reference and the constant factor it carries (`const(c)`).
    fn reference(&mut self) -> PResult<(Rat, Ref)> {
        let name = self.ident()?;
        match name.name.as_str() {
            "delay" if self.is_sym('(') => {
                self.next();
                let source = self.ident()?;
                self.expect_sym(',')?;
                let n = self.nat()?;
                let init = if self.eat_sym(',') { Some(self.ident()?) } else { None };
                self.expect_sym(')')?;
                Ok((Rat::one(), Ref::Delay { name: source, n, init }))
            }
            "const" if self.is_sym('(') => {
                self.next();
                let c = self.rational()?;
                self.expect_sym(')')?;
                Ok((c, Ref::Const))
            }
            _ => Ok((Rat::one(), Ref::Name(name))),
        }
    }

    fn block_list(&mut self) -> PResult<Vec<BlockExpr>> {
        self.expect_sym('(')?;
        let mut out = vec![self.block_expr()?];
        while self.eat_sym(',') {
            out.push(self.block_expr()?);
        }
        self.expect_sym(')')?;
        Ok(out)
    }

    fn block_expr(&mut self) -> PResult<BlockExpr> {
        let name = self.ident()?;
        let pos = name.pos;
        let args = |p: &mut Parser, f: &mut dyn FnMut(&mut Parser) -> PResult<BlockExpr>| -> PResult<BlockExpr> {
            p.expect_sym('(')?;
            let b = f(p)?;
            p.expect_sym(')')?;
            Ok(b)
        };
        let has_args = self.is_sym('(');
        Ok(match name.name.as_str() {
            "plus" => BlockExpr::Plus,
            "scale" if has_args => args(self, &mut |p| Ok(BlockExpr::Scale(p.rational()?)))?,
            "delay" if has_args => args(self, &mut |p| Ok(BlockExpr::Delay(p.nat()?)))?,
            "delay_init" if has_args => args(self, &mut |p| Ok(BlockExpr::DelayInit(p.ident()?)))?,
            "split" if has_args => args(self, &mut |p| Ok(BlockExpr::Split(p.nat()?)))?,
            "const" if has_args => args(self, &mut |p| Ok(BlockExpr::Const(p.rational()?)))?,
            "tf2" if has_args => args(self, &mut |p| {
                let a0 = p.rational()?;
                p.expect_sym(',')?;
                let a1 = p.rational()?;
                p.expect_sym(',')?;
                let a2 = p.rational()?;
                p.expect_sym(';')?;
                let b1 = p.rational()?;
                p.expect_sym(',')?;
                let b2 = p.rational()?;
                Ok(BlockExpr::Tf2([a0, a1, a2], [b1, b2]))
            })?,
            "serial" if has_args => BlockExpr::Serial(self.block_list()?),
            "parallel" if has_args => BlockExpr::Parallel(self.block_list()?),
            "feedback" if has_args => args(self, &mut |p| {
                let inner = p.block_expr()?;
                p.expect_sym(',')?;
                Ok(BlockExpr::Feedback(Box::new(inner), p.nat()?))
            })?,
            "scale" | "delay" | "delay_init" | "split" | "const" | "tf2" | "serial" | "parallel" | "feedback" => {
                return Err(syntax(pos, format!("`{}` needs arguments", name.name)))
            }
            _ => BlockExpr::Name(name),
        })
    }
}

/// Parses the text of a network file (syntax only; see [`super::validate`]
/// for name resolution and causality).
pub fn parse_syntax(src: &str) -> Result<Network, ParseError> {
    let mut p = Parser { toks: tokenize(src)?, at: 0 };
    p.network()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn terms() {
        let net = parse_syntax("x = 1/2 e - 0.7 * delay(e0, 1, ie0) + p/8 + s*3 - 10 + 2 const(3);").unwrap();
        let t = &net.equations[0].terms;
        assert_eq!(t.len(), 6);
        assert_eq!(t[0].coeff, q(1, 2));
        assert_eq!(t[1].coeff, q(-7, 10));
        assert!(matches!(&t[1].reference, Ref::Delay { n: 1, init: Some(i), .. } if i.name == "ie0"));
        assert_eq!(t[2].coeff, q(1, 8));
        assert_eq!(t[3].coeff, q(3, 1));
        assert_eq!((t[4].coeff.clone(), t[4].reference.clone()), (q(-10, 1), Ref::Const));
        assert_eq!(t[5].coeff, q(6, 1));
    }

    #[test]
    fn declarations() {
        let src = "format fixed:2^-16:rne;\ninput e <= 400;\ngroup iota <= 400;\nreset a = 0.8 * iota;\nreset b = -iota;\nreset c <= 3;\noutput x;\nx = e;";
        let net = parse_syntax(src).unwrap();
        assert_eq!(net.format.unwrap().delta, 2f64.powi(-16));
        assert_eq!(net.inputs[0].bound, Some(q(400, 1)));
        assert_eq!(net.resets[0].spec, ResetSpec::Shared { group: Named::new("iota"), coeff: q(4, 5) });
        assert_eq!(net.resets[1].spec, ResetSpec::Shared { group: Named::new("iota"), coeff: q(-1, 1) });
        assert_eq!(net.resets[2].spec, ResetSpec::Free(Some(q(3, 1))));
    }

    #[test]
    fn blocks() {
        let net = parse_syntax("block s = tf2(1/2, 0, -1; 3/2, -7/10);\nsystem feedback(serial(parallel(delay(0), scale(-1/2)), plus), 1);").unwrap();
        assert!(matches!(net.blocks[0].expr, BlockExpr::Tf2(..)));
        assert_eq!(net.system.unwrap().to_string(), "feedback(serial(parallel(delay(0), scale(-1/2)), plus), 1)");
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_syntax("input e;\nx = 1/2 * ;").unwrap_err();
        assert_eq!((e.pos.line, e.pos.col), (2, 11));
        let e = parse_syntax("x = e").unwrap_err();
        assert!(e.to_string().contains("expected `;`"), "{e}");
        assert!(parse_syntax("frobnicate x;").is_err());
    }
}
