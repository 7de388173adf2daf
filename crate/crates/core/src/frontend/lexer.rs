use super::{ParseError, ParseErrorKind, Pos};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// Unsigned numeric literal, kept as written.
    Number(String),
    Sym(char),
    /// `<=`
    Le,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

impl Token {
    pub fn text(&self) -> String {
        match &self.tok {
            Tok::Ident(s) | Tok::Number(s) => s.clone(),
            Tok::Sym(c) => c.to_string(),
            Tok::Le => "<=".into(),
            Tok::Eof => "end of file".into(),
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            out.push(Token { tok: Tok::Ident(s), pos });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                s.push(chars[i]);
                { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
            }
            // exponent only when digits follow, so `2e` stays `2` times `e`
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    while i < j {
                        s.push(chars[i]);
                        { let ch = chars[i]; advance(&mut i, &mut line, &mut col, ch); }
                    }
                }
            }
            if s.matches('.').count() > 1 {
                return Err(ParseError::new(pos, ParseErrorKind::Syntax(format!("malformed number `{s}`"))));
            }
            out.push(Token { tok: Tok::Number(s), pos });
            continue;
        }
        if c == '<' && chars.get(i + 1) == Some(&'=') {
            advance(&mut i, &mut line, &mut col, c);
            advance(&mut i, &mut line, &mut col, '=');
            out.push(Token { tok: Tok::Le, pos });
            continue;
        }
        if "+-*/(),;=:^".contains(c) {
            advance(&mut i, &mut line, &mut col, c);
            out.push(Token { tok: Tok::Sym(c), pos });
            continue;
        }
        return Err(ParseError::new(pos, ParseErrorKind::Syntax(format!("unexpected character `{c}`"))));
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_juxtaposition() {
        let toks: Vec<Tok> = tokenize("p = 0.3e - 1e-3 x; # c\n// d").unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(
            toks,
            vec![
                Tok::Ident("p".into()),
                Tok::Sym('='),
                Tok::Number("0.3".into()),
                Tok::Ident("e".into()),
                Tok::Sym('-'),
                Tok::Number("1e-3".into()),
                Tok::Ident("x".into()),
                Tok::Sym(';'),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn positions() {
        let toks = tokenize("a\n  <= b $").unwrap_err();
        assert_eq!((toks.pos.line, toks.pos.col), (2, 8));
        let toks = tokenize("a\n  <= b").unwrap();
        assert_eq!((toks[1].pos.line, toks[1].pos.col), (2, 3));
    }
}
