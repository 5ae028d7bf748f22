//! Recursive-descent parser for the polynomial text grammar:
//!
//! ```text
//! expr   := ('+'|'-')? term (('+'|'-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number ('/' number)? | ident | '(' expr ')'
//! ```
//!
//! Whitespace is insignificant. A leading sign is accepted at the start of
//! an expression, so `(-0.5 + t)*x` parses.

use super::{PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    LParen,
    RParen,
}

fn syntax(pos: usize, msg: impl Into<String>) -> PolyError {
    PolyError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, PolyError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '^' => Tok::Caret,
            '/' => Tok::Slash,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part: e[+-]digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            _ => return Err(syntax(start, format!("unexpected character `{c}`"))),
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut negate = false;
        match self.peek() {
            Some(Tok::Minus) => {
                negate = true;
                self.bump();
            }
            Some(Tok::Plus) => {
                self.bump();
            }
            _ => {}
        }
        let first = self.term()?;
        let mut acc = if negate { -first } else { first };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.factor()?;
        while let Some(Tok::Star) = self.peek() {
            self.bump();
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.base()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let at = self.offset();
            match self.bump() {
                Some(Tok::Num(k)) if k >= 0.0 && k.fract() == 0.0 && k <= u32::MAX as f64 => {
                    Ok(base.pow(k as u32))
                }
                _ => Err(syntax(at, "exponent must be a nonnegative integer")),
            }
        } else {
            Ok(base)
        }
    }

    fn base(&mut self) -> Result<Polynomial, PolyError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => {
                let mut value = v;
                if let Some(Tok::Slash) = self.peek() {
                    self.bump();
                    let at_den = self.offset();
                    match self.bump() {
                        Some(Tok::Num(d)) if d != 0.0 => value /= d,
                        Some(Tok::Num(_)) => return Err(syntax(at_den, "division by zero")),
                        _ => {
                            return Err(syntax(
                                at_den,
                                "only numeric literals may follow `/`",
                            ))
                        }
                    }
                }
                Ok(Polynomial::constant(self.vars, value))
            }
            Some(Tok::Ident(name)) => Polynomial::var(self.vars, &name),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                let close = self.offset();
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(syntax(close, "expected `)`")),
                }
            }
            Some(t) => Err(syntax(at, format!("unexpected token {t:?}"))),
            None => Err(syntax(at, "unexpected end of input")),
        }
    }
}

/// Parses `text` into a normalized polynomial over `vars`.
pub fn parse_polynomial(text: &str, vars: &[String]) -> Result<Polynomial, PolyError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        end: text.len(),
        vars,
    };
    let p = parser.expr()?;
    if parser.pos < parser.toks.len() {
        return Err(syntax(parser.offset(), "trailing input"));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::var_names;

    #[test]
    fn parses_safe_set_polynomial() {
        let p = parse_polynomial("x^2 - 1", &var_names(&["x"])).unwrap();
        assert_eq!(p.num_terms(), 2);
        assert_eq!(p.coefficient(&[2]), 1.0);
        assert_eq!(p.coefficient(&[0]), -1.0);
    }

    #[test]
    fn zero_has_no_terms() {
        assert!(parse_polynomial("0", &var_names(&["x"])).unwrap().is_zero());
        assert!(parse_polynomial("x - x", &var_names(&["x"])).unwrap().is_zero());
    }

    #[test]
    fn binomial_square() {
        let vars = var_names(&["x", "t"]);
        let p = parse_polynomial("(x + t)*(x + t)", &vars).unwrap();
        assert_eq!(p.coefficient(&[2, 0]), 1.0);
        assert_eq!(p.coefficient(&[1, 1]), 2.0);
        assert_eq!(p.coefficient(&[0, 2]), 1.0);
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn rational_and_scientific_literals() {
        let vars = var_names(&["x"]);
        let p = parse_polynomial("1/300 + 2.5e-3*x", &vars).unwrap();
        assert_eq!(p.coefficient(&[0]), 1.0 / 300.0);
        assert_eq!(p.coefficient(&[1]), 2.5e-3);
    }

    #[test]
    fn reports_undeclared_variable() {
        let err = parse_polynomial("x + y", &var_names(&["x"])).unwrap_err();
        assert_eq!(err, PolyError::UndeclaredVariable("y".to_string()));
    }

    #[test]
    fn reports_syntax_position() {
        let vars = var_names(&["x"]);
        match parse_polynomial("x + * 2", &vars) {
            Err(PolyError::Syntax { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("expected syntax error, got {other:?}"),
        }
        match parse_polynomial("(x + 1", &vars) {
            Err(PolyError::Syntax { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(matches!(
            parse_polynomial("x^1.5", &vars),
            Err(PolyError::Syntax { .. })
        ));
        assert!(matches!(
            parse_polynomial("x $ 2", &vars),
            Err(PolyError::Syntax { pos: 2, .. })
        ));
        assert!(matches!(
            parse_polynomial("x 2", &vars),
            Err(PolyError::Syntax { pos: 2, .. })
        ));
    }
}
