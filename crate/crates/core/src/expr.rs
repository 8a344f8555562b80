//! Rational expressions in the ambient coordinates `x1 .. x{n+1}`.
//!
//! Grammar (usual precedence, `^` binds tightest and takes an integer exponent):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' ['-' | '+'] digits)?
//! atom  := number | 'x' digits | '(' expr ')'
//! ```

use std::fmt;

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based ambient coordinate (`x1` is `Coord(0)`).
    Coord(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

impl Expr {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::Coord(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, k) => a.eval(x).powi(*k),
        }
    }

    pub fn eval_jet(&self, x: &[f64]) -> Jet {
        match self {
            Expr::Num(c) => Jet::constant(x.len(), *c),
            Expr::Coord(i) => Jet::coordinate(x, *i),
            Expr::Neg(a) => -a.eval_jet(x),
            Expr::Add(a, b) => a.eval_jet(x) + b.eval_jet(x),
            Expr::Sub(a, b) => a.eval_jet(x) - b.eval_jet(x),
            Expr::Mul(a, b) => a.eval_jet(x) * b.eval_jet(x),
            Expr::Div(a, b) => a.eval_jet(x) / b.eval_jet(x),
            Expr::Pow(a, k) => a.eval_jet(x).powi(*k),
        }
    }

    /// Largest zero-based coordinate index referenced, if any.
    pub fn max_coordinate(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Coord(i) => Some(*i),
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_coordinate(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_coordinate(), b.max_coordinate()) {
                    (Some(p), Some(q)) => Some(p.max(q)),
                    (p, q) => p.or(q),
                }
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Coord(i) => write!(f, "x{}", i + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Coord(usize),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => out.push((start, Tok::Plus)),
            '-' | '\u{2212}' => out.push((start, Tok::Minus)),
            '*' => out.push((start, Tok::Star)),
            '/' => out.push((start, Tok::Slash)),
            '^' => out.push((start, Tok::Caret)),
            '(' => out.push((start, Tok::LParen)),
            ')' => out.push((start, Tok::RParen)),
            'x' => {
                i += 1;
                let d0 = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if d0 == i {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: "coordinate symbol needs an index (x1, x2, ...)".into(),
                    });
                }
                let idx: usize = chars[d0..i]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| Error::Syntax {
                        pos: start,
                        msg: "coordinate index too large".into(),
                    })?;
                if idx == 0 {
                    return Err(Error::Syntax {
                        pos: start,
                        msg: "coordinates are numbered from x1".into(),
                    });
                }
                out.push((start, Tok::Coord(idx - 1)));
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| Error::Syntax {
                    pos: start,
                    msg: format!("malformed number '{s}'"),
                })?;
                out.push((start, Tok::Num(v)));
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    pos: start,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.at += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Plus) => {
                self.at += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.at += 1;
        let mut sign = 1;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1;
                self.at += 1;
            }
            Some(Tok::Plus) => self.at += 1,
            _ => {}
        }
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Num(v)) if v.fract() == 0.0 && v.abs() <= 64.0 => {
                let k = sign * (*v as i32);
                self.at += 1;
                Ok(Expr::Pow(Box::new(base), k))
            }
            _ => Err(Error::Syntax {
                pos,
                msg: "exponent must be an integer literal".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.at += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Coord(i)) => {
                self.at += 1;
                Ok(Expr::Coord(i))
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(Error::Syntax {
                        pos: self.pos(),
                        msg: "expected ')'".into(),
                    });
                }
                self.at += 1;
                Ok(e)
            }
            Some(_) => Err(Error::Syntax {
                pos,
                msg: "expected a number, coordinate or '('".into(),
            }),
            None => Err(Error::Syntax {
                pos,
                msg: "unexpected end of input, expected an operand".into(),
            }),
        }
    }
}

/// Parses an expression. Coordinate ranges are checked by the caller.
pub fn parse(text: &str) -> Result<Expr> {
    let toks = lex(text)?;
    let end = text.chars().count();
    let mut p = Parser { toks, at: 0, end };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(Error::Syntax {
            pos: p.pos(),
            msg: "unexpected trailing input".into(),
        });
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse("-x1^2 + 2*x2/4").unwrap();
        assert_eq!(e.eval(&[3.0, 2.0]), -9.0 + 1.0);
    }

    #[test]
    fn trailing_operator_is_rejected_at_end() {
        match parse("2 + x4 +") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_and_scientific_literals() {
        let e = parse("1.5e-1 * (x1 - 2)^-1").unwrap();
        assert!((e.eval(&[3.0]) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn bad_tokens() {
        assert!(matches!(parse("2 + y"), Err(Error::Syntax { pos: 4, .. })));
        assert!(matches!(parse("x0"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("x1^1.5"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("(x1"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn display_round_trips() {
        let e = parse("1/(1.5 + x3 - x1^2*(-0.25))").unwrap();
        let again = parse(&e.to_string()).unwrap();
        let p = [0.3, -0.2, 0.5];
        assert_eq!(e.eval(&p), again.eval(&p));
    }
}
