//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! A `p/q` literal is read as the quotient of two integer literals, which has
//! the same value.

use num_bigint::BigInt;
use num_traits::One;

use super::expr::{Expr, Node};
use super::poly::Func;
use super::{Chart, ExprError};
use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Op(char),
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ExprError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            out.push((pos, Tok::Num(s.parse().expect("digits"))));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let s: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            out.push((pos, Tok::Ident(s)));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Tok::Op(c)));
            i += 1;
        } else {
            return Err(ExprError::Syntax { pos, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn eat_op(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat_op(c) {
            Ok(())
        } else {
            Err(ExprError::Syntax { pos: self.pos(), msg: format!("expected '{c}'") })
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat_op('+') {
                terms.push(self.term()?);
            } else if self.eat_op('-') {
                let t = self.term()?;
                terms.push(negate(t));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().expect("one term") } else { Expr::from_node(Node::Sum(terms)) })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        let mut factors: Vec<Expr> = Vec::new();
        loop {
            if self.eat_op('*') {
                factors.push(acc);
                acc = self.factor()?;
            } else if self.eat_op('/') {
                let pos = self.pos();
                let d = self.factor()?;
                if d.is_zero_canonical() {
                    return Err(ExprError::Syntax { pos, msg: "division by zero".into() });
                }
                factors.push(acc);
                let num = if factors.len() == 1 {
                    factors.pop().expect("one factor")
                } else {
                    Expr::from_node(Node::Product(std::mem::take(&mut factors)))
                };
                acc = Expr::from_node(Node::Quotient(num, d));
            } else {
                break;
            }
        }
        if factors.is_empty() {
            Ok(acc)
        } else {
            factors.push(acc);
            Ok(Expr::from_node(Node::Product(factors)))
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if self.eat_op('^') {
            let pos = self.pos();
            let negative = if self.eat_op('-') {
                true
            } else {
                self.eat_op('+');
                false
            };
            let Some(Tok::Num(n)) = self.peek().cloned() else {
                return Err(ExprError::Syntax { pos, msg: "expected integer exponent".into() });
            };
            self.at += 1;
            let e: i32 =
                i32::try_from(n).map_err(|_| ExprError::Syntax { pos, msg: "exponent out of range".into() })?;
            let e = if negative { -e } else { e };
            if e < 0 && base.is_zero_canonical() {
                return Err(ExprError::Syntax { pos, msg: "negative power of zero".into() });
            }
            return Ok(Expr::from_node(Node::Pow(base, e)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                Ok(Expr::from_node(Node::Const(Rational::from_integer(n))))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                if let Some(func) = Func::from_name(&name) {
                    self.expect_op('(')?;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return Ok(Expr::from_node(Node::Call(func, arg)));
                }
                match self.chart.symbol(&name) {
                    Some(s) => Ok(Expr::from_node(Node::Coord(s))),
                    None => Err(ExprError::UnknownIdentifier { name, pos }),
                }
            }
            Some(Tok::Op('(')) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect_op(')')?;
                Ok(e)
            }
            Some(Tok::Op('-')) => {
                self.at += 1;
                let b = self.base()?;
                Ok(negate(b))
            }
            Some(Tok::Op(c)) => Err(ExprError::Syntax { pos, msg: format!("unexpected '{c}'") }),
            None => Err(ExprError::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }
}

fn negate(e: Expr) -> Expr {
    if let Node::Const(c) = e.node() {
        return Expr::from_node(Node::Const(-c));
    }
    Expr::from_node(Node::Product(vec![Expr::from_node(Node::Const(-Rational::one())), e]))
}

/// Parses `text` over the coordinates of `chart`.
pub fn parse(text: &str, chart: &Chart) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ExprError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, at: 0, end: text.len(), chart };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return Err(ExprError::Syntax { pos: p.pos(), msg: "unexpected trailing input".into() });
    }
    Ok(e)
}
