//! Symbolic scalar expressions over chart coordinates.

mod expr;
mod parse;
pub mod poly;
mod ratfn;
mod zero;

use thiserror::Error;

pub use expr::{Expr, Node};
pub use parse::parse;
pub use poly::{Func, Symbol};
pub use ratfn::RatFn;
pub use zero::{is_zero, Point, SampleConfig, Sampler, ZeroVerdict};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("non-finite value")]
    NonFinite,
    #[error("point dimension does not match the chart")]
    Dimension,
    #[error("expression contains transcendental functions")]
    NotRational,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("invalid chart: {0}")]
    Chart(String),
    #[error("could not find {wanted} valid sample points in {attempts} attempts")]
    Sampling { wanted: usize, attempts: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Coordinate names plus open domain constraints (each constraint must be
/// strictly positive).
#[derive(Clone, Debug)]
pub struct Chart {
    coords: Vec<Symbol>,
    constraints: Vec<Expr>,
}

impl Chart {
    pub fn new(names: &[&str]) -> Result<Chart, ExprError> {
        if names.is_empty() {
            return Err(ExprError::Chart("a chart needs at least one coordinate".into()));
        }
        Self::build(names)
    }

    /// Chart without coordinates, used by constant-structure frames.
    pub fn empty() -> Chart {
        Chart { coords: Vec::new(), constraints: Vec::new() }
    }

    fn build(names: &[&str]) -> Result<Chart, ExprError> {
        let mut coords = Vec::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            let valid = name.chars().next().is_some_and(|c| c.is_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_alphanumeric() || c == '_')
                && Func::from_name(name).is_none();
            if !valid {
                return Err(ExprError::Chart(format!("invalid coordinate name '{name}'")));
            }
            if names[..i].contains(name) {
                return Err(ExprError::Chart(format!("duplicate coordinate '{name}'")));
            }
            coords.push(Symbol { index: i as u32, name: (*name).into() });
        }
        Ok(Chart { coords, constraints: Vec::new() })
    }

    /// Adds the constraint `text > 0`.
    pub fn with_constraint(mut self, text: &str) -> Result<Chart, ExprError> {
        let e = parse(text, &self)?;
        self.constraints.push(e);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn names(&self) -> Vec<&str> {
        self.coords.iter().map(|s| &*s.name).collect()
    }

    pub fn constraints(&self) -> &[Expr] {
        &self.constraints
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.coords.iter().find(|s| &*s.name == name).cloned()
    }

    pub fn coord(&self, i: usize) -> Expr {
        let s = &self.coords[i];
        Expr::coord(s.index, &s.name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|s| &*s.name == name)
    }

    pub fn parse(&self, text: &str) -> Result<Expr, ExprError> {
        parse(text, self)
    }

    /// True when the point satisfies every constraint.
    pub fn contains(&self, p: &Point) -> bool {
        self.constraints.iter().all(|c| c.eval(&p.float).is_ok_and(|v| v > 0.0))
    }
}
