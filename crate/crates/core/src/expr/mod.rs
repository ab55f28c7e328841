//! Expression language for reaction terms and cell coefficients.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' INTEGER)*
//! primary := NUMBER | IDENT | 'pi' | FUNC '(' expr (',' expr)* ')' | '(' expr ')'
//! FUNC    := sin | cos | exp | min | max
//! ```
//!
//! Identifiers are `u1`..`uN` for species expressions and `y1`, `y2` for
//! cell-coordinate expressions. There is no implicit multiplication.

mod eval;
mod lipschitz;
mod parse;
mod print;

pub use lipschitz::{estimate_lipschitz, halton, Bounds};
pub use parse::parse;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Abstract syntax tree. Number literals are non-negative; negation is
/// always an explicit `Neg` node. Variables are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Vec<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    /// Concentrations `u1`..`uN`.
    Species,
    /// Cell coordinates `y1`, `y2`.
    Space,
}

impl VarKind {
    pub fn prefix(self) -> char {
        match self {
            VarKind::Species => 'u',
            VarKind::Space => 'y',
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("parse error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    ParseError { offset: usize, expected: Vec<String>, found: String },
    #[error("identifier '{name}' at byte {offset} is out of range for arity {arity}")]
    ArityError { name: String, offset: usize, arity: usize },
    #[error("domain error: {0}")]
    DomainError(String),
}

/// A parsed expression together with its variable kind and arity.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactionExpr {
    pub ast: Expr,
    pub arity: usize,
    pub kind: VarKind,
}

impl ReactionExpr {
    pub fn parse(text: &str, arity: usize, kind: VarKind) -> Result<Self, ExprError> {
        Ok(ReactionExpr { ast: parse(text, arity, kind)?, arity, kind })
    }

    pub fn constant(c: f64) -> Self {
        let ast = if c < 0.0 { Expr::Neg(Box::new(Expr::Num(-c))) } else { Expr::Num(c) };
        ReactionExpr { ast, arity: 0, kind: VarKind::Species }
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, ExprError> {
        eval::eval(&self.ast, values)
    }

    pub fn eval_gradient(&self, values: &[f64]) -> Result<(f64, Vec<f64>), ExprError> {
        eval::eval_gradient(&self.ast, values, self.arity)
    }

    /// Variables the expression actually references (0-based, sorted).
    pub fn variables(&self) -> Vec<usize> {
        let mut out = Vec::new();
        collect_vars(&self.ast, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn is_constant(&self) -> bool {
        self.variables().is_empty()
    }

    /// Renders with variables named by `kind`.
    pub fn to_text(&self) -> String {
        print::render(&self.ast, self.kind)
    }
}

impl std::fmt::Display for ReactionExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn collect_vars(e: &Expr, out: &mut Vec<usize>) {
    match e {
        Expr::Num(_) | Expr::Pi => {}
        Expr::Var(i) => out.push(*i),
        Expr::Neg(a) | Expr::Pow(a, _) => collect_vars(a, out),
        Expr::Bin(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Expr::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
    }
}

pub fn render(ast: &Expr, kind: VarKind) -> String {
    print::render(ast, kind)
}
