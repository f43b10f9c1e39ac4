//! Scalar expression language for metric components, map components and
//! conformal factors.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' exponent)?
//! exponent:= '-' exponent | power          (right associative)
//! atom    := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! So `-x^2` is `-(x^2)` and `2^3^2` is `2^(3^2)`. Juxtaposition is not
//! multiplication. Functions: `exp`, `ln`, `sin`, `cos`, `sqrt` (one
//! argument) and `pow` (two). Identifiers are bound at evaluation time,
//! either as variables (which may be jets) or as real parameters.

mod eval;
mod lexer;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use eval::{EvalContext, EvalError};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse_tokens;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("illegal character {found:?} at byte {offset}")]
    Lex { offset: usize, found: char },
    #[error("unexpected {found} at byte {offset}")]
    Unexpected { offset: usize, found: String },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unbalanced parenthesis at byte {offset}")]
    Unbalanced { offset: usize },
    #[error("function {name} takes {expected} argument(s), got {got} (byte {offset})")]
    Arity { name: String, expected: usize, got: usize, offset: usize },
    #[error("unknown function {name} at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("non-smooth function {name} at byte {offset} is not supported")]
    NonSmooth { name: String, offset: usize },
    #[error("function name {name} used as a value at byte {offset}")]
    ReservedName { name: String, offset: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Ln,
    Sin,
    Cos,
    Sqrt,
    Pow,
}

impl Function {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Function::Exp,
            "ln" => Function::Ln,
            "sin" => Function::Sin,
            "cos" => Function::Cos,
            "sqrt" => Function::Sqrt,
            "pow" => Function::Pow,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Sqrt => "sqrt",
            Function::Pow => "pow",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Pow => 2,
            _ => 1,
        }
    }
}

/// Parsed expression tree. Constants produced by the parser are never
/// negative; a leading minus is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Ident(String),
    Neg(Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Function, Vec<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse_tokens(&tokenize(src)?)
    }

    /// A numeric literal; negative values become `Neg(Const(|c|))` so the
    /// printed form parses back to the same tree.
    pub fn num(c: f64) -> Self {
        if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
            Expr::Neg(Box::new(Expr::Const(-c)))
        } else {
            Expr::Const(c)
        }
    }

    pub fn ident(name: &str) -> Self {
        Expr::Ident(name.to_string())
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn call(func: Function, args: Vec<Expr>) -> Self {
        Expr::Call(func, args)
    }

    /// Every identifier referenced by the expression.
    pub fn identifiers(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_identifiers(&mut out);
        out
    }

    fn collect_identifiers(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Ident(name) => {
                out.insert(name.clone());
            }
            Expr::Neg(inner) => inner.collect_identifiers(out),
            Expr::Binary(_, l, r) => {
                l.collect_identifiers(out);
                r.collect_identifiers(out);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.collect_identifiers(out)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }

    /// Replaces identifiers by expressions.
    pub fn substitute(&self, f: &impl Fn(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Ident(name) => f(name).unwrap_or_else(|| self.clone()),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.substitute(f))),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.substitute(f), r.substitute(f)),
            Expr::Call(func, args) => Expr::Call(*func, args.iter().map(|a| a.substitute(f)).collect()),
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Add, self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Sub, self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Mul, self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::binary(BinaryOp::Div, self, rhs)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Canonical printed form, with the minimal parentheses that reproduce the
/// tree on re-parsing.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            Expr::Ident(name) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < 3)
            }
            Expr::Binary(BinaryOp::Pow, l, r) => {
                write_child(f, l, l.precedence() <= 4)?;
                f.write_str("^")?;
                write_child(f, r, r.precedence() < 3)
            }
            Expr::Binary(op, l, r) => {
                let p = op.precedence();
                write_child(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_child(f, r, r.precedence() <= p)
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
