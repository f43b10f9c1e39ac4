use std::collections::HashMap;

use thiserror::Error;

use super::{BinaryOp, Expr, Function};
use crate::jet::{DomainError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound identifier {0}")]
    Unbound(String),
    #[error("{source} in `{expr}`")]
    Domain { source: DomainError, expr: String },
}

/// Bindings for one evaluation: variables carry scalars of kind `S`,
/// parameters are plain reals lifted to `S` on lookup.
#[derive(Debug, Clone)]
pub struct EvalContext<S> {
    template: S,
    vars: HashMap<String, S>,
    params: HashMap<String, f64>,
}

impl<S: Scalar> EvalContext<S> {
    /// `template` fixes the shape of constants (any value of the right kind).
    pub fn new(template: S) -> Self {
        Self { template, vars: HashMap::new(), params: HashMap::new() }
    }

    pub fn with_variables<'a>(template: S, names: impl IntoIterator<Item = &'a str>, values: &[S]) -> Self {
        let mut ctx = Self::new(template);
        for (name, v) in names.into_iter().zip(values) {
            ctx.bind_variable(name, v.clone());
        }
        ctx
    }

    pub fn bind_variable(&mut self, name: &str, value: S) -> &mut Self {
        self.vars.insert(name.to_string(), value);
        self
    }

    pub fn bind_parameter(&mut self, name: &str, value: f64) -> &mut Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn bind_parameters<'a>(&mut self, params: impl IntoIterator<Item = (&'a String, &'a f64)>) -> &mut Self {
        for (k, v) in params {
            self.params.insert(k.clone(), *v);
        }
        self
    }

    fn lookup(&self, name: &str) -> Result<S, EvalError> {
        if let Some(v) = self.vars.get(name) {
            return Ok(v.clone());
        }
        if let Some(&p) = self.params.get(name) {
            return Ok(self.template.lift(p));
        }
        Err(EvalError::Unbound(name.to_string()))
    }
}

impl Expr {
    pub fn evaluate<S: Scalar>(&self, ctx: &EvalContext<S>) -> Result<S, EvalError> {
        let domain = |source: DomainError| EvalError::Domain { source, expr: self.to_string() };
        match self {
            Expr::Const(c) => Ok(ctx.template.lift(*c)),
            Expr::Ident(name) => ctx.lookup(name),
            Expr::Neg(inner) => Ok(inner.evaluate(ctx)?.neg()),
            Expr::Binary(op, l, r) => {
                let a = l.evaluate(ctx)?;
                let b = r.evaluate(ctx)?;
                match op {
                    BinaryOp::Add => Ok(a.add(&b)),
                    BinaryOp::Sub => Ok(a.sub(&b)),
                    BinaryOp::Mul => Ok(a.mul(&b)),
                    BinaryOp::Div => a.div(&b).map_err(domain),
                    BinaryOp::Pow => a.pow(&b).map_err(domain),
                }
            }
            Expr::Call(func, args) => {
                let a = args[0].evaluate(ctx)?;
                match func {
                    Function::Exp => Ok(a.exp()),
                    Function::Ln => a.ln().map_err(domain),
                    Function::Sin => Ok(a.sin()),
                    Function::Cos => Ok(a.cos()),
                    Function::Sqrt => a.sqrt().map_err(domain),
                    Function::Pow => {
                        let b = args[1].evaluate(ctx)?;
                        a.pow(&b).map_err(domain)
                    }
                }
            }
        }
    }

    /// Plain-real evaluation with named variables and parameters.
    pub fn eval_real(&self, vars: &[(&str, f64)], params: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut ctx = EvalContext::new(0.0);
        for (n, v) in vars {
            ctx.bind_variable(n, *v);
        }
        ctx.bind_parameters(params);
        self.evaluate(&ctx)
    }
}
