//! Expression trees and the programmatic model builder.
//!
//! Both the text parser and [`ModelBuilder`] produce [`Expr`] trees and lower
//! them through the same routine, so the two front ends yield identical code
//! lists for identical expressions.

use std::collections::BTreeMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

use super::{validate_model, BinaryOp, CodeList, DaeModel, Diagnostic, NodeId, NodeKind, UnaryOp};

/// Expression over `t`, declared variables and constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Time,
    Var(usize),
    Const(f64),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Deriv(Box<Expr>, u32),
}

impl Expr {
    pub fn time() -> Expr {
        Expr::Time
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn sin(self) -> Expr {
        Expr::unary(UnaryOp::Sin, self)
    }

    pub fn cos(self) -> Expr {
        Expr::unary(UnaryOp::Cos, self)
    }

    pub fn exp(self) -> Expr {
        Expr::unary(UnaryOp::Exp, self)
    }

    pub fn log(self) -> Expr {
        Expr::unary(UnaryOp::Log, self)
    }

    pub fn sqrt(self) -> Expr {
        Expr::unary(UnaryOp::Sqrt, self)
    }

    pub fn powi(self, exponent: i32) -> Expr {
        Expr::Pow(Box::new(self), exponent)
    }

    /// `p`-th time derivative of this expression.
    pub fn der(self, p: u32) -> Expr {
        Expr::Deriv(Box::new(self), p)
    }

    fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(j) => Some(*j),
            Expr::Time | Expr::Const(_) => None,
            Expr::Unary(_, a) | Expr::Pow(a, _) | Expr::Deriv(a, _) => a.max_var(),
            Expr::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Append this expression to `cl` in post-order and return its node.
    /// Inputs map to their fixed slots; every other sub-expression gets a
    /// fresh node, without any sharing or folding.
    pub(crate) fn lower(&self, cl: &mut CodeList) -> NodeId {
        match self {
            Expr::Time => cl.time(),
            Expr::Var(j) => cl.var(*j),
            Expr::Const(c) => cl.push(NodeKind::Const(*c)),
            Expr::Unary(op, a) => {
                let a = a.lower(cl);
                cl.push(NodeKind::Unary(*op, a))
            }
            Expr::Binary(op, a, b) => {
                let a = a.lower(cl);
                let b = b.lower(cl);
                cl.push(NodeKind::Binary(*op, a, b))
            }
            Expr::Pow(a, k) => {
                let a = a.lower(cl);
                cl.push(NodeKind::Pow(a, *k))
            }
            Expr::Deriv(a, p) => {
                let a = a.lower(cl);
                cl.push(NodeKind::Deriv(a, *p))
            }
        }
    }
}

/// Lower `lhs = rhs` to a single output node holding `lhs - rhs`.
///
/// A literal zero on one side does not produce a subtraction: `e = 0`
/// becomes `id(e)` and `0 = e` becomes `-e`.
pub(crate) fn lower_equation(lhs: &Expr, rhs: &Expr, cl: &mut CodeList) -> NodeId {
    if rhs.is_zero_literal() {
        let a = lhs.lower(cl);
        cl.push(NodeKind::Unary(UnaryOp::Identity, a))
    } else if lhs.is_zero_literal() {
        let b = rhs.lower(cl);
        cl.push(NodeKind::Unary(UnaryOp::Neg, b))
    } else {
        let a = lhs.lower(cl);
        let b = rhs.lower(cl);
        cl.push(NodeKind::Binary(BinaryOp::Sub, a, b))
    }
}

macro_rules! binary_ops {
    ($($tr:ident $method:ident $op:ident),*) => {$(
        impl $tr for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::Binary(BinaryOp::$op, Box::new(self), Box::new(rhs))
            }
        }
        impl $tr<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::Binary(BinaryOp::$op, Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
        impl $tr<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::Binary(BinaryOp::$op, Box::new(Expr::Const(self)), Box::new(rhs))
            }
        }
    )*};
}

binary_ops!(Add add Add, Sub sub Sub, Mul mul Mul, Div div Div);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(UnaryOp::Neg, self)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("model has no equations")]
    NoEquations,
    #[error("{variables} variables but {equations} equations")]
    EquationCount { variables: usize, equations: usize },
    #[error("expression references undeclared variable #{0}")]
    UndeclaredVariable(usize),
    #[error("invalid model: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Programmatic construction of a [`DaeModel`].
///
/// ```
/// use daestruct::codelist::{Expr, ModelBuilder};
/// let mut b = ModelBuilder::new();
/// let x = b.var("x");
/// b.equation("A", x.der(1) - Expr::time(), Expr::constant(0.0));
/// let model = b.finish().unwrap();
/// assert_eq!(model.n(), 1);
/// ```
#[derive(Debug, Default, Clone)]
pub struct ModelBuilder {
    variables: Vec<String>,
    constants: BTreeMap<String, f64>,
    equations: Vec<(String, Expr, Expr)>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declare a state variable and return an expression referring to it.
    pub fn var(&mut self, name: &str) -> Expr {
        self.variables.push(name.to_string());
        Expr::Var(self.variables.len() - 1)
    }

    /// Record a named constant; the returned expression is its value.
    pub fn constant(&mut self, name: &str, value: f64) -> Expr {
        self.constants.insert(name.to_string(), value);
        Expr::Const(value)
    }

    /// Add the equation `lhs = rhs`.
    pub fn equation(&mut self, name: &str, lhs: Expr, rhs: Expr) -> &mut Self {
        self.equations.push((name.to_string(), lhs, rhs));
        self
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn finish(self) -> Result<DaeModel, BuildError> {
        if self.equations.is_empty() {
            return Err(BuildError::NoEquations);
        }
        if self.equations.len() != self.variables.len() {
            return Err(BuildError::EquationCount {
                variables: self.variables.len(),
                equations: self.equations.len(),
            });
        }
        let n = self.variables.len();
        for (_, lhs, rhs) in &self.equations {
            if let Some(j) = lhs.max_var().max(rhs.max_var()) {
                if j >= n {
                    return Err(BuildError::UndeclaredVariable(j));
                }
            }
        }

        let mut cl = CodeList::new(n);
        let mut names = Vec::with_capacity(n);
        for (name, lhs, rhs) in &self.equations {
            let out = lower_equation(lhs, rhs, &mut cl);
            cl.push_output(out);
            names.push(name.clone());
        }

        let model = DaeModel::from_parts(self.variables, names, self.constants, cl);
        let diags = validate_model(&model);
        if diags.is_empty() {
            Ok(model)
        } else {
            Err(BuildError::Invalid(diags))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_builder_fails() {
        assert_eq!(ModelBuilder::new().finish(), Err(BuildError::NoEquations));
    }

    #[test]
    fn equation_count_mismatch() {
        let mut b = ModelBuilder::new();
        let x = b.var("x");
        b.var("y");
        b.equation("A", x, Expr::Const(0.0));
        assert_eq!(
            b.finish(),
            Err(BuildError::EquationCount {
                variables: 2,
                equations: 1
            })
        );
    }

    #[test]
    fn undeclared_variable() {
        let mut b = ModelBuilder::new();
        b.var("x");
        b.equation("A", Expr::Var(3), Expr::Const(0.0));
        assert_eq!(b.finish(), Err(BuildError::UndeclaredVariable(3)));
    }

    #[test]
    fn duplicate_equation_names_rejected() {
        let mut b = ModelBuilder::new();
        let x = b.var("x");
        let y = b.var("y");
        b.equation("A", x, Expr::Const(0.0));
        b.equation("A", y, Expr::Const(0.0));
        assert!(matches!(b.finish(), Err(BuildError::Invalid(_))));
    }

    #[test]
    fn formal_dependence_keeps_cancelling_terms() {
        let mut b = ModelBuilder::new();
        let x = b.var("x");
        let lam = b.var("lam");
        b.equation(
            "A",
            x.clone().der(3) + x.clone().der(2) + lam.clone() * x.clone() - x.clone().der(3),
            Expr::Const(0.0),
        );
        b.equation("B", lam, Expr::Const(1.0));
        let m = b.finish().unwrap();
        let third = m
            .codelist()
            .nodes()
            .iter()
            .filter(|k| matches!(k, NodeKind::Deriv(_, 3)))
            .count();
        assert_eq!(third, 2);
    }

    #[test]
    fn builder_matches_parser() {
        let mut b = ModelBuilder::new();
        let l = b.constant("L", 1.0);
        let c = b.constant("c", 0.1);
        let lam = b.var("lam");
        let u = b.var("u");
        let v = b.var("v");
        b.equation(
            "F",
            u.clone().powi(2) + v.clone().powi(2) - (l + c * lam.clone()).powi(2) + lam.clone().der(2),
            Expr::Const(0.0),
        );
        b.equation("G", u.der(1), Expr::Const(0.0));
        b.equation("H", v - Expr::time(), Expr::Const(0.0));
        let built = b.finish().unwrap();

        let parsed = crate::codelist::parse_model(
            "const L = 1; const c = 0.1; var lam, u, v;
             eq F: u^2 + v^2 - (L + c*lam)^2 + Der(lam, 2) = 0;
             eq G: Der(u, 1) = 0;
             eq H: v - t = 0;",
        )
        .unwrap();
        assert_eq!(built.codelist(), parsed.codelist());
        assert_eq!(built, parsed);
    }
}
