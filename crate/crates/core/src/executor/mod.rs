//! Numeric execution of a stage schedule at a single expansion point.
//!
//! The state holds Taylor coefficients `x_j^(r) / r!`; the public accessors
//! convert to plain derivatives at the boundary.

mod solve;
pub mod taylor;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::codelist::CodeList;
use crate::scheme::InitSets;

pub use solve::{numeric_jacobian, solve_stage, solve_to_order, Expansion, SolveOptions, StageSolveReport};
pub use taylor::{Dual, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecError {
    #[error("division by a series with zero leading coefficient at node {node}")]
    DivisionByZeroSeries { node: usize },
    #[error("log/sqrt of nonpositive value {value} at node {node}")]
    LogSqrtDomain { node: usize, value: f64 },
    #[error("singular Jacobian at stage {stage}, block {block} (condition estimate {condition:e})")]
    SingularJacobian { stage: i64, block: usize, condition: f64 },
    #[error("Newton iteration failed at stage {stage}, block {block} after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence {
        stage: i64,
        block: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("constraints at stage {stage}, block {block} cannot be satisfied (residual {residual:e})")]
    InfeasibleConstraint { stage: i64, block: usize, residual: f64 },
    #[error("missing initialization: values {values:?}, guesses {guesses:?}")]
    MissingInitialization {
        values: Vec<(usize, u32)>,
        guesses: Vec<(usize, u32)>,
    },
}

/// Coefficients of one node's truncated Taylor series.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSeries {
    pub coeffs: Vec<f64>,
}

impl TaylorSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn derivative(&self, r: usize) -> f64 {
        factorial(r) * self.coeffs[r]
    }
}

pub(crate) fn factorial(r: usize) -> f64 {
    (1..=r).map(|k| k as f64).product()
}

/// Known Taylor coefficients of each variable at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint {
    pub t0: f64,
    coeffs: Vec<Vec<f64>>,
}

impl StatePoint {
    pub fn new(n_vars: usize, t0: f64) -> Self {
        StatePoint {
            t0,
            coeffs: vec![Vec::new(); n_vars],
        }
    }

    pub fn from_coefficients(coeffs: Vec<Vec<f64>>, t0: f64) -> Self {
        StatePoint { t0, coeffs }
    }

    pub fn n_vars(&self) -> usize {
        self.coeffs.len()
    }

    /// Number of known derivatives of `x_j`, i.e. orders `0..known(j)`.
    pub fn known(&self, j: usize) -> usize {
        self.coeffs[j].len()
    }

    pub fn coefficients(&self, j: usize) -> &[f64] {
        &self.coeffs[j]
    }

    pub fn coefficient(&self, j: usize, r: usize) -> Option<f64> {
        self.coeffs[j].get(r).copied()
    }

    pub fn derivative(&self, j: usize, r: usize) -> Option<f64> {
        self.coefficient(j, r).map(|c| c * factorial(r))
    }

    pub fn derivatives(&self, j: usize) -> Vec<f64> {
        (0..self.known(j)).map(|r| self.coeffs[j][r] * factorial(r)).collect()
    }

    /// Store `x_j^(r)`. Orders must be filled in sequence.
    pub fn set_derivative(&mut self, j: usize, r: usize, value: f64) {
        self.set_coefficient(j, r, value / factorial(r));
    }

    pub fn set_coefficient(&mut self, j: usize, r: usize, c: f64) {
        let v = &mut self.coeffs[j];
        assert!(r <= v.len(), "order {r} of variable {j} set before order {}", v.len());
        if r == v.len() {
            v.push(c);
        } else {
            v[r] = c;
        }
    }
}

/// User-supplied initial values and guesses, keyed by
/// `(variable, derivative order)` in plain derivative units.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitData {
    pub t0: f64,
    pub values: BTreeMap<(usize, u32), f64>,
    pub guesses: BTreeMap<(usize, u32), f64>,
}

impl InitData {
    /// Every required pair must be present in its own category.
    pub fn check(&self, required: &InitSets) -> Result<(), ExecError> {
        let values: Vec<_> = required.values.iter().filter(|p| !self.values.contains_key(p)).copied().collect();
        let guesses: Vec<_> = required.guesses.iter().filter(|p| !self.guesses.contains_key(p)).copied().collect();
        if values.is_empty() && guesses.is_empty() {
            Ok(())
        } else {
            Err(ExecError::MissingInitialization { values, guesses })
        }
    }

    pub fn lookup(&self, pair: (usize, u32)) -> Option<f64> {
        self.values.get(&pair).or_else(|| self.guesses.get(&pair)).copied()
    }
}

/// Taylor series of every node through order `order`. Coefficients of
/// variables beyond those stored in `state` are taken as zero.
pub fn taylor_eval(cl: &CodeList, state: &StatePoint, order: usize) -> Result<Vec<TaylorSeries>, ExecError> {
    let targets: Vec<_> = (0..cl.len()).map(|k| (crate::codelist::NodeId(k), order)).collect();
    let need = taylor::required_orders(cl, &targets);
    let out = taylor::eval_series::<f64>(cl, &need, state.t0, |j, r| state.coefficient(j, r).unwrap_or(0.0))?;
    Ok(out
        .into_iter()
        .map(|mut coeffs| {
            coeffs.truncate(order + 1);
            TaylorSeries { coeffs }
        })
        .collect())
}
