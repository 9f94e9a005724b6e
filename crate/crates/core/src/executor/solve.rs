//! Stage solves: linear, damped Newton and least-change Gauss-Newton.

use nalgebra::{DMatrix, DVector};

use crate::analysis::Analysis;
use crate::btf::Block;
use crate::codelist::{CodeList, DaeModel, NodeId};
use crate::scheme::{Action, Determinacy, Linearity, SchemeMode, StageTask};
use crate::sigma::{GlobalOffsets, SignatureMatrix};

use super::taylor::{eval_series, required_orders, Dual};
use super::{factorial, ExecError, InitData, StatePoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Bound on `max |F| / max(1, max |z|)` over residual and unknown TCs.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub condition_limit: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-12,
            max_iterations: 50,
            max_halvings: 30,
            condition_limit: 1e14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageSolveReport {
    pub task: StageTask,
    /// Solved derivatives, one per unknown of the task.
    pub solution: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iterations: usize,
    /// Condition number of the derivative-scaled Jacobian, when one was formed.
    pub jacobian_condition_estimate: Option<f64>,
}

/// Result of expanding the solution through some stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub state: StatePoint,
    pub reports: Vec<StageSolveReport>,
    /// `residuals[i][r]` is Taylor coefficient `r` of `f_i`.
    pub residuals: Vec<Vec<f64>>,
    pub max_residual: f64,
}

/// Residual equations of one task with its unknowns spliced into the state.
struct StageSystem<'a> {
    cl: &'a CodeList,
    need: Vec<Option<usize>>,
    equations: Vec<(usize, u32)>,
    /// Per variable, the order of its unknown at this stage and its index.
    slot: Vec<Option<(usize, usize)>>,
    orders: Vec<usize>,
}

impl<'a> StageSystem<'a> {
    fn new(cl: &'a CodeList, task: &StageTask) -> Self {
        let targets: Vec<_> = task.equations.iter().map(|&(i, r)| (cl.output(i), r as usize)).collect();
        let mut slot = vec![None; cl.n_vars()];
        for (k, &(j, r)) in task.unknowns.iter().enumerate() {
            slot[j] = Some((r as usize, k));
        }
        StageSystem {
            cl,
            need: required_orders(cl, &targets),
            equations: task.equations.clone(),
            slot,
            orders: task.unknowns.iter().map(|&(_, r)| r as usize).collect(),
        }
    }

    fn residual(&self, state: &StatePoint, z: &[f64]) -> Result<Vec<f64>, ExecError> {
        let out = eval_series::<f64>(self.cl, &self.need, state.t0, |j, r| match self.slot[j] {
            Some((o, k)) if o == r => z[k],
            _ => state.coefficient(j, r).unwrap_or(0.0),
        })?;
        Ok(self
            .equations
            .iter()
            .map(|&(i, r)| out[self.cl.output(i).0][r as usize])
            .collect())
    }

    /// Residual and its Jacobian with respect to the unknown TCs.
    fn linearize(&self, state: &StatePoint, z: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), ExecError> {
        let n = z.len();
        let out = eval_series::<Dual>(self.cl, &self.need, state.t0, |j, r| match self.slot[j] {
            Some((o, k)) if o == r => Dual::seed(z[k], k, n),
            _ => Dual::constant(state.coefficient(j, r).unwrap_or(0.0)),
        })?;
        let rows: Vec<&Dual> = self
            .equations
            .iter()
            .map(|&(i, r)| &out[self.cl.output(i).0][r as usize])
            .collect();
        let f = rows.iter().map(|d| d.v).collect();
        let jac = DMatrix::from_fn(rows.len(), n, |a, b| rows[a].grad(b));
        Ok((f, jac))
    }

    /// `diag(r_i!) J diag(1/r_j!)`: the Jacobian in plain derivative units.
    fn derivative_scaled(&self, jac: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(jac.nrows(), jac.ncols(), |a, b| {
            jac[(a, b)] * factorial(self.equations[a].1 as usize) / factorial(self.orders[b])
        })
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn scaled(f: &[f64], z: &[f64]) -> f64 {
    inf_norm(f) / inf_norm(z).max(1.0)
}

fn condition(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn lookup_all(
    init: &InitData,
    pairs: &[(usize, u32)],
    guesses: bool,
) -> Result<Vec<f64>, ExecError> {
    let missing: Vec<_> = pairs.iter().filter(|&&p| init.lookup(p).is_none()).copied().collect();
    if !missing.is_empty() {
        return Err(if guesses {
            ExecError::MissingInitialization {
                values: vec![],
                guesses: missing,
            }
        } else {
            ExecError::MissingInitialization {
                values: missing,
                guesses: vec![],
            }
        });
    }
    Ok(pairs.iter().map(|&p| init.lookup(p).unwrap()).collect())
}

/// Solve one task and store its unknowns in `state`.
pub fn solve_stage(
    model: &DaeModel,
    task: &StageTask,
    state: &mut StatePoint,
    init: &InitData,
    opts: &SolveOptions,
) -> Result<StageSolveReport, ExecError> {
    let sys = StageSystem::new(model.codelist(), task);
    let (stage, block) = (task.stage, task.block);
    let (z, residual_norm, newton_iterations, cond) = match task.action {
        Action::InitialValues => {
            let vals = lookup_all(init, &task.unknowns, false)?;
            let z: Vec<f64> = vals.iter().zip(&sys.orders).map(|(v, &r)| v / factorial(r)).collect();
            (z, 0.0, 0, None)
        }
        Action::Solve {
            determinacy: Determinacy::Square,
            linearity,
        } => {
            let z0 = match linearity {
                Linearity::Nonlinear => lookup_all(init, &task.unknowns, true)?,
                Linearity::Linear => task.unknowns.iter().map(|&p| init.lookup(p).unwrap_or(0.0)).collect(),
            };
            let z0: Vec<f64> = z0.iter().zip(&sys.orders).map(|(v, &r)| v / factorial(r)).collect();
            square(&sys, state, z0, linearity, opts, stage, block)?
        }
        Action::Solve {
            determinacy: Determinacy::Underdetermined,
            linearity,
        } => {
            let g = lookup_all(init, &task.unknowns, true)?;
            least_change(&sys, state, g, linearity, opts, stage, block)?
        }
    };
    for (k, &(j, r)) in task.unknowns.iter().enumerate() {
        state.set_coefficient(j, r as usize, z[k]);
    }
    Ok(StageSolveReport {
        task: task.clone(),
        solution: z.iter().zip(&sys.orders).map(|(c, &r)| c * factorial(r)).collect(),
        residual_norm,
        newton_iterations,
        jacobian_condition_estimate: cond,
    })
}

type Outcome = (Vec<f64>, f64, usize, Option<f64>);

fn square(
    sys: &StageSystem<'_>,
    state: &StatePoint,
    mut z: Vec<f64>,
    linearity: Linearity,
    opts: &SolveOptions,
    stage: i64,
    block: usize,
) -> Result<Outcome, ExecError> {
    let step = |f: &[f64], jac: &DMatrix<f64>| -> Result<(DVector<f64>, f64), ExecError> {
        let cond = condition(&sys.derivative_scaled(jac));
        if cond > opts.condition_limit {
            return Err(ExecError::SingularJacobian {
                stage,
                block,
                condition: cond,
            });
        }
        let rhs = -DVector::from_column_slice(f);
        let dz = jac.clone().lu().solve(&rhs).ok_or(ExecError::SingularJacobian {
            stage,
            block,
            condition: f64::INFINITY,
        })?;
        Ok((dz, cond))
    };

    if linearity == Linearity::Linear {
        let (f, jac) = sys.linearize(state, &z)?;
        let (dz, cond) = step(&f, &jac)?;
        for (a, d) in z.iter_mut().zip(dz.iter()) {
            *a += d;
        }
        let res = scaled(&sys.residual(state, &z)?, &z);
        return Ok((z, res, 0, Some(cond)));
    }

    let mut cond = None;
    for it in 0..=opts.max_iterations {
        let (f, jac) = sys.linearize(state, &z)?;
        let res = scaled(&f, &z);
        if res <= opts.tol {
            return Ok((z, res, it, cond));
        }
        if it == opts.max_iterations {
            break;
        }
        let (dz, c) = step(&f, &jac)?;
        cond = Some(c);
        let norm0 = inf_norm(&f);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, d)| a + alpha * d).collect();
            if let Ok(ft) = sys.residual(state, &trial) {
                if inf_norm(&ft) < norm0 {
                    accepted = Some(trial);
                    break;
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some(t) => z = t,
            None => {
                return Err(ExecError::NewtonDivergence {
                    stage,
                    block,
                    iterations: it + 1,
                    residual: res,
                })
            }
        }
    }
    let res = scaled(&sys.residual(state, &z)?, &z);
    Err(ExecError::NewtonDivergence {
        stage,
        block,
        iterations: opts.max_iterations,
        residual: res,
    })
}

/// Minimize `|g - w|_2` over plain derivatives `w` subject to `F = 0`.
/// Each Gauss-Newton step projects `g` onto the linearized constraints:
/// `w += (g - w) - A^+ (F + A (g - w))`.
fn least_change(
    sys: &StageSystem<'_>,
    state: &StatePoint,
    g: Vec<f64>,
    linearity: Linearity,
    opts: &SolveOptions,
    stage: i64,
    block: usize,
) -> Result<Outcome, ExecError> {
    let to_tc = |w: &[f64]| -> Vec<f64> { w.iter().zip(&sys.orders).map(|(v, &r)| v / factorial(r)).collect() };
    let gv = DVector::from_column_slice(&g);
    let mut w = gv.clone();
    let max_steps = match linearity {
        Linearity::Linear => 1,
        Linearity::Nonlinear => opts.max_iterations,
    };
    let mut cond = None;
    let mut steps = 0;
    loop {
        let z = to_tc(w.as_slice());
        let (f, jac) = sys.linearize(state, &z)?;
        let res = scaled(&f, &z);
        if steps == max_steps {
            if res > opts.tol {
                return Err(ExecError::InfeasibleConstraint {
                    stage,
                    block,
                    residual: res,
                });
            }
            let iterations = if linearity == Linearity::Linear { 0 } else { steps };
            return Ok((z, res, iterations, cond));
        }
        // d F / d w = J_tc diag(1/r!)
        let a = DMatrix::from_fn(jac.nrows(), jac.ncols(), |p, q| jac[(p, q)] / factorial(sys.orders[q]));
        cond = Some(condition(&sys.derivative_scaled(&jac)));
        let gap = &gv - &w;
        let rhs = DVector::from_column_slice(&f) + &a * &gap;
        let pinv = a.clone().pseudo_inverse(1e-14 * a.amax().max(f64::MIN_POSITIVE)).map_err(|_| {
            ExecError::InfeasibleConstraint {
                stage,
                block,
                residual: res,
            }
        })?;
        let dw = &gap - pinv * rhs;
        w += &dw;
        steps += 1;
        if linearity == Linearity::Nonlinear {
            let z = to_tc(w.as_slice());
            let res = scaled(&sys.residual(state, &z)?, &z);
            if res <= opts.tol && dw.amax() <= 1e-10 * w.amax().max(1.0) {
                return Ok((z, res, steps, cond));
            }
        }
    }
}

/// `J_ij = d f_i / d x_j^(sigma_ij)` on the rows and columns of `block`,
/// for `(i, j)` with `sigma_ij = d_j - c_i`, and zero elsewhere.
pub fn numeric_jacobian(
    model: &DaeModel,
    sm: &SignatureMatrix,
    offs: &GlobalOffsets,
    block: &Block,
    state: &StatePoint,
) -> Result<DMatrix<f64>, ExecError> {
    let cl = model.codelist();
    let mut seeds: Vec<(usize, usize)> = Vec::new();
    let mut entry = vec![vec![None; block.cols.len()]; block.rows.len()];
    for (a, &i) in block.rows.iter().enumerate() {
        for (b, &j) in block.cols.iter().enumerate() {
            if sm.get(i, j).finite() == Some(offs.d[j] - offs.c[i]) {
                let pair = (j, (offs.d[j] - offs.c[i]) as usize);
                let k = seeds.iter().position(|&p| p == pair).unwrap_or_else(|| {
                    seeds.push(pair);
                    seeds.len() - 1
                });
                entry[a][b] = Some(k);
            }
        }
    }
    let targets: Vec<(NodeId, usize)> = block.rows.iter().map(|&i| (cl.output(i), 0)).collect();
    let need = required_orders(cl, &targets);
    let n = seeds.len();
    let out = eval_series::<Dual>(cl, &need, state.t0, |j, r| {
        let v = state.coefficient(j, r).unwrap_or(0.0);
        match seeds.iter().position(|&p| p == (j, r)) {
            Some(k) => Dual::seed(v, k, n),
            None => Dual::constant(v),
        }
    })?;
    Ok(DMatrix::from_fn(block.rows.len(), block.cols.len(), |a, b| match entry[a][b] {
        Some(k) => out[cl.output(block.rows[a]).0][0].grad(k) / factorial(seeds[k].1),
        None => 0.0,
    }))
}

/// Run stages `-max d_j ..= order` of the chosen scheme from `init`.
pub fn solve_to_order(
    model: &DaeModel,
    analysis: &Analysis,
    mode: SchemeMode,
    init: &InitData,
    order: i64,
    opts: &SolveOptions,
) -> Result<Expansion, ExecError> {
    init.check(analysis.init_sets(mode))?;
    let mut state = StatePoint::new(model.n(), init.t0);
    let schedule = analysis.schedule(analysis.k_d(), order, mode);
    let mut reports = Vec::with_capacity(schedule.tasks.len());
    for task in &schedule.tasks {
        reports.push(solve_stage(model, task, &mut state, init, opts)?);
    }
    let cl = model.codelist();
    let targets: Vec<_> = (0..model.n())
        .filter(|&i| order + analysis.offsets.c[i] >= 0)
        .map(|i| (cl.output(i), (order + analysis.offsets.c[i]) as usize))
        .collect();
    let need = required_orders(cl, &targets);
    let out = eval_series::<f64>(cl, &need, state.t0, |j, r| state.coefficient(j, r).unwrap_or(0.0))?;
    let residuals: Vec<Vec<f64>> = (0..model.n())
        .map(|i| {
            let top = order + analysis.offsets.c[i];
            if top < 0 {
                Vec::new()
            } else {
                out[cl.output(i).0][..=top as usize].to_vec()
            }
        })
        .collect();
    let max_residual = residuals.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Expansion {
        state,
        reports,
        residuals,
        max_residual,
    })
}
