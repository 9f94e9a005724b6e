//! Serializable analysis and solve reports.
//!
//! Equations and variables are referred to by name, derivative orders by
//! explicit `(name, order)` pairs. Block numbers are 1-based and follow the
//! fine block triangular order.

use daestruct::codelist::DaeModel;
use daestruct::executor::Expansion;
use daestruct::scheme::{Action, SchemeMode};
use daestruct::Analysis;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub model: ModelSummary,
    /// Rows are equations, columns variables; `null` marks an absent entry.
    pub sigma: Vec<Vec<Option<i64>>>,
    pub hvt: Vec<HvtEntry>,
    pub hvt_value: i64,
    pub offsets: Offsets,
    pub coarse_blocks: Vec<CoarseBlock>,
    pub blocks: Vec<BlockReport>,
    pub lead_times: Vec<i64>,
    pub ql: QlSummary,
    pub scheme: SchemeMode,
    pub init: InitReport,
    pub stage_range: StageRange,
    pub schedule: Vec<TaskReport>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub variables: Vec<String>,
    pub equations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HvtEntry {
    pub equation: String,
    pub variable: String,
    pub sigma: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Offsets {
    pub c: Vec<i64>,
    pub d: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseBlock {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockReport {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub size: usize,
    pub c_hat: Vec<i64>,
    pub d_hat: Vec<i64>,
    pub lead_time: i64,
    /// The block's stage-0 system is quasilinear.
    pub ql: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationQlReport {
    pub equation: String,
    pub global: String,
    pub blockwise: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QlSummary {
    pub per_equation: Vec<EquationQlReport>,
    pub per_block: Vec<bool>,
    pub dae: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Derivative {
    pub name: String,
    pub order: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitReport {
    pub values: Vec<Derivative>,
    pub guesses: Vec<Derivative>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRange {
    pub first: i64,
    pub last: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskReport {
    pub stage: i64,
    pub block: usize,
    pub local_stage: i64,
    pub action: Action,
    pub equations: Vec<Derivative>,
    pub unknowns: Vec<Derivative>,
    pub inputs: Vec<Derivative>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub index: i64,
    pub dof: i64,
}

fn names(all: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&k| all[k].clone()).collect()
}

fn derivs(all: &[String], pairs: impl IntoIterator<Item = (usize, u32)>) -> Vec<Derivative> {
    pairs
        .into_iter()
        .map(|(k, order)| Derivative {
            name: all[k].clone(),
            order,
        })
        .collect()
}

impl AnalysisReport {
    pub fn build(model: &DaeModel, a: &Analysis, mode: SchemeMode, stages: (i64, i64)) -> Self {
        let vars = model.variable_names();
        let eqs = model.equation_names();
        let n = model.n();
        let starts = a.fine.block_starts();
        let blocks = a
            .fine
            .blocks
            .iter()
            .zip(&starts)
            .enumerate()
            .map(|(l, (b, &s))| BlockReport {
                rows: names(eqs, &b.rows),
                cols: names(vars, &b.cols),
                size: b.size(),
                c_hat: a.local.c_hat[s..s + b.size()].to_vec(),
                d_hat: a.local.d_hat[s..s + b.size()].to_vec(),
                lead_time: a.local.lead_times[l],
                ql: a.ql.gamma_block[l],
            })
            .collect();
        let init = a.init_sets(mode);
        let schedule = a.schedule(stages.0, stages.1, mode);
        AnalysisReport {
            model: ModelSummary {
                variables: vars.to_vec(),
                equations: eqs.to_vec(),
            },
            sigma: (0..n).map(|i| a.sigma.row(i).iter().map(|e| e.finite()).collect()).collect(),
            hvt: a
                .hvt
                .assignment
                .iter()
                .enumerate()
                .map(|(i, &j)| HvtEntry {
                    equation: eqs[i].clone(),
                    variable: vars[j].clone(),
                    sigma: a.sigma.get(i, j).finite().expect("transversal entries are finite"),
                })
                .collect(),
            hvt_value: a.hvt.value,
            offsets: Offsets {
                c: a.offsets.c.clone(),
                d: a.offsets.d.clone(),
            },
            coarse_blocks: a
                .coarse
                .blocks
                .iter()
                .map(|b| CoarseBlock {
                    rows: names(eqs, &b.rows),
                    cols: names(vars, &b.cols),
                })
                .collect(),
            blocks,
            lead_times: a.local.lead_times.clone(),
            ql: QlSummary {
                per_equation: (0..n)
                    .map(|i| EquationQlReport {
                        equation: eqs[i].clone(),
                        global: a.ql.global[i].code.to_string(),
                        blockwise: a.ql.blockwise[i].code.to_string(),
                    })
                    .collect(),
                per_block: a.ql.gamma_block.clone(),
                dae: a.ql.gamma_dae,
            },
            scheme: mode,
            init: InitReport {
                values: derivs(vars, init.values.iter().copied()),
                guesses: derivs(vars, init.guesses.iter().copied()),
            },
            stage_range: StageRange {
                first: stages.0,
                last: stages.1,
            },
            schedule: schedule
                .tasks
                .iter()
                .map(|t| TaskReport {
                    stage: t.stage,
                    block: t.block + 1,
                    local_stage: t.local_stage,
                    action: t.action,
                    equations: derivs(eqs, t.equations.iter().copied()),
                    unknowns: derivs(vars, t.unknowns.iter().copied()),
                    inputs: derivs(vars, t.cross_block_inputs.iter().copied()),
                })
                .collect(),
            metrics: Metrics {
                index: a.metrics.index,
                dof: a.metrics.dof,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub scheme: SchemeMode,
    pub order: i64,
    pub t0: f64,
    pub variables: Vec<VariableSeries>,
    pub stages: Vec<StageSummary>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSeries {
    pub name: String,
    pub derivatives: Vec<f64>,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: i64,
    pub block: usize,
    pub action: Action,
    pub newton_iterations: usize,
    pub residual: f64,
    pub condition: Option<f64>,
}

impl SolveReport {
    pub fn build(model: &DaeModel, e: &Expansion, mode: SchemeMode, order: i64) -> Self {
        SolveReport {
            scheme: mode,
            order,
            t0: e.state.t0,
            variables: model
                .variable_names()
                .iter()
                .enumerate()
                .map(|(j, name)| VariableSeries {
                    name: name.clone(),
                    derivatives: e.state.derivatives(j),
                    coefficients: e.state.coefficients(j).to_vec(),
                })
                .collect(),
            stages: e
                .reports
                .iter()
                .map(|r| StageSummary {
                    stage: r.task.stage,
                    block: r.task.block + 1,
                    action: r.task.action,
                    newton_iterations: r.newton_iterations,
                    residual: r.residual_norm,
                    condition: r.jacobian_condition_estimate,
                })
                .collect(),
            max_residual: e.max_residual,
        }
    }
}
