//! Initialization sets and stage-by-stage solution schedules.
//!
//! At stage `k`, block `l` solves `f_i^(k+c_i) = 0` for the rows of the block
//! with `k + c_i >= 0`, for the unknowns `x_j^(k+d_j)` of its columns with
//! `k + d_j >= 0`. Everything of lower order was found at earlier stages, and
//! unknowns of blocks after `l` were found earlier in the same stage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::btf::{BlockPartition, LocalOffsets};
use crate::sigma::{GlobalOffsets, JacobianPattern};

/// `(variable, derivative order)` pairs needing an initial value or an
/// initial guess. Indices refer to the original variable order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitSets {
    pub values: BTreeSet<(usize, u32)>,
    pub guesses: BTreeSet<(usize, u32)>,
}

impl InitSets {
    pub fn len(&self) -> usize {
        self.values.len() + self.guesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Initialization for the basic scheme: every `x_j^(r)` with
/// `0 <= r <= d_j - gamma`, all treated as guesses.
pub fn basic_init_set(offs: &GlobalOffsets, gamma_dae: bool) -> InitSets {
    let g = i64::from(gamma_dae);
    let guesses = offs
        .d
        .iter()
        .enumerate()
        .flat_map(|(j, &d)| (0..=d - g).map(move |r| (j, r as u32)))
        .collect();
    InitSets {
        values: BTreeSet::new(),
        guesses,
    }
}

/// Minimal initialization for the fine-block scheme, block by block.
///
/// For block `l` with local offsets `c*`, `d*` and flag `gamma_l`, each
/// `q = -max d*, ..., -gamma_l` contributes `{(j, q + d*_j) : q + d*_j >= 0}`:
/// initial values while `q < -max c*` (no equations yet), guesses after.
pub fn fine_block_init(local: &LocalOffsets, gamma_block: &[bool], part: &BlockPartition) -> InitSets {
    let mut sets = InitSets::default();
    for ((b, start), &gamma) in part.blocks.iter().zip(part.block_starts()).zip(gamma_block) {
        let c_star = &local.c_hat[start..start + b.size()];
        let d_star = &local.d_hat[start..start + b.size()];
        let max_c = c_star.iter().copied().max().unwrap_or(0);
        let max_d = d_star.iter().copied().max().unwrap_or(0);
        for q in -max_d..=-i64::from(gamma) {
            for (k, &dj) in d_star.iter().enumerate() {
                if q + dj >= 0 {
                    let pair = (part.col_perm[start + k], (q + dj) as u32);
                    if q < -max_c {
                        sets.values.insert(pair);
                    } else {
                        sets.guesses.insert(pair);
                    }
                }
            }
        }
    }
    sets
}

/// Index sets of one block at one stage, in permuted positions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockSets {
    /// `I_{k,l}`: `(row position, k + c_i)`.
    pub equations: Vec<(usize, i64)>,
    /// `J_{k,l}`: `(column position, k + d_j)`.
    pub unknowns: Vec<(usize, i64)>,
    /// `J_{k,>l}`: unknowns of all later blocks at this stage.
    pub later: Vec<(usize, i64)>,
    /// The part of `J_{k,>l}` the block's equations actually read: columns
    /// with an `S0` entry in one of the rows of `I_{k,l}`.
    pub later_used: Vec<(usize, i64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSets {
    pub blocks: Vec<BlockSets>,
    /// `J_{<k}` as the number of known derivatives `max(0, k + d_j)` per
    /// column position.
    pub prior: Vec<i64>,
}

/// The sets `I_{k,l}`, `J_{k,l}`, `J_{k,>l}` and `J_{<k}` at stage `k`.
pub fn stage_sets(k: i64, part: &BlockPartition, offs: &GlobalOffsets, pattern: &JacobianPattern) -> StageSets {
    let starts = part.block_starts();
    let blocks: Vec<BlockSets> = part
        .blocks
        .iter()
        .zip(&starts)
        .map(|(b, &s)| {
            let equations: Vec<(usize, i64)> = (s..s + b.size())
                .map(|p| (p, k + offs.c[part.row_perm[p]]))
                .filter(|&(_, r)| r >= 0)
                .collect();
            let unknowns = (s..s + b.size())
                .map(|p| (p, k + offs.d[part.col_perm[p]]))
                .filter(|&(_, r)| r >= 0)
                .collect();
            BlockSets {
                equations,
                unknowns,
                ..BlockSets::default()
            }
        })
        .collect();
    let n = part.col_perm.len();
    let mut out = Vec::with_capacity(blocks.len());
    for (l, (b, &s)) in blocks.iter().zip(&starts).enumerate() {
        let end = s + part.blocks[l].size();
        let later: Vec<(usize, i64)> = blocks[l + 1..].iter().flat_map(|x| x.unknowns.iter().copied()).collect();
        let later_used = later
            .iter()
            .copied()
            .filter(|&(p, _)| {
                b.equations
                    .iter()
                    .any(|&(q, _)| pattern.in_s0(part.row_perm[q], part.col_perm[p]))
            })
            .collect();
        debug_assert!(later.iter().all(|&(p, _)| p >= end));
        out.push(BlockSets {
            equations: b.equations.clone(),
            unknowns: b.unknowns.clone(),
            later,
            later_used,
        });
    }
    let prior = (0..n).map(|p| (k + offs.d[part.col_perm[p]]).max(0)).collect();
    StageSets { blocks: out, prior }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Determinacy {
    Underdetermined,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearity {
    Linear,
    Nonlinear,
}

/// Kind of solve for block `l` (0-based) at stage `k`, or `None` when the
/// block has no equations yet (`k_l < -max c_hat`).
pub fn classify_stage(
    k: i64,
    l: usize,
    part: &BlockPartition,
    local: &LocalOffsets,
    gamma_eq: &[bool],
) -> Option<(Determinacy, Linearity)> {
    let start = part.block_starts()[l];
    let size = part.blocks[l].size();
    let kl = k + local.lead_times[l];
    let c_hat = &local.c_hat[start..start + size];
    if kl < -c_hat.iter().copied().max().unwrap_or(0) {
        return None;
    }
    let determinacy = if kl < 0 {
        Determinacy::Underdetermined
    } else {
        Determinacy::Square
    };
    let nonlinear = (0..size).any(|q| kl + c_hat[q] == 0 && !gamma_eq[part.row_perm[start + q]]);
    let linearity = if nonlinear {
        Linearity::Nonlinear
    } else {
        Linearity::Linear
    };
    Some((determinacy, linearity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    /// No equations at this stage; the unknowns take initial values.
    InitialValues,
    Solve {
        determinacy: Determinacy,
        linearity: Linearity,
    },
}

/// One block's work at one stage, in original indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTask {
    pub stage: i64,
    /// 0-based block index; blocks are solved from last to first.
    pub block: usize,
    pub local_stage: i64,
    /// `(equation, derivative order)`.
    pub equations: Vec<(usize, u32)>,
    /// `(variable, derivative order)`.
    pub unknowns: Vec<(usize, u32)>,
    /// Unknowns of later blocks at this stage that these equations read.
    pub cross_block_inputs: Vec<(usize, u32)>,
    /// Derivatives `0..prior_orders[j]` of each variable are already known.
    pub prior_orders: Vec<u32>,
    pub action: Action,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeMode {
    Basic,
    Block,
}

/// Tasks for stages `k_min..=k_max`, stage-major, blocks from last to first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: SchemeMode,
    pub tasks: Vec<StageTask>,
}

impl Schedule {
    pub fn stage(&self, k: i64) -> impl Iterator<Item = &StageTask> {
        self.tasks.iter().filter(move |t| t.stage == k)
    }
}

/// Everything a schedule is derived from.
pub struct SchemeInputs<'a> {
    pub offsets: &'a GlobalOffsets,
    pub pattern: &'a JacobianPattern,
    pub fine: &'a BlockPartition,
    pub local: &'a LocalOffsets,
    /// Blockwise QL flag of each equation.
    pub gamma_eq: &'a [bool],
    /// Global QL flag of each equation, used by the basic scheme.
    pub gamma_global: &'a [bool],
}

/// The whole system as a single block with its global offsets.
fn single_block(offs: &GlobalOffsets) -> (BlockPartition, LocalOffsets) {
    let n = offs.c.len();
    let all: Vec<usize> = (0..n).collect();
    let part = BlockPartition {
        blocks: vec![crate::btf::Block {
            rows: all.clone(),
            cols: all.clone(),
        }],
        row_perm: all.clone(),
        col_perm: all,
    };
    let local = LocalOffsets {
        c_hat: offs.c.clone(),
        d_hat: offs.d.clone(),
        lead_times: vec![0],
    };
    (part, local)
}

/// Materialize the schedule for stages `k_min..=k_max`. Blocks with nothing
/// to solve and nothing to initialize at a stage are left out.
pub fn render_schedule(k_min: i64, k_max: i64, mode: SchemeMode, inputs: &SchemeInputs<'_>) -> Schedule {
    let basic;
    let (part, local, gamma) = match mode {
        SchemeMode::Block => (inputs.fine, inputs.local, inputs.gamma_eq),
        SchemeMode::Basic => {
            basic = single_block(inputs.offsets);
            (&basic.0, &basic.1, inputs.gamma_global)
        }
    };
    let mut tasks = Vec::new();
    for k in k_min..=k_max {
        let sets = stage_sets(k, part, inputs.offsets, inputs.pattern);
        let prior_orders: Vec<u32> = {
            let mut v = vec![0; sets.prior.len()];
            for (p, &r) in sets.prior.iter().enumerate() {
                v[part.col_perm[p]] = r as u32;
            }
            v
        };
        for l in (0..part.n_blocks()).rev() {
            let b = &sets.blocks[l];
            if b.equations.is_empty() && b.unknowns.is_empty() {
                continue;
            }
            let rows = |v: &[(usize, i64)]| {
                let mut out: Vec<(usize, u32)> = v.iter().map(|&(p, r)| (part.row_perm[p], r as u32)).collect();
                out.sort_unstable();
                out
            };
            let cols = |v: &[(usize, i64)]| {
                let mut out: Vec<(usize, u32)> = v.iter().map(|&(p, r)| (part.col_perm[p], r as u32)).collect();
                out.sort_unstable();
                out
            };
            let action = match classify_stage(k, l, part, local, gamma) {
                None => Action::InitialValues,
                Some((determinacy, linearity)) => Action::Solve {
                    determinacy,
                    linearity,
                },
            };
            tasks.push(StageTask {
                stage: k,
                block: l,
                local_stage: k + local.lead_times[l],
                equations: rows(&b.equations),
                unknowns: cols(&b.unknowns),
                cross_block_inputs: cols(&b.later_used),
                prior_orders: prior_orders.clone(),
                action,
            });
        }
    }
    Schedule { mode, tasks }
}
