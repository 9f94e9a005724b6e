//! Quasilinearity analysis.
//!
//! For equation `i`, the set `M_i` selects the columns whose highest
//! derivatives are the stage-0 unknowns of `f_i`. Each node `v` in the
//! equation's sub-list gets an offset `alpha_i(v) = min_{j in M_i}
//! (sigma_ij - sigma_j(v))`: zero on nodes that touch those unknowns, positive
//! or infinite elsewhere. A node with positive offset is independent (`I`)
//! of them; a zero-offset node is linear (`L`) or nonlinear (`N`) in them.
//!
//! Two routes compute the same verdicts: [`ql_analysis`] walks one
//! equation at a time and stops at the first `N` node, while
//! [`vectorized_ql`] sweeps the whole code list once with an `n`-vector per
//! node, encoding `N` as offset `-1`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::btf::{BlockPartition, LocalOffsets};
use crate::codelist::{BinaryOp, CodeList, NodeId, NodeKind, UnaryOp};
use crate::sigma::{ExtInt, GlobalOffsets, SignatureMatrix};

/// Integer offset extended by `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Offset {
    Fin(i64),
    Inf,
}

impl Offset {
    fn minus(self, p: u32) -> Offset {
        match self {
            Offset::Fin(a) => Offset::Fin(a - p as i64),
            Offset::Inf => Offset::Inf,
        }
    }

    fn is_zero(self) -> bool {
        self == Offset::Fin(0)
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offset::Fin(a) => write!(f, "{a}"),
            Offset::Inf => write!(f, "inf"),
        }
    }
}

/// QLity of a node, ordered by severity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QlCode {
    I,
    L,
    N,
}

impl fmt::Display for QlCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QlCode::I => "I",
            QlCode::L => "L",
            QlCode::N => "N",
        };
        f.write_str(s)
    }
}

/// Whether `M_i` ranges over all columns or only the equation's own block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope<'a> {
    Global,
    Block(&'a BlockPartition),
}

/// `M_i = { j : sigma_ij = d_j - c_i }`, restricted to `i`'s block in block
/// scope. Sorted ascending.
pub fn m_sets(sm: &SignatureMatrix, offs: &GlobalOffsets, scope: Scope<'_>) -> Vec<Vec<usize>> {
    let n = sm.n();
    let blocks = match scope {
        Scope::Global => None,
        Scope::Block(part) => Some((part.block_of_row(), part.block_of_col())),
    };
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sm.get(i, j) == ExtInt::Fin(offs.d[j] - offs.c[i]))
                .filter(|&j| blocks.as_ref().is_none_or(|(br, bc)| br[i] == bc[j]))
                .collect()
        })
        .collect()
}

fn input_offset(j: usize, m: &[usize], row: &[ExtInt]) -> Offset {
    if m.binary_search(&j).is_ok() {
        Offset::Fin(row[j].finite().expect("M_i selects finite entries"))
    } else {
        Offset::Inf
    }
}

/// Whether the node's operation is linear in operand `which`, given the
/// offsets of all its operands.
fn phi_linear(kind: &NodeKind, which: usize, alphas: &[Offset]) -> bool {
    let independent = |k: usize| alphas[k] > Offset::Fin(0);
    match kind {
        NodeKind::Unary(op, _) => matches!(op, UnaryOp::Neg | UnaryOp::Identity),
        NodeKind::Binary(op, a, b) => match op {
            BinaryOp::Add | BinaryOp::Sub => true,
            // x*x is quadratic even though it is one operand twice
            BinaryOp::Mul => a != b && independent(1 - which),
            BinaryOp::Div => which == 0 && a != b,
        },
        NodeKind::Pow(_, k) => *k == 1,
        NodeKind::Deriv(..) | NodeKind::Time | NodeKind::Var(_) | NodeKind::Const(_) => true,
    }
}

/// Offsets and QLities of one equation's sub-list. Entries for nodes outside
/// the sub-list are `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquationQl {
    pub m_set: Vec<usize>,
    pub offsets: Vec<Option<Offset>>,
    pub code: QlCode,
    /// First node, in code-list order, whose QLity is `N`.
    pub first_n: Option<NodeId>,
}

struct Walk {
    offsets: Vec<Option<Offset>>,
    codes: Vec<Option<QlCode>>,
    first_n: Option<NodeId>,
}

fn walk(cl: &CodeList, i: usize, m: &[usize], row: &[ExtInt], early_exit: bool) -> Walk {
    let mask = cl.equation_mask(i);
    let mut offsets: Vec<Option<Offset>> = vec![None; cl.len()];
    let mut codes = vec![None; cl.len()];
    let mut first_n = None;
    for (k, node) in cl.nodes().iter().enumerate() {
        if !mask[k] {
            continue;
        }
        let (alpha, code) = match *node {
            NodeKind::Time | NodeKind::Const(_) => (Offset::Inf, QlCode::I),
            NodeKind::Var(j) => {
                let a = input_offset(j, m, row);
                (a, if a.is_zero() { QlCode::L } else { QlCode::I })
            }
            NodeKind::Deriv(u, p) => {
                let a = offsets[u.0].unwrap().minus(p);
                let code = if !a.is_zero() {
                    QlCode::I
                } else if p > 0 {
                    QlCode::L
                } else {
                    codes[u.0].unwrap()
                };
                (a, code)
            }
            _ => {
                let ops: Vec<NodeId> = node.operands().collect();
                let alphas: Vec<Offset> = ops.iter().map(|u| offsets[u.0].unwrap()).collect();
                let a = alphas.iter().copied().min().unwrap();
                let code = if !a.is_zero() {
                    QlCode::I
                } else {
                    let linear = ops.iter().enumerate().all(|(w, u)| {
                        !alphas[w].is_zero() || (codes[u.0] == Some(QlCode::L) && phi_linear(node, w, &alphas))
                    });
                    if linear {
                        QlCode::L
                    } else {
                        QlCode::N
                    }
                };
                (a, code)
            }
        };
        offsets[k] = Some(alpha);
        codes[k] = Some(code);
        if code == QlCode::N && first_n.is_none() {
            first_n = Some(NodeId(k));
            if early_exit {
                break;
            }
        }
    }
    Walk {
        offsets,
        codes,
        first_n,
    }
}

/// Offsets of every node in equation `i`'s sub-list.
pub fn propagate_offsets(cl: &CodeList, i: usize, m: &[usize], row: &[ExtInt]) -> Vec<Option<Offset>> {
    walk(cl, i, m, row, false).offsets
}

/// QLity of every node in equation `i`'s sub-list, without early exit.
pub fn node_qlities(cl: &CodeList, i: usize, m: &[usize], row: &[ExtInt]) -> Vec<Option<QlCode>> {
    walk(cl, i, m, row, false).codes
}

/// QLity of `f_i`, stopping at the first `N` node. Returns the code and
/// that node.
pub fn ql_analysis(cl: &CodeList, i: usize, m: &[usize], row: &[ExtInt]) -> (QlCode, Option<NodeId>) {
    let w = walk(cl, i, m, row, true);
    match w.first_n {
        Some(v) => (QlCode::N, Some(v)),
        // with an empty M_i every offset is infinite; the output reads as L
        None => (w.codes[cl.output(i).0].unwrap().max(QlCode::L), None),
    }
}

/// Full per-equation analysis: offsets over the whole sub-list plus the
/// early-exit verdict.
pub fn analyze_equation(cl: &CodeList, i: usize, m: &[usize], row: &[ExtInt]) -> EquationQl {
    let offsets = propagate_offsets(cl, i, m, row);
    let (code, first_n) = ql_analysis(cl, i, m, row);
    EquationQl {
        m_set: m.to_vec(),
        offsets,
        code,
        first_n,
    }
}

const N_CODE: Offset = Offset::Fin(-1);

/// One sweep over the code list carrying an `n`-vector of encoded offsets
/// per node: `0` is `L`, `-1` is `N`, positive or `inf` is `I`. Component `i`
/// is meaningful only on nodes of `f_i`'s sub-list.
fn encoded_sweep(cl: &CodeList, sm: &SignatureMatrix, m: &[Vec<usize>]) -> Vec<Vec<Offset>> {
    let n = sm.n();
    let mut enc: Vec<Vec<Offset>> = Vec::with_capacity(cl.len());
    for node in cl.nodes() {
        let v = match *node {
            NodeKind::Time | NodeKind::Const(_) => vec![Offset::Inf; n],
            NodeKind::Var(j) => (0..n).map(|i| input_offset(j, &m[i], sm.row(i))).collect(),
            NodeKind::Deriv(u, 0) => enc[u.0].clone(),
            NodeKind::Deriv(u, p) => enc[u.0].iter().map(|a| a.minus(p)).collect(),
            _ => {
                let ops: Vec<NodeId> = node.operands().collect();
                (0..n)
                    .map(|i| {
                        let e: Vec<Offset> = ops.iter().map(|u| enc[u.0][i]).collect();
                        let a = e.iter().copied().min().unwrap();
                        if a < Offset::Fin(0) {
                            return a;
                        }
                        if a > Offset::Fin(0) {
                            return a;
                        }
                        let alphas: Vec<Offset> = e
                            .iter()
                            .map(|&x| if x == N_CODE { Offset::Fin(0) } else { x })
                            .collect();
                        let linear = e
                            .iter()
                            .enumerate()
                            .all(|(w, &x)| x > Offset::Fin(0) || phi_linear(node, w, &alphas));
                        if linear {
                            Offset::Fin(0)
                        } else {
                            N_CODE
                        }
                    })
                    .collect()
            }
        };
        enc.push(v);
    }
    enc
}

fn decode(cl: &CodeList, i: usize, m: &[usize], enc: &[Vec<Offset>]) -> EquationQl {
    let mask = cl.equation_mask(i);
    let mut offsets = vec![None; cl.len()];
    let mut first_n = None;
    for k in (0..cl.len()).filter(|&k| mask[k]) {
        let e = enc[k][i];
        if e == N_CODE && first_n.is_none() {
            first_n = Some(NodeId(k));
        }
        offsets[k] = Some(if e == N_CODE { Offset::Fin(0) } else { e });
    }
    let code = match enc[cl.output(i).0][i] {
        N_CODE => QlCode::N,
        Offset::Fin(0) | Offset::Inf => QlCode::L,
        other => unreachable!("output offset {other} of equation {i}"),
    };
    EquationQl {
        m_set: m.to_vec(),
        offsets,
        code,
        first_n,
    }
}

/// QL verdicts for all equations in both scopes, and the derived flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QlReport {
    pub global: Vec<EquationQl>,
    pub blockwise: Vec<EquationQl>,
    /// `gamma_i`: blockwise code of `f_i` is `L`.
    pub gamma_eq: Vec<bool>,
    /// `gamma_l`: every equation of block `l` with `c_hat = 0` has `gamma_i`.
    pub gamma_block: Vec<bool>,
    /// Every equation's global code is `L`.
    pub gamma_dae: bool,
}

impl QlReport {
    pub fn global_codes(&self) -> Vec<QlCode> {
        self.global.iter().map(|e| e.code).collect()
    }

    pub fn block_codes(&self) -> Vec<QlCode> {
        self.blockwise.iter().map(|e| e.code).collect()
    }
}

/// Vectorized analysis over the shared code list, once per scope.
pub fn vectorized_ql(
    cl: &CodeList,
    sm: &SignatureMatrix,
    offs: &GlobalOffsets,
    part: &BlockPartition,
    local: &LocalOffsets,
) -> QlReport {
    let n = sm.n();
    let m_global = m_sets(sm, offs, Scope::Global);
    let m_block = m_sets(sm, offs, Scope::Block(part));
    let enc_global = encoded_sweep(cl, sm, &m_global);
    let enc_block = encoded_sweep(cl, sm, &m_block);
    let global: Vec<EquationQl> = (0..n).map(|i| decode(cl, i, &m_global[i], &enc_global)).collect();
    let blockwise: Vec<EquationQl> = (0..n).map(|i| decode(cl, i, &m_block[i], &enc_block)).collect();
    let gamma_eq: Vec<bool> = blockwise.iter().map(|e| e.code == QlCode::L).collect();
    let starts = part.block_starts();
    let gamma_block = part
        .blocks
        .iter()
        .zip(&starts)
        .map(|(b, &s)| {
            (0..b.size())
                .filter(|&k| local.c_hat[s + k] == 0)
                .all(|k| gamma_eq[part.row_perm[s + k]])
        })
        .collect();
    let gamma_dae = global.iter().all(|e| e.code == QlCode::L);
    QlReport {
        global,
        blockwise,
        gamma_eq,
        gamma_block,
        gamma_dae,
    }
}

/// Per-equation route for both scopes, used to cross-check
/// [`vectorized_ql`].
pub fn per_equation_ql(
    cl: &CodeList,
    sm: &SignatureMatrix,
    offs: &GlobalOffsets,
    scope: Scope<'_>,
) -> Vec<EquationQl> {
    m_sets(sm, offs, scope)
        .iter()
        .enumerate()
        .map(|(i, m)| analyze_equation(cl, i, m, sm.row(i)))
        .collect()
}
