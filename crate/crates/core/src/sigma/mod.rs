//! Signature matrix, highest-value transversal, canonical offsets and the
//! System Jacobian sparsity pattern.

mod assignment;
mod offsets;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codelist::{CodeList, DaeModel, NodeKind};

pub use assignment::highest_value_transversal;
pub use offsets::canonical_offsets;

/// Integer extended by a bottom element `-inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Option<i64>", into = "Option<i64>")]
pub enum ExtInt {
    NegInf,
    Fin(i64),
}

impl ExtInt {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtInt::Fin(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            ExtInt::Fin(v) => Some(v),
            ExtInt::NegInf => None,
        }
    }

    /// `self + k`, with `-inf + k = -inf`.
    pub fn shift(self, k: i64) -> ExtInt {
        match self {
            ExtInt::Fin(v) => ExtInt::Fin(v + k),
            ExtInt::NegInf => ExtInt::NegInf,
        }
    }
}

impl PartialOrd for ExtInt {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtInt {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtInt::NegInf, ExtInt::NegInf) => Ordering::Equal,
            (ExtInt::NegInf, _) => Ordering::Less,
            (_, ExtInt::NegInf) => Ordering::Greater,
            (ExtInt::Fin(a), ExtInt::Fin(b)) => a.cmp(b),
        }
    }
}

impl From<Option<i64>> for ExtInt {
    fn from(v: Option<i64>) -> Self {
        v.map_or(ExtInt::NegInf, ExtInt::Fin)
    }
}

impl From<ExtInt> for Option<i64> {
    fn from(v: ExtInt) -> Self {
        v.finite()
    }
}

impl fmt::Display for ExtInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtInt::Fin(v) => write!(f, "{v}"),
            ExtInt::NegInf => write!(f, "-inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SigmaError {
    #[error("structurally ill-posed: no transversal with all entries finite")]
    StructurallyIllPosed,
    #[error("offset iteration did not converge within {0} sweeps")]
    OffsetIterationLimit(usize),
    #[error("transversal is not a permutation of finite entries")]
    InvalidTransversal,
}

/// `n x n` matrix of highest derivative orders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureMatrix {
    n: usize,
    sigma: Vec<ExtInt>,
}

impl SignatureMatrix {
    pub fn from_rows(rows: Vec<Vec<ExtInt>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "signature matrix must be square");
        SignatureMatrix {
            n,
            sigma: rows.into_iter().flatten().collect(),
        }
    }

    /// Build from `Option` entries, `None` meaning `-inf`.
    pub fn from_options(rows: &[Vec<Option<i64>>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| ExtInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> ExtInt {
        self.sigma[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[ExtInt] {
        &self.sigma[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[ExtInt]> {
        self.sigma.chunks(self.n.max(1)).take(self.n)
    }

    /// Largest finite entry, 0 when there is none.
    pub fn max_finite(&self) -> i64 {
        self.sigma.iter().filter_map(|e| e.finite()).max().unwrap_or(0).max(0)
    }

    /// Submatrix on the given rows and columns, in the given order.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SignatureMatrix {
        SignatureMatrix::from_rows(
            rows.iter()
                .map(|&i| cols.iter().map(|&j| self.get(i, j)).collect())
                .collect(),
        )
    }
}

/// Row-to-column assignment `j = T(i)` and its value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transversal {
    pub assignment: Vec<usize>,
    pub value: i64,
}

impl Transversal {
    /// Inverse permutation: the row assigned to each column.
    pub fn column_owner(&self) -> Vec<usize> {
        let mut owner = vec![0; self.assignment.len()];
        for (i, &j) in self.assignment.iter().enumerate() {
            owner[j] = i;
        }
        owner
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.assignment[i] == j
    }
}

/// Equation offsets `c` and variable offsets `d`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalOffsets {
    pub c: Vec<i64>,
    pub d: Vec<i64>,
}

impl GlobalOffsets {
    /// `d_j - c_i >= sigma_ij` on every finite entry, with equality on `t`.
    pub fn is_valid(&self, sm: &SignatureMatrix, t: &Transversal) -> bool {
        let n = sm.n();
        for i in 0..n {
            for j in 0..n {
                if let Some(s) = sm.get(i, j).finite() {
                    let gap = self.d[j] - self.c[i];
                    if gap < s || (t.contains(i, j) && gap != s) {
                        return false;
                    }
                }
            }
        }
        self.c.iter().all(|&c| c >= 0)
    }

    pub fn max_d(&self) -> i64 {
        self.d.iter().copied().max().unwrap_or(0)
    }

    pub fn max_c(&self) -> i64 {
        self.c.iter().copied().max().unwrap_or(0)
    }
}

/// `S`: finite support of the signature matrix. `S0`: positions where
/// `d_j - c_i = sigma_ij`, the support of the System Jacobian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JacobianPattern {
    n: usize,
    s: Vec<bool>,
    s0: Vec<bool>,
}

impl JacobianPattern {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn in_s(&self, i: usize, j: usize) -> bool {
        self.s[i * self.n + j]
    }

    pub fn in_s0(&self, i: usize, j: usize) -> bool {
        self.s0[i * self.n + j]
    }

    pub fn s0_entries(&self) -> Vec<(usize, usize)> {
        Self::entries(self.n, &self.s0)
    }

    pub fn s_entries(&self) -> Vec<(usize, usize)> {
        Self::entries(self.n, &self.s)
    }

    fn entries(n: usize, mask: &[bool]) -> Vec<(usize, usize)> {
        (0..n * n)
            .filter(|&k| mask[k])
            .map(|k| (k / n, k % n))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralMetrics {
    pub dof: i64,
    pub index: i64,
}

/// Signature vector of every node: entry `j` is the highest derivative order
/// of `x_j` the node depends on formally.
pub fn signature_vectors(cl: &CodeList) -> Vec<Vec<ExtInt>> {
    let n = cl.n_vars();
    let mut out: Vec<Vec<ExtInt>> = Vec::with_capacity(cl.len());
    for node in cl.nodes() {
        let v = match *node {
            NodeKind::Time | NodeKind::Const(_) => vec![ExtInt::NegInf; n],
            NodeKind::Var(j) => {
                let mut v = vec![ExtInt::NegInf; n];
                v[j] = ExtInt::Fin(0);
                v
            }
            NodeKind::Deriv(a, p) => out[a.0].iter().map(|e| e.shift(p as i64)).collect(),
            _ => {
                let mut v = vec![ExtInt::NegInf; n];
                for op in node.operands() {
                    for (acc, &e) in v.iter_mut().zip(&out[op.0]) {
                        *acc = (*acc).max(e);
                    }
                }
                v
            }
        };
        out.push(v);
    }
    out
}

/// Signature vector of each equation's output node, one row per equation.
pub fn signature_matrix(model: &DaeModel) -> SignatureMatrix {
    let cl = model.codelist();
    let vectors = signature_vectors(cl);
    SignatureMatrix::from_rows(cl.outputs().iter().map(|o| vectors[o.0].clone()).collect())
}

pub fn jacobian_pattern(sm: &SignatureMatrix, offs: &GlobalOffsets) -> JacobianPattern {
    let n = sm.n();
    let mut s = vec![false; n * n];
    let mut s0 = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            if let Some(v) = sm.get(i, j).finite() {
                s[i * n + j] = true;
                s0[i * n + j] = offs.d[j] - offs.c[i] == v;
            }
        }
    }
    JacobianPattern { n, s, s0 }
}

/// Degrees of freedom `sum d - sum c` and structural index
/// `max c + [some d_j = 0]`.
pub fn structural_metrics(offs: &GlobalOffsets) -> StructuralMetrics {
    let dof = offs.d.iter().sum::<i64>() - offs.c.iter().sum::<i64>();
    let index = offs.max_c() + i64::from(offs.d.contains(&0));
    StructuralMetrics { dof, index }
}
