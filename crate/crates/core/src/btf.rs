//! Coarse and fine block triangular forms, local offsets and lead times.
//!
//! Rows and columns are paired by the transversal. A column digraph has an
//! edge `j -> j'` when the row matched to `j'` has an entry in column `j`;
//! its strongly connected components are the diagonal blocks. Blocks are
//! ordered so that the permuted matrix is block upper triangular, which puts
//! the block with no dependencies last: blocks are solved `p, p-1, ..., 1`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sigma::{canonical_offsets, GlobalOffsets, JacobianPattern, SigmaError, SignatureMatrix, Transversal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BtfError {
    #[error("lead time is not uniform within block {block}")]
    UniformityViolation { block: usize },
    #[error(transparent)]
    Sigma(#[from] SigmaError),
}

/// One diagonal block; both lists hold original indices in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Block {
    pub fn size(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
    /// Permuted position to original equation index.
    pub row_perm: Vec<usize>,
    /// Permuted position to original variable index.
    pub col_perm: Vec<usize>,
}

impl BlockPartition {
    fn from_blocks(blocks: Vec<Block>) -> Self {
        let row_perm = blocks.iter().flat_map(|b| b.rows.iter().copied()).collect();
        let col_perm = blocks.iter().flat_map(|b| b.cols.iter().copied()).collect();
        BlockPartition {
            blocks,
            row_perm,
            col_perm,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Block index (0-based) of each original equation.
    pub fn block_of_row(&self) -> Vec<usize> {
        let mut out = vec![0; self.row_perm.len()];
        for (l, b) in self.blocks.iter().enumerate() {
            for &i in &b.rows {
                out[i] = l;
            }
        }
        out
    }

    /// Block index (0-based) of each original variable.
    pub fn block_of_col(&self) -> Vec<usize> {
        let mut out = vec![0; self.col_perm.len()];
        for (l, b) in self.blocks.iter().enumerate() {
            for &j in &b.cols {
                out[j] = l;
            }
        }
        out
    }

    /// Permuted position of each original equation.
    pub fn row_position(&self) -> Vec<usize> {
        invert(&self.row_perm)
    }

    /// Permuted position of each original variable.
    pub fn col_position(&self) -> Vec<usize> {
        invert(&self.col_perm)
    }

    /// First permuted position of each block.
    pub fn block_starts(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                let s = *acc;
                *acc += b.size();
                Some(s)
            })
            .collect()
    }
}

fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &v) in perm.iter().enumerate() {
        inv[v] = k;
    }
    inv
}

/// Local canonical offsets (permuted order) and per-block lead times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOffsets {
    pub c_hat: Vec<i64>,
    pub d_hat: Vec<i64>,
    pub lead_times: Vec<i64>,
}

impl LocalOffsets {
    /// Largest `c_hat` in each block.
    pub fn max_c_hat(&self, part: &BlockPartition) -> Vec<i64> {
        Self::block_max(part, &self.c_hat)
    }

    /// Largest `d_hat` in each block.
    pub fn max_d_hat(&self, part: &BlockPartition) -> Vec<i64> {
        Self::block_max(part, &self.d_hat)
    }

    fn block_max(part: &BlockPartition, v: &[i64]) -> Vec<i64> {
        part.block_starts()
            .iter()
            .zip(&part.blocks)
            .map(|(&s, b)| v[s..s + b.size()].iter().copied().max().unwrap_or(0))
            .collect()
    }
}

/// Block form on the full support `S`.
pub fn coarse_btf(pattern: &JacobianPattern, t: &Transversal) -> BlockPartition {
    block_form(pattern.n(), |i, j| pattern.in_s(i, j), t)
}

/// Block form on the Jacobian support `S0`.
pub fn fine_btf(pattern: &JacobianPattern, t: &Transversal) -> BlockPartition {
    block_form(pattern.n(), |i, j| pattern.in_s0(i, j), t)
}

fn block_form(n: usize, has: impl Fn(usize, usize) -> bool, t: &Transversal) -> BlockPartition {
    let owner = t.column_owner();
    // adj[j']: columns j the block of j' depends on
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|jp| (0..n).filter(|&j| j != jp && has(owner[jp], j)).collect())
        .collect();
    let (comp, n_comp) = tarjan(&adj);

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for j in 0..n {
        members[comp[j]].push(j);
    }
    let key: Vec<usize> = members
        .iter()
        .map(|cols| cols.iter().map(|&j| owner[j]).min().unwrap())
        .collect();

    // X -> Y when X depends on Y; X must be placed before Y.
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    let mut indeg = vec![0usize; n_comp];
    for jp in 0..n {
        for &j in &adj[jp] {
            let (x, y) = (comp[jp], comp[j]);
            if x != y && !succ[x].contains(&y) {
                succ[x].push(y);
                indeg[y] += 1;
            }
        }
    }
    let mut ready: std::collections::BTreeSet<(usize, usize)> =
        (0..n_comp).filter(|&x| indeg[x] == 0).map(|x| (key[x], x)).collect();
    let mut blocks = Vec::with_capacity(n_comp);
    while let Some(&(k, x)) = ready.iter().next() {
        ready.remove(&(k, x));
        let cols = members[x].clone();
        let mut rows: Vec<usize> = cols.iter().map(|&j| owner[j]).collect();
        rows.sort_unstable();
        blocks.push(Block { rows, cols });
        for &y in &succ[x] {
            indeg[y] -= 1;
            if indeg[y] == 0 {
                ready.insert((key[y], y));
            }
        }
    }
    BlockPartition::from_blocks(blocks)
}

/// Strongly connected components; returns the component of each vertex.
fn tarjan(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let n = adj.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut n_comp = 0;
    let mut counter = 0;
    for s in 0..n {
        if index[s] != UNSEEN {
            continue;
        }
        index[s] = counter;
        low[s] = counter;
        counter += 1;
        stack.push(s);
        on_stack[s] = true;
        let mut calls = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut next)) = calls.last_mut() {
            if *next < adj[v].len() {
                let w = adj[v][*next];
                *next += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some(&(u, _)) = calls.last() {
                low[u] = low[u].min(low[v]);
            }
            if low[v] == index[v] {
                loop {
                    let w = stack.pop().unwrap();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                    if w == v {
                        break;
                    }
                }
                n_comp += 1;
            }
        }
    }
    (comp, n_comp)
}

/// Canonical offsets of each block's own submatrix and the lead times
/// `K_l = c_i - c_hat_i = d_j - d_hat_j`, which must be uniform per block.
pub fn local_offsets(
    sm: &SignatureMatrix,
    part: &BlockPartition,
    offs: &GlobalOffsets,
    t: &Transversal,
) -> Result<LocalOffsets, BtfError> {
    let mut c_hat = Vec::with_capacity(sm.n());
    let mut d_hat = Vec::with_capacity(sm.n());
    let mut lead_times = Vec::with_capacity(part.n_blocks());
    for (l, b) in part.blocks.iter().enumerate() {
        let sub = sm.submatrix(&b.rows, &b.cols);
        let assignment: Vec<usize> = b
            .rows
            .iter()
            .map(|&i| b.cols.iter().position(|&j| j == t.assignment[i]))
            .collect::<Option<_>>()
            .ok_or(BtfError::UniformityViolation { block: l })?;
        let value = assignment
            .iter()
            .enumerate()
            .filter_map(|(r, &c)| sub.get(r, c).finite())
            .sum();
        let local = canonical_offsets(&sub, &Transversal { assignment, value })?;
        let k = offs.c[b.rows[0]] - local.c[0];
        let uniform = b.rows.iter().zip(&local.c).all(|(&i, &ch)| offs.c[i] - ch == k)
            && b.cols.iter().zip(&local.d).all(|(&j, &dh)| offs.d[j] - dh == k);
        if !uniform || k < 0 {
            return Err(BtfError::UniformityViolation { block: l });
        }
        c_hat.extend(local.c);
        d_hat.extend(local.d);
        lead_times.push(k);
    }
    Ok(LocalOffsets {
        c_hat,
        d_hat,
        lead_times,
    })
}

/// Every proper nonempty set of `r` columns touches at least `r + 1` rows.
/// `pattern[i][j]` is the entry at row `i`, column `j`. Exhaustive over
/// column subsets, so only for small blocks (at most 24 columns).
pub fn is_strong_hall(pattern: &[Vec<bool>]) -> bool {
    let n = pattern.len();
    assert!(n <= 24, "exhaustive Strong Hall check limited to 24 columns");
    let col_rows: Vec<u32> = (0..n)
        .map(|j| (0..n).filter(|&i| pattern[i][j]).fold(0u32, |m, i| m | (1 << i)))
        .collect();
    let full = (1u32 << n) - 1;
    (1..full).all(|subset| {
        let rows = (0..n)
            .filter(|&j| subset & (1 << j) != 0)
            .fold(0u32, |m, j| m | col_rows[j]);
        rows.count_ones() > subset.count_ones()
    })
}
