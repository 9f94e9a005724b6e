//! Canonical offsets by dual fixed-point iteration.

use super::{GlobalOffsets, SigmaError, SignatureMatrix, Transversal};

/// Smallest valid offsets for `sm` with equality on the transversal `t`.
///
/// Starting from `c = 0`, alternately set `d_j = max_i (sigma_ij + c_i)` and
/// `c_i = d_{T(i)} - sigma_{i,T(i)}` until nothing changes. Both updates are
/// monotone, so the first fixed point is the elementwise minimum.
pub fn canonical_offsets(sm: &SignatureMatrix, t: &Transversal) -> Result<GlobalOffsets, SigmaError> {
    let n = sm.n();
    if t.assignment.len() != n || (0..n).any(|i| !sm.get(i, t.assignment[i]).is_finite()) {
        return Err(SigmaError::InvalidTransversal);
    }
    // Each sweep raises some c_i by at least one, and canonical c_i never
    // exceeds n * max sigma.
    let limit = n * n * (1 + sm.max_finite() as usize) + 1;
    let mut c = vec![0i64; n];
    let mut d = vec![0i64; n];
    for _ in 0..limit {
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = (0..n)
                .filter_map(|i| sm.get(i, j).finite().map(|s| s + c[i]))
                .max()
                .unwrap_or(0);
        }
        let mut changed = false;
        for (i, (ci, &j)) in c.iter_mut().zip(&t.assignment).enumerate() {
            let new = d[j] - sm.get(i, j).finite().unwrap();
            if new != *ci {
                *ci = new;
                changed = true;
            }
        }
        if !changed {
            return Ok(GlobalOffsets { c, d });
        }
    }
    Err(SigmaError::OffsetIterationLimit(limit))
}
