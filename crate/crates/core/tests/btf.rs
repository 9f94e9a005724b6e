mod common;

use daestruct::btf::{coarse_btf, fine_btf, is_strong_hall, local_offsets, BlockPartition};
use daestruct::sigma::{canonical_offsets, highest_value_transversal, jacobian_pattern, Transversal};
use proptest::prelude::*;

fn is_permutation(p: &[usize]) -> bool {
    let mut s = p.to_vec();
    s.sort_unstable();
    s == (0..p.len()).collect::<Vec<_>>()
}

fn check_partition(part: &BlockPartition, t: &Transversal) -> Result<(), TestCaseError> {
    let n = t.assignment.len();
    prop_assert!(is_permutation(&part.row_perm) && is_permutation(&part.col_perm));
    let rows: Vec<usize> = part.blocks.iter().flat_map(|b| b.rows.clone()).collect();
    let cols: Vec<usize> = part.blocks.iter().flat_map(|b| b.cols.clone()).collect();
    prop_assert_eq!(&rows, &part.row_perm);
    prop_assert_eq!(&cols, &part.col_perm);
    prop_assert_eq!(rows.len(), n);
    let br = part.block_of_row();
    let bc = part.block_of_col();
    for (i, &j) in t.assignment.iter().enumerate() {
        prop_assert_eq!(br[i], bc[j], "transversal leaves its block");
    }
    for b in &part.blocks {
        prop_assert!(b.rows.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(b.cols.windows(2).all(|w| w[0] < w[1]));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fine_blocks_are_upper_triangular_and_irreducible(seed in any::<u64>(), n in 1usize..=7) {
        let sm = common::random_sigma(&mut common::rng(seed), n);
        let t = highest_value_transversal(&sm).unwrap();
        let offs = canonical_offsets(&sm, &t).unwrap();
        let pat = jacobian_pattern(&sm, &offs);
        let fine = fine_btf(&pat, &t);
        check_partition(&fine, &t)?;
        let br = fine.block_of_row();
        let bc = fine.block_of_col();
        for (i, j) in pat.s0_entries() {
            prop_assert!(br[i] <= bc[j], "S0 entry ({}, {}) below the diagonal", i, j);
        }
        for b in &fine.blocks {
            let p: Vec<Vec<bool>> = b.rows.iter().map(|&i| b.cols.iter().map(|&j| pat.in_s0(i, j)).collect()).collect();
            prop_assert!(is_strong_hall(&p));
        }
    }

    #[test]
    fn coarse_blocks_are_unions_of_fine_blocks(seed in any::<u64>(), n in 1usize..=7) {
        let sm = common::random_sigma(&mut common::rng(seed), n);
        let t = highest_value_transversal(&sm).unwrap();
        let offs = canonical_offsets(&sm, &t).unwrap();
        let pat = jacobian_pattern(&sm, &offs);
        let coarse = coarse_btf(&pat, &t);
        let fine = fine_btf(&pat, &t);
        check_partition(&coarse, &t)?;
        let cr = coarse.block_of_row();
        let cc = coarse.block_of_col();
        for (i, j) in pat.s_entries() {
            prop_assert!(cr[i] <= cc[j]);
        }
        for b in &fine.blocks {
            prop_assert!(b.rows.iter().all(|&i| cr[i] == cr[b.rows[0]]));
        }
        prop_assert!(coarse.n_blocks() <= fine.n_blocks());
    }

    #[test]
    fn local_offsets_are_canonical_with_uniform_lead_time(seed in any::<u64>(), n in 1usize..=6) {
        let sm = common::random_sigma(&mut common::rng(seed), n);
        let t = highest_value_transversal(&sm).unwrap();
        let offs = canonical_offsets(&sm, &t).unwrap();
        let pat = jacobian_pattern(&sm, &offs);
        let fine = fine_btf(&pat, &t);
        let local = local_offsets(&sm, &fine, &offs, &t).unwrap();
        for ((l, b), start) in fine.blocks.iter().enumerate().zip(fine.block_starts()) {
            let k = local.lead_times[l];
            prop_assert!(k >= 0);
            for q in 0..b.size() {
                prop_assert_eq!(offs.c[b.rows[q]] - local.c_hat[start + q], k);
                prop_assert_eq!(offs.d[b.cols[q]] - local.d_hat[start + q], k);
            }
            let sub = sm.submatrix(&b.rows, &b.cols);
            let assignment: Vec<usize> =
                b.rows.iter().map(|&i| b.cols.iter().position(|&j| j == t.assignment[i]).unwrap()).collect();
            let value = (0..b.size()).map(|q| sub.get(q, assignment[q]).finite().unwrap()).sum();
            let st = Transversal { assignment, value };
            let own = canonical_offsets(&sub, &st).unwrap();
            prop_assert_eq!(&own.c[..], &local.c_hat[start..start + b.size()]);
            prop_assert_eq!(&own.d[..], &local.d_hat[start..start + b.size()]);
        }
    }
}

#[test]
fn two_pendula_coarse_blocks() {
    let m = common::two_pendula();
    let a = daestruct::Analysis::run(&m).unwrap();
    let rows: Vec<Vec<usize>> = a.coarse.blocks.iter().map(|b| b.rows.clone()).collect();
    assert_eq!(rows, vec![vec![3, 4, 5], vec![0, 1, 2]]);
}

#[test]
fn strong_hall_examples() {
    assert!(is_strong_hall(&[vec![true]]));
    assert!(is_strong_hall(&[vec![true, true], vec![true, true]]));
    assert!(!is_strong_hall(&[vec![true, true], vec![false, true]]));
}
