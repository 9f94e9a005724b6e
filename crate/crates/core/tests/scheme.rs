mod common;

use std::collections::{BTreeMap, BTreeSet};

use daestruct::scheme::{basic_init_set, stage_sets, Action, Determinacy, InitSets, Linearity, Schedule, SchemeMode};
use daestruct::Analysis;
use proptest::prelude::*;

fn analyzed(seed: u64, n: usize, depth: usize) -> Option<Analysis> {
    Analysis::run(&common::random_model(&mut common::rng(seed), n, depth)).ok()
}

/// Init sets read off the schedule: initial-value tasks give values,
/// underdetermined and nonlinear square stage-0 tasks give guesses.
fn init_from_schedule(s: &Schedule) -> InitSets {
    let mut out = InitSets::default();
    for t in &s.tasks {
        match t.action {
            Action::InitialValues => out.values.extend(t.unknowns.iter().copied()),
            Action::Solve {
                determinacy: Determinacy::Underdetermined,
                ..
            } => out.guesses.extend(t.unknowns.iter().copied()),
            Action::Solve {
                determinacy: Determinacy::Square,
                linearity: Linearity::Nonlinear,
            } if t.local_stage == 0 => out.guesses.extend(t.unknowns.iter().copied()),
            _ => {}
        }
    }
    out
}

fn check_conservation(a: &Analysis, mode: SchemeMode, k_max: i64) -> Result<(), TestCaseError> {
    let s = a.schedule(a.k_d(), k_max, mode);
    let n = a.offsets.c.len();
    let mut eqs: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    let mut unk: BTreeMap<(usize, u32), usize> = BTreeMap::new();
    for t in &s.tasks {
        for &p in &t.equations {
            *eqs.entry(p).or_default() += 1;
            prop_assert_eq!(p.1 as i64, t.stage + a.offsets.c[p.0]);
        }
        for &p in &t.unknowns {
            *unk.entry(p).or_default() += 1;
            prop_assert_eq!(p.1 as i64, t.stage + a.offsets.d[p.0]);
        }
        for j in 0..n {
            prop_assert_eq!(t.prior_orders[j] as i64, (t.stage + a.offsets.d[j]).max(0));
        }
    }
    for i in 0..n {
        for r in 0..=(k_max + a.offsets.c[i]).max(-1) {
            prop_assert_eq!(eqs.remove(&(i, r as u32)), Some(1));
        }
    }
    for j in 0..n {
        for r in 0..=(k_max + a.offsets.d[j]) {
            prop_assert_eq!(unk.remove(&(j, r as u32)), Some(1));
        }
    }
    prop_assert!(eqs.is_empty() && unk.is_empty());
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn every_derivative_is_solved_exactly_once(seed in any::<u64>(), n in 1usize..=4, k in 0i64..=3) {
        let Some(a) = analyzed(seed, n, 4) else { return Ok(()) };
        check_conservation(&a, SchemeMode::Block, k)?;
        check_conservation(&a, SchemeMode::Basic, k)?;
    }

    #[test]
    fn underdetermined_stages_have_more_unknowns(seed in any::<u64>(), n in 1usize..=4) {
        let Some(a) = analyzed(seed, n, 4) else { return Ok(()) };
        let starts = a.fine.block_starts();
        for k in a.k_d()..0 {
            let s = stage_sets(k, &a.fine, &a.offsets, &a.pattern);
            for (l, b) in a.fine.blocks.iter().enumerate() {
                let c_hat = &a.local.c_hat[starts[l]..starts[l] + b.size()];
                let set = &s.blocks[l];
                if k + a.local.lead_times[l] < 0 && c_hat.iter().min() == Some(&0) && !set.unknowns.is_empty() {
                    prop_assert!(set.equations.len() < set.unknowns.len());
                }
            }
        }
    }

    #[test]
    fn block_init_matches_schedule(seed in any::<u64>(), n in 1usize..=4) {
        let Some(a) = analyzed(seed, n, 4) else { return Ok(()) };
        prop_assert_eq!(&init_from_schedule(&a.schedule(a.k_d(), 0, SchemeMode::Block)), &a.init_block);
    }

    #[test]
    fn basic_init_closed_form(seed in any::<u64>(), n in 1usize..=4) {
        let Some(a) = analyzed(seed, n, 4) else { return Ok(()) };
        let g = i64::from(a.ql.gamma_dae);
        let count: i64 = a.offsets.d.iter().map(|d| d + 1 - g).sum();
        prop_assert_eq!(a.init_basic.len() as i64, count);
        prop_assert!(a.init_basic.values.is_empty());
        let needed = init_from_schedule(&a.schedule(a.k_d(), 0, SchemeMode::Basic));
        prop_assert!(needed.guesses.union(&needed.values).all(|p| a.init_basic.guesses.contains(p)));
        prop_assert!(a.init_block.len() <= a.init_basic.len());
    }

    #[test]
    fn cross_block_inputs_come_from_earlier_tasks(seed in any::<u64>(), n in 1usize..=4) {
        let Some(a) = analyzed(seed, n, 4) else { return Ok(()) };
        let s = a.schedule(a.k_d(), 1, SchemeMode::Block);
        let mut done: BTreeSet<(usize, u32)> = BTreeSet::new();
        for t in &s.tasks {
            prop_assert!(t.cross_block_inputs.iter().all(|p| done.contains(p)));
            done.extend(t.unknowns.iter().copied());
        }
    }

    #[test]
    fn schedules_round_trip_through_json(seed in any::<u64>(), n in 1usize..=4) {
        let Some(a) = analyzed(seed, n, 3) else { return Ok(()) };
        let s = a.schedule(a.k_d(), 1, SchemeMode::Block);
        let text = serde_json::to_string(&s).unwrap();
        prop_assert_eq!(serde_json::from_str::<Schedule>(&text).unwrap(), s);
    }
}

#[test]
fn pendulum_basic_init_has_seven_guesses() {
    let a = Analysis::run(&common::pendulum()).unwrap();
    assert_eq!(a.init_basic.len(), 7);
    assert_eq!(basic_init_set(&a.offsets, true).len(), 4);
}

#[test]
fn two_pendula_block_four_guesses() {
    let a = Analysis::run(&common::two_pendula()).unwrap();
    let want: BTreeSet<(usize, u32)> = [(0, 0), (0, 1), (1, 0), (1, 1)].into();
    let b4: BTreeSet<_> = a.init_block.guesses.iter().filter(|p| p.0 < 3).copied().collect();
    assert_eq!(b4, want);
}
