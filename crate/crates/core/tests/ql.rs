mod common;

use daestruct::codelist::{BinaryOp, CodeList, NodeId, NodeKind};
use daestruct::ql::{m_sets, node_qlities, per_equation_ql, propagate_offsets, Offset, QlCode, Scope};
use daestruct::Analysis;
use proptest::prelude::*;

fn find(cl: &CodeList, pred: impl Fn(&NodeKind) -> bool) -> usize {
    cl.nodes().iter().position(pred).expect("node present")
}

fn mentions(cl: &CodeList, id: NodeId, j: usize) -> bool {
    *cl.node(id) == NodeKind::Var(j) || cl.node(id).operands().any(|o| mentions(cl, o, j))
}

const X: usize = 0;
const LAM: usize = 2;
const U: usize = 3;
const V: usize = 4;
const A: usize = 0;
const F: usize = 5;

#[test]
fn offsets_of_a() {
    let m = common::two_pendula();
    let a = Analysis::run(&m).unwrap();
    let cl = m.codelist();
    let ms = m_sets(&a.sigma, &a.offsets, Scope::Global);
    assert_eq!(ms[A], vec![X, LAM]);
    let al = propagate_offsets(cl, A, &ms[A], a.sigma.row(A));
    let xpp = find(cl, |n| *n == NodeKind::Deriv(cl.var(X), 2));
    let xl = find(cl, |n| *n == NodeKind::Binary(BinaryOp::Mul, cl.var(X), cl.var(LAM)));
    assert_eq!(al[cl.var(X).0], Some(Offset::Fin(2)));
    assert_eq!(al[cl.var(LAM).0], Some(Offset::Fin(0)));
    assert_eq!(al[xpp], Some(Offset::Fin(0)));
    assert_eq!(al[xl], Some(Offset::Fin(0)));
    assert_eq!(al[cl.output(A).0], Some(Offset::Fin(0)));
}

#[test]
fn offsets_and_qlities_of_f() {
    let m = common::two_pendula();
    let a = Analysis::run(&m).unwrap();
    let cl = m.codelist();
    let lpp = find(cl, |n| *n == NodeKind::Deriv(cl.var(LAM), 2));
    let sq = find(cl, |n| matches!(*n, NodeKind::Pow(b, 2) if mentions(cl, b, LAM)));
    let uv = find(cl, |n| matches!(*n, NodeKind::Binary(BinaryOp::Add, p, q) if mentions(cl, p, U) && mentions(cl, q, V)));

    let ms = m_sets(&a.sigma, &a.offsets, Scope::Global);
    assert_eq!(ms[F], vec![LAM, U]);
    let al = propagate_offsets(cl, F, &ms[F], a.sigma.row(F));
    assert_eq!(al[cl.var(LAM).0], Some(Offset::Fin(2)));
    assert_eq!(al[cl.var(U).0], Some(Offset::Fin(0)));
    assert_eq!(al[cl.var(V).0], Some(Offset::Inf));
    assert_eq!(al[lpp], Some(Offset::Fin(0)));
    assert_eq!(al[sq], Some(Offset::Fin(2)));
    assert_eq!(al[cl.output(F).0], Some(Offset::Fin(0)));
    let q = node_qlities(cl, F, &ms[F], a.sigma.row(F));
    assert_eq!(q[sq], Some(QlCode::I));
    assert_eq!(q[lpp], Some(QlCode::L));
    assert_eq!(q[uv], Some(QlCode::N));

    // within its block F only sees u; lambda and its derivatives are inputs
    let mb = m_sets(&a.sigma, &a.offsets, Scope::Block(&a.fine));
    assert_eq!(mb[F], vec![U]);
    let al = propagate_offsets(cl, F, &mb[F], a.sigma.row(F));
    assert_eq!(al[cl.var(V).0], Some(Offset::Inf));
    assert_eq!(al[cl.var(U).0], Some(Offset::Fin(0)));
    assert_eq!(al[cl.var(LAM).0], Some(Offset::Inf));
    assert_eq!(al[lpp], Some(Offset::Inf));
}

#[test]
fn pendulum_codes() {
    let a = Analysis::run(&common::pendulum()).unwrap();
    assert_eq!(a.ql.global_codes(), vec![QlCode::L, QlCode::L, QlCode::N]);
    assert!(!a.ql.gamma_dae);
    assert_eq!(a.ql.gamma_block, vec![true]);
}

#[test]
fn empty_m_set_reads_as_linear() {
    let m = daestruct::codelist::parse_model("var x, y; eq A: Der(x,1) - y = 0; eq B: y - sin(t) = 0;").unwrap();
    let a = Analysis::run(&m).unwrap();
    let e = per_equation_ql(m.codelist(), &a.sigma, &a.offsets, Scope::Global);
    assert!(e.iter().all(|q| q.code == QlCode::L));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn vectorized_and_per_equation_routes_agree(seed in any::<u64>(), n in 1usize..=4, depth in 1usize..=5) {
        let m = common::random_model(&mut common::rng(seed), n, depth);
        let Ok(a) = Analysis::run(&m) else { return Ok(()) };
        let cl = m.codelist();
        prop_assert_eq!(&per_equation_ql(cl, &a.sigma, &a.offsets, Scope::Global), &a.ql.global);
        prop_assert_eq!(&per_equation_ql(cl, &a.sigma, &a.offsets, Scope::Block(&a.fine)), &a.ql.blockwise);
    }

    #[test]
    fn output_offset_is_zero_unless_m_is_empty(seed in any::<u64>(), n in 1usize..=4, depth in 1usize..=5) {
        let m = common::random_model(&mut common::rng(seed), n, depth);
        let Ok(a) = Analysis::run(&m) else { return Ok(()) };
        for (i, e) in a.ql.global.iter().enumerate() {
            let want = if e.m_set.is_empty() { Offset::Inf } else { Offset::Fin(0) };
            prop_assert_eq!(e.offsets[m.codelist().output(i).0], Some(want));
            prop_assert!(!e.m_set.is_empty(), "global M_i contains the transversal column");
        }
    }

    #[test]
    fn blockwise_is_never_worse_than_global(seed in any::<u64>(), n in 1usize..=4, depth in 1usize..=5) {
        let m = common::random_model(&mut common::rng(seed), n, depth);
        let Ok(a) = Analysis::run(&m) else { return Ok(()) };
        for (g, b) in a.ql.global.iter().zip(&a.ql.blockwise) {
            prop_assert!(b.m_set.iter().all(|j| g.m_set.contains(j)));
            prop_assert!(b.code <= g.code);
        }
    }
}
