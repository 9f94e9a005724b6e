mod common;

use daestruct::codelist::{parse_model, CodeList, NodeId, NodeKind};
use daestruct::executor::{numeric_jacobian, solve_to_order, taylor_eval, ExecError, InitData, SolveOptions, StatePoint};
use daestruct::scheme::{Action, Linearity, SchemeMode};
use daestruct::Analysis;
use proptest::prelude::*;

fn init_of(values: &[((usize, u32), f64)], guesses: &[((usize, u32), f64)]) -> InitData {
    InitData {
        t0: 0.0,
        values: values.iter().copied().collect(),
        guesses: guesses.iter().copied().collect(),
    }
}

fn run(src: &str, mode: SchemeMode, init: &InitData, k: i64) -> Result<daestruct::executor::Expansion, ExecError> {
    run_with(src, mode, init, k, &SolveOptions::default())
}

fn run_with(
    src: &str,
    mode: SchemeMode,
    init: &InitData,
    k: i64,
    opts: &SolveOptions,
) -> Result<daestruct::executor::Expansion, ExecError> {
    let m = parse_model(src).unwrap();
    let a = Analysis::run(&m).unwrap();
    solve_to_order(&m, &a, mode, init, k, opts)
}

/// x, x', y, y', u, v''' guesses and v, v', v'' values.
fn two_pendula_init() -> InitData {
    init_of(
        &[((4, 0), 0.3), ((4, 1), 0.1), ((4, 2), -0.2)],
        &[((0, 0), 0.05), ((0, 1), 0.1), ((1, 0), 1.0), ((1, 1), 0.0), ((3, 0), 2.0), ((4, 3), 2.0)],
    )
}

#[test]
fn two_pendula_expansion_to_order_ten() {
    let m = common::two_pendula();
    let a = Analysis::run(&m).unwrap();
    let e = solve_to_order(&m, &a, SchemeMode::Block, &two_pendula_init(), 10, &SolveOptions::default()).unwrap();
    assert!(e.max_residual < 1e-10, "residual {:e}", e.max_residual);
    for (j, &d) in a.offsets.d.iter().enumerate() {
        assert_eq!(e.state.known(j) as i64, 10 + d + 1);
    }
    // initial values are kept, the circle constraint holds
    assert_eq!(e.state.derivative(4, 0), Some(0.3));
    let (x, y) = (e.state.derivative(0, 0).unwrap(), e.state.derivative(1, 0).unwrap());
    assert!((x * x + y * y - 1.0).abs() < 1e-12);
    for r in &e.reports {
        if r.task.local_stage > 0 {
            assert_eq!(r.newton_iterations, 0, "stage {} block {}", r.task.stage, r.task.block);
            assert!(matches!(r.task.action, Action::Solve { linearity: Linearity::Linear, .. }));
        }
    }
}

#[test]
fn basic_and_block_schemes_agree_on_the_pendulum() {
    let g = [((0, 0), 0.8), ((1, 0), -0.7), ((0, 1), 0.2), ((1, 1), 0.1)];
    let block = run(common::PENDULUM, SchemeMode::Block, &init_of(&[], &g), 8).unwrap();
    let mut basic_guesses = g.to_vec();
    basic_guesses.extend([((0, 2), 0.0), ((1, 2), 0.0), ((2, 0), 0.0)]);
    let basic = run(common::PENDULUM, SchemeMode::Basic, &init_of(&[], &basic_guesses), 8).unwrap();
    for j in 0..3 {
        let (p, q) = (block.state.derivatives(j), basic.state.derivatives(j));
        assert_eq!(p.len(), q.len());
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{j}: {x} vs {y}");
        }
    }
}

#[test]
fn linear_dae_gives_polynomial_solution() {
    let src = "var x, y; eq A: Der(x,1) - y = 0; eq B: y - 1 = 0;";
    let e = run(src, SchemeMode::Block, &init_of(&[((0, 0), 2.5)], &[]), 5).unwrap();
    assert_eq!(e.state.coefficients(0), &[2.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(e.state.coefficients(1), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn exponential_growth_matches_closed_form() {
    let e = run("var x; eq A: Der(x,1) - x = 0;", SchemeMode::Block, &init_of(&[((0, 0), 1.0)], &[]), 12).unwrap();
    for (r, c) in e.state.coefficients(0).iter().enumerate() {
        let want = 1.0 / (1..=r).map(|k| k as f64).product::<f64>();
        assert!((c - want).abs() < 1e-15, "coefficient {r}");
    }
}

#[test]
fn failures_are_reported() {
    let sq = "var x; eq A: Der(x,1)^2 - 1 = 0;";
    let err = run(sq, SchemeMode::Block, &init_of(&[((0, 0), 0.0)], &[((0, 1), 0.0)]), 0).unwrap_err();
    assert!(matches!(err, ExecError::SingularJacobian { .. }), "{err:?}");

    let ex = "var x; eq A: exp(Der(x,1)) + 1 = 0;";
    let opts = SolveOptions {
        max_iterations: 3,
        ..SolveOptions::default()
    };
    let err = run_with(ex, SchemeMode::Block, &init_of(&[((0, 0), 0.0)], &[((0, 1), 1.0)]), 0, &opts).unwrap_err();
    assert!(matches!(err, ExecError::NewtonDivergence { .. }), "{err:?}");

    let circle = "var x, y, lam; eq A: Der(x,2) + x*lam = 0; eq B: Der(y,2) + y*lam = 0; eq C: x^2 + y^2 + 1 = 0;";
    let g = [((0, 0), 0.5), ((1, 0), 0.5), ((0, 1), 0.0), ((1, 1), 0.0)];
    let err = run(circle, SchemeMode::Block, &init_of(&[], &g), 0).unwrap_err();
    assert!(matches!(err, ExecError::InfeasibleConstraint { .. }), "{err:?}");

    let lg = "var x; eq A: Der(x,1) - log(x) = 0;";
    let err = run(lg, SchemeMode::Block, &init_of(&[((0, 0), -1.0)], &[]), 0).unwrap_err();
    assert!(matches!(err, ExecError::LogSqrtDomain { .. }), "{err:?}");

    let err = run(common::PENDULUM, SchemeMode::Block, &init_of(&[((0, 0), 1.0)], &[]), 0).unwrap_err();
    assert!(matches!(err, ExecError::MissingInitialization { .. }), "{err:?}");
}

/// `Der(x, p)` and `p` nested `Der(., 1)` nodes over the same variable.
fn derivative_chain(p: u32) -> (CodeList, NodeId, NodeId) {
    let mut nodes = vec![NodeKind::Time, NodeKind::Var(0), NodeKind::Deriv(NodeId(1), p)];
    let direct = NodeId(2);
    let mut last = NodeId(1);
    for _ in 0..p {
        nodes.push(NodeKind::Deriv(last, 1));
        last = NodeId(nodes.len() - 1);
    }
    (CodeList::from_raw(nodes, 1, vec![direct]), direct, last)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn deriv_equals_repeated_first_derivative(
        coeffs in prop::collection::vec(-10.0f64..10.0, 1..12),
        p in 0u32..5,
        order in 0usize..6,
    ) {
        let (cl, direct, nested) = derivative_chain(p);
        let state = StatePoint::from_coefficients(vec![coeffs], 0.0);
        let out = taylor_eval(&cl, &state, order).unwrap();
        for (a, b) in out[direct.0].coeffs.iter().zip(&out[nested.0].coeffs) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn product_rule_matches_direct_expansion(
        a in prop::collection::vec(-3.0f64..3.0, 6),
        b in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        // (a b)' computed as Der(a*b, 1) and as a' b + a b'
        let m = parse_model("var u, w; eq A: Der(u*w, 1) = 0; eq B: Der(u,1)*w + u*Der(w,1) = 0;").unwrap();
        let cl = m.codelist();
        let state = StatePoint::from_coefficients(vec![a, b], 0.0);
        let out = taylor_eval(cl, &state, 4).unwrap();
        for (x, y) in out[cl.output(0).0].coeffs.iter().zip(&out[cl.output(1).0].coeffs) {
            prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn pendulum_residuals_vanish(x0 in -1.0f64..1.0, yp in -2.0f64..2.0, xp in -2.0f64..2.0) {
        let y0 = -(1.0 - x0 * x0).sqrt() - 0.1;
        let g = [((0, 0), x0), ((1, 0), y0), ((0, 1), xp), ((1, 1), yp)];
        let e = run(common::PENDULUM, SchemeMode::Block, &init_of(&[], &g), 10).unwrap();
        let scale = (0..3).flat_map(|j| e.state.coefficients(j).to_vec()).fold(1.0f64, |m, c| m.max(c.abs()));
        prop_assert!(e.max_residual <= 1e-10 * scale, "residual {:e}", e.max_residual);
    }

    #[test]
    fn jacobian_matches_central_differences(coeffs in prop::collection::vec(-2.0f64..2.0, 24)) {
        let m = common::two_pendula();
        let a = Analysis::run(&m).unwrap();
        let cl = m.codelist();
        let rows: Vec<Vec<f64>> = coeffs.chunks(4).map(|c| c.to_vec()).collect();
        let state = StatePoint::from_coefficients(rows.clone(), 0.0);
        let f = |rows: &Vec<Vec<f64>>, i: usize| {
            let s = StatePoint::from_coefficients(rows.clone(), 0.0);
            taylor_eval(cl, &s, 0).unwrap()[cl.output(i).0].coeffs[0]
        };
        for b in &a.fine.blocks {
            let jac = numeric_jacobian(&m, &a.sigma, &a.offsets, b, &state).unwrap();
            for (p, &i) in b.rows.iter().enumerate() {
                for (q, &j) in b.cols.iter().enumerate() {
                    let sigma = a.offsets.d[j] - a.offsets.c[i];
                    if a.sigma.get(i, j).finite() != Some(sigma) {
                        prop_assert_eq!(jac[(p, q)], 0.0);
                        continue;
                    }
                    let r = sigma as usize;
                    let fact: f64 = (1..=r).map(|k| k as f64).product();
                    let h = 1e-6;
                    let mut up = rows.clone();
                    up[j][r] += h / fact;
                    let mut down = rows.clone();
                    down[j][r] -= h / fact;
                    let fd = (f(&up, i) - f(&down, i)) / (2.0 * h);
                    prop_assert!((jac[(p, q)] - fd).abs() <= 1e-6 * jac[(p, q)].abs().max(1.0));
                }
            }
        }
    }
}
