//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use daestruct::codelist::{parse_model, DaeModel, Expr, ModelBuilder};
use daestruct::sigma::{ExtInt, GlobalOffsets, SignatureMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const TWO_PENDULA: &str = include_str!("../../../../models/twopendula.dae");
pub const PENDULUM: &str = include_str!("../../../../models/pendulum.dae");

pub fn two_pendula() -> DaeModel {
    parse_model(TWO_PENDULA).unwrap()
}

pub fn pendulum() -> DaeModel {
    parse_model(PENDULUM).unwrap()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random signature matrix with entries `-inf` or `0..=3` and a finite
/// entry on a random permutation, so a transversal always exists.
pub fn random_sigma(rng: &mut StdRng, n: usize) -> SignatureMatrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if perm[i] == j || rng.random_bool(0.45) {
                        Some(rng.random_range(0..=3))
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect::<Vec<_>>();
    SignatureMatrix::from_options(&rows)
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                go(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Largest transversal sum over all permutations, `None` if every
/// permutation hits `-inf`.
pub fn brute_force_hvt_value(sm: &SignatureMatrix) -> Option<i64> {
    permutations(sm.n())
        .iter()
        .filter_map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &j)| sm.get(i, j).finite())
                .sum::<Option<i64>>()
        })
        .max()
}

/// `d_j - c_i >= sigma_ij` everywhere, `c >= 0`.
pub fn offsets_valid(sm: &SignatureMatrix, c: &[i64], d: &[i64]) -> bool {
    let n = sm.n();
    c.iter().all(|&x| x >= 0)
        && (0..n).all(|i| {
            (0..n).all(|j| match sm.get(i, j) {
                ExtInt::NegInf => true,
                ExtInt::Fin(s) => d[j] - c[i] >= s,
            })
        })
}

/// Every valid normalized offset pair with `c` in the box `0..=bound`.
/// `d_j` is the smallest value compatible with `c`.
pub fn offset_pairs_in_box(sm: &SignatureMatrix, bound: i64) -> Vec<GlobalOffsets> {
    let n = sm.n();
    let mut out = Vec::new();
    let hvt = brute_force_hvt_value(sm).expect("matrix has a transversal");
    let mut c = vec![0i64; n];
    loop {
        if c.contains(&0) {
            let d: Vec<i64> = (0..n)
                .map(|j| {
                    (0..n)
                        .filter_map(|i| sm.get(i, j).finite().map(|s| s + c[i]))
                        .max()
                        .unwrap_or(0)
                        .max(0)
                })
                .collect();
            let total: i64 = d.iter().sum::<i64>() - c.iter().sum::<i64>();
            if offsets_valid(sm, &c, &d) && total == hvt {
                out.push(GlobalOffsets { c: c.clone(), d });
            }
        }
        let mut k = 0;
        while k < n && c[k] == bound {
            c[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        c[k] += 1;
    }
    out
}

fn leaf(rng: &mut StdRng, vars: &[Expr]) -> Expr {
    match rng.random_range(0..10) {
        0 => Expr::time(),
        1 => Expr::constant(rng.random_range(1..5) as f64),
        _ => {
            let v = vars[rng.random_range(0..vars.len())].clone();
            match rng.random_range(0..4) {
                0 => v,
                p => v.der(p as u32 - 1),
            }
        }
    }
}

pub fn random_expr(rng: &mut StdRng, vars: &[Expr], depth: usize) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return leaf(rng, vars);
    }
    let sub = |rng: &mut StdRng| random_expr(rng, vars, depth - 1);
    match rng.random_range(0..14) {
        0 => sub(rng).sin(),
        1 => sub(rng).cos(),
        2 => sub(rng).exp(),
        3 => sub(rng).log(),
        4 => sub(rng).sqrt(),
        5 => -sub(rng),
        6 => sub(rng).powi([-1, 1, 2, 3][rng.random_range(0..4)]),
        7 => sub(rng).der(rng.random_range(1..3)),
        8 | 9 => sub(rng) + sub(rng),
        10 => sub(rng) - sub(rng),
        11 | 12 => sub(rng) * sub(rng),
        _ => sub(rng) / sub(rng),
    }
}

/// Left-hand sides of a random square system in `n` variables, each
/// mentioning its "own" variable so that most draws are structurally well
/// posed.
pub fn random_equations(rng: &mut StdRng, n: usize, depth: usize) -> Vec<Expr> {
    let vars: Vec<Expr> = (0..n).map(Expr::Var).collect();
    (0..n)
        .map(|i| {
            let own = vars[i].clone().der(rng.random_range(0..3));
            let e = random_expr(rng, &vars, depth.saturating_sub(1));
            if rng.random_bool(0.5) {
                own * e
            } else {
                own + e
            }
        })
        .collect()
}

pub fn model_from(equations: &[Expr]) -> DaeModel {
    let mut b = ModelBuilder::new();
    for j in 0..equations.len() {
        b.var(&format!("x{j}"));
    }
    for (i, e) in equations.iter().enumerate() {
        b.equation(&format!("f{i}"), e.clone(), Expr::constant(0.0));
    }
    b.finish().unwrap()
}

/// Random square model with `n` variables and expression depth at most
/// `depth`.
pub fn random_model(rng: &mut StdRng, n: usize, depth: usize) -> DaeModel {
    model_from(&random_equations(rng, n, depth))
}

/// Highest derivative of `x_j` in `e`, read off the tree directly.
pub fn tree_signature(e: &Expr, j: usize) -> ExtInt {
    match e {
        Expr::Time | Expr::Const(_) => ExtInt::NegInf,
        Expr::Var(k) => {
            if *k == j {
                ExtInt::Fin(0)
            } else {
                ExtInt::NegInf
            }
        }
        Expr::Deriv(a, p) => tree_signature(a, j).shift(*p as i64),
        Expr::Unary(_, a) | Expr::Pow(a, _) => tree_signature(a, j),
        Expr::Binary(_, a, b) => tree_signature(a, j).max(tree_signature(b, j)),
    }
}
