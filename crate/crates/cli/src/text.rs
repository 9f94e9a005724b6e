//! Plain-text rendering of reports.

use std::collections::BTreeMap;
use std::fmt::Write;

use daestruct::scheme::{Action, Determinacy, Linearity};

use crate::report::{AnalysisReport, Derivative, SolveReport};

/// `x`, `x'`, `x''`, `x'''`, then `x^(4)`.
pub fn derivative_name(name: &str, order: u32) -> String {
    match order {
        0..=3 => format!("{name}{}", "'".repeat(order as usize)),
        r => format!("{name}^({r})"),
    }
}

/// Groups orders per name, writing a run `0..=r` with `r >= 1` as `x^(≤r)`.
pub fn compact_set(items: &[Derivative]) -> String {
    let mut by_name: Vec<(&str, Vec<u32>)> = Vec::new();
    for d in items {
        match by_name.iter_mut().find(|(n, _)| *n == d.name) {
            Some((_, v)) => v.push(d.order),
            None => by_name.push((&d.name, vec![d.order])),
        }
    }
    let mut parts = Vec::new();
    for (name, mut orders) in by_name {
        orders.sort_unstable();
        orders.dedup();
        let run = orders.iter().enumerate().take_while(|&(k, &r)| k as u32 == r).count();
        let rest = if run >= 2 {
            parts.push(format!("{name}^(≤{})", run - 1));
            &orders[run..]
        } else {
            &orders[..]
        };
        parts.extend(rest.iter().map(|&r| derivative_name(name, r)));
    }
    if parts.is_empty() {
        "(none)".to_string()
    } else {
        parts.join(", ")
    }
}

fn list(items: &[Derivative]) -> String {
    items.iter().map(|d| derivative_name(&d.name, d.order)).collect::<Vec<_>>().join(", ")
}

fn action_label(a: &Action) -> String {
    match a {
        Action::InitialValues => "initial values".to_string(),
        Action::Solve { determinacy, linearity } => {
            let d = match determinacy {
                Determinacy::Square => "square",
                Determinacy::Underdetermined => "underdetermined",
            };
            let l = match linearity {
                Linearity::Linear => "linear",
                Linearity::Nonlinear => "nonlinear",
            };
            format!("solve {d} {l}")
        }
    }
}

fn sigma_grid(r: &AnalysisReport, out: &mut String) {
    let eq_index: BTreeMap<&str, usize> = r.model.equations.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let var_index: BTreeMap<&str, usize> = r.model.variables.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect();
    let hvt: Vec<(usize, usize)> = r
        .hvt
        .iter()
        .map(|h| (eq_index[h.equation.as_str()], var_index[h.variable.as_str()]))
        .collect();

    let rows: Vec<Vec<usize>> = r
        .blocks
        .iter()
        .map(|b| b.rows.iter().map(|s| eq_index[s.as_str()]).collect())
        .collect();
    let cols: Vec<Vec<usize>> = r
        .blocks
        .iter()
        .map(|b| b.cols.iter().map(|s| var_index[s.as_str()]).collect())
        .collect();
    let c_hat: Vec<i64> = r.blocks.iter().flat_map(|b| b.c_hat.iter().copied()).collect();
    let d_hat: Vec<i64> = r.blocks.iter().flat_map(|b| b.d_hat.iter().copied()).collect();

    let cell = |i: usize, j: usize| -> String {
        match r.sigma[i][j] {
            None => String::new(),
            Some(s) if hvt.contains(&(i, j)) => format!("{s}•"),
            Some(s) => s.to_string(),
        }
    };
    let all_rows: Vec<usize> = rows.concat();
    let all_cols: Vec<usize> = cols.concat();
    let width: Vec<usize> = all_cols
        .iter()
        .enumerate()
        .map(|(p, &j)| {
            let body = all_rows.iter().map(|&i| cell(i, j).chars().count()).max().unwrap_or(0);
            let margins = [r.offsets.d[j].to_string().len(), d_hat[p].to_string().len()];
            body.max(r.model.variables[j].chars().count()).max(margins[0]).max(margins[1])
        })
        .collect();
    let label = r
        .model
        .equations
        .iter()
        .map(|s| s.chars().count())
        .chain([2])
        .max()
        .unwrap_or(2);
    let cw = r.offsets.c.iter().map(|c| c.to_string().len()).max().unwrap_or(1).max(1);
    let chw = c_hat.iter().map(|c| c.to_string().len()).max().unwrap_or(1).max(2);

    let line = |cells: &[String], left: &str, right: &str| -> String {
        let shown = left.chars().filter(|c| !('\u{300}'..='\u{36f}').contains(c)).count();
        let mut s = format!("{left}{} |", " ".repeat(label - shown));
        let mut p = 0;
        for (b, block) in cols.iter().enumerate() {
            for _ in block {
                let w = width[p];
                let _ = write!(s, " {:>w$}", cells[p]);
                p += 1;
            }
            s.push_str(if b + 1 < cols.len() { " |" } else { " ||" });
        }
        s.push_str(right);
        s.trim_end().to_string()
    };
    let rule = || -> String {
        let mut s = format!("{}-+", "-".repeat(label));
        let mut p = 0;
        for (b, block) in cols.iter().enumerate() {
            for _ in block {
                s.push_str(&"-".repeat(width[p] + 1));
                p += 1;
            }
            s.push_str(if b + 1 < cols.len() { "-+" } else { "-++" });
        }
        s.push_str(&"-".repeat(cw + chw + 2));
        s
    };

    let names: Vec<String> = all_cols.iter().map(|&j| r.model.variables[j].clone()).collect();
    out.push_str(&line(&names, "", &format!(" {:>cw$} {:>chw$}", "c", "ĉ")));
    out.push('\n');
    let mut q = 0;
    for block in &rows {
        out.push_str(&rule());
        out.push('\n');
        for &i in block {
            let cells: Vec<String> = all_cols.iter().map(|&j| cell(i, j)).collect();
            let margin = format!(" {:>cw$} {:>chw$}", r.offsets.c[i], c_hat[q]);
            out.push_str(&line(&cells, &r.model.equations[i], &margin));
            out.push('\n');
            q += 1;
        }
    }
    out.push_str(&rule());
    out.push('\n');
    let d: Vec<String> = all_cols.iter().map(|&j| r.offsets.d[j].to_string()).collect();
    let dh: Vec<String> = d_hat.iter().map(|v| v.to_string()).collect();
    out.push_str(&line(&d, "d", ""));
    out.push('\n');
    out.push_str(&line(&dh, "d̂", ""));
    out.push('\n');
}

pub fn render_analysis(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let n = r.model.equations.len();
    let _ = writeln!(out, "{n} equations, {n} variables");
    let _ = writeln!(
        out,
        "HVT value {}, structural index {}, degrees of freedom {}",
        r.hvt_value, r.metrics.index, r.metrics.dof
    );
    out.push_str("\nSignature matrix in fine block order (• marks the HVT, blank is -inf):\n\n");
    sigma_grid(r, &mut out);

    out.push_str("\nCoarse blocks:\n");
    for (k, b) in r.coarse_blocks.iter().enumerate() {
        let _ = writeln!(out, "  {}: {{{} | {}}}", k + 1, b.rows.join(", "), b.cols.join(", "));
    }
    out.push_str("\nFine blocks:\n");
    for (k, b) in r.blocks.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {}: {{{} | {}}}  size {}, lead time {}, quasilinear {}",
            k + 1,
            b.rows.join(", "),
            b.cols.join(", "),
            b.size,
            b.lead_time,
            if b.ql { "yes" } else { "no" }
        );
    }

    out.push_str("\nQuasilinearity (global / blockwise):\n");
    for e in &r.ql.per_equation {
        let _ = writeln!(out, "  {}: {} / {}", e.equation, e.global, e.blockwise);
    }
    let _ = writeln!(out, "  DAE quasilinear: {}", if r.ql.dae { "yes" } else { "no" });

    let scheme = match r.scheme {
        daestruct::scheme::SchemeMode::Basic => "basic",
        daestruct::scheme::SchemeMode::Block => "block",
    };
    let _ = writeln!(out, "\nInitialization ({scheme} scheme):");
    let _ = writeln!(out, "  values:  {}", compact_set(&r.init.values));
    let _ = writeln!(out, "  guesses: {}", compact_set(&r.init.guesses));

    let _ = writeln!(
        out,
        "\nSchedule, stages {}..{}:",
        r.stage_range.first, r.stage_range.last
    );
    let mut last = None;
    for t in &r.schedule {
        if last != Some(t.stage) {
            let _ = writeln!(out, "  stage {}", t.stage);
            last = Some(t.stage);
        }
        let _ = write!(out, "    block {} (local {}): {}", t.block, t.local_stage, action_label(&t.action));
        if !t.equations.is_empty() {
            let _ = write!(out, " 0 = {}", list(&t.equations));
        }
        let _ = write!(out, " for {}", list(&t.unknowns));
        if !t.inputs.is_empty() {
            let _ = write!(out, " using {}", list(&t.inputs));
        }
        out.push('\n');
    }
    out
}

pub fn render_solve(r: &SolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Taylor expansion at t0 = {} through stage {}\n", r.t0, r.order);
    let w = r.variables.iter().map(|v| v.name.chars().count()).max().unwrap_or(0).max(8);
    let _ = writeln!(out, "{:<w$}  {:>5}  {:>22}  {:>22}", "variable", "order", "derivative", "taylor coefficient");
    for v in &r.variables {
        for (k, (d, c)) in v.derivatives.iter().zip(&v.coefficients).enumerate() {
            let _ = writeln!(out, "{:<w$}  {:>5}  {:>22.15e}  {:>22.15e}", v.name, k, d, c);
        }
    }
    let iterations: usize = r.stages.iter().map(|s| s.newton_iterations).sum();
    let _ = writeln!(out, "\n{} stage solves, {} Newton iterations", r.stages.len(), iterations);
    let _ = writeln!(out, "max residual: {:e}", r.max_residual);
    out
}
