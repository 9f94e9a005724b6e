//! Rendering a model back to `.dae` text.
//!
//! Output is fully parenthesized so it parses back to the same code list for
//! any model produced by the parser or the builder. Negative constants are
//! emitted through generated `const` declarations, since `-c` in the text
//! would parse as a negation node.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use super::{DaeModel, NodeId, NodeKind, UnaryOp};

struct Renderer<'a> {
    model: &'a DaeModel,
    negatives: BTreeMap<u64, String>,
    taken: HashSet<String>,
}

impl Renderer<'_> {
    fn constant(&mut self, c: f64) -> String {
        if !c.is_sign_negative() {
            return format!("{c}");
        }
        if let Some(name) = self.negatives.get(&c.to_bits()) {
            return name.clone();
        }
        let mut name = format!("_neg{}", self.negatives.len());
        while self.taken.contains(&name) {
            name.insert(0, '_');
        }
        self.taken.insert(name.clone());
        self.negatives.insert(c.to_bits(), name.clone());
        name
    }

    fn expr(&mut self, id: NodeId) -> String {
        let cl = self.model.codelist();
        match *cl.node(id) {
            NodeKind::Time => "t".to_string(),
            NodeKind::Var(j) => self.model.variable_names()[j].clone(),
            NodeKind::Const(c) => self.constant(c),
            NodeKind::Unary(UnaryOp::Identity, a) => self.expr(a),
            NodeKind::Unary(UnaryOp::Neg, a) => format!("(-{})", self.expr(a)),
            NodeKind::Unary(op, a) => format!("{}({})", op.name(), self.expr(a)),
            NodeKind::Binary(op, a, b) => {
                let a = self.expr(a);
                let b = self.expr(b);
                format!("({a} {} {b})", op.symbol())
            }
            NodeKind::Pow(a, k) if k < 0 => format!("({}^({k}))", self.expr(a)),
            NodeKind::Pow(a, k) => format!("({}^{k})", self.expr(a)),
            NodeKind::Deriv(a, p) => format!("Der({}, {p})", self.expr(a)),
        }
    }

    fn equation(&mut self, out: NodeId) -> String {
        let cl = self.model.codelist();
        match *cl.node(out) {
            NodeKind::Binary(super::BinaryOp::Sub, a, b) => {
                let a = self.expr(a);
                let b = self.expr(b);
                format!("{a} = {b}")
            }
            NodeKind::Unary(UnaryOp::Identity, a) => format!("{} = 0", self.expr(a)),
            NodeKind::Unary(UnaryOp::Neg, a) => format!("0 = {}", self.expr(a)),
            _ => format!("{} = 0", self.expr(out)),
        }
    }
}

/// Render `model` as `.dae` text that [`super::parse_model`] accepts.
pub fn render_model(model: &DaeModel) -> String {
    let mut r = Renderer {
        model,
        negatives: BTreeMap::new(),
        taken: model
            .variable_names()
            .iter()
            .chain(model.constants().keys())
            .cloned()
            .collect(),
    };
    let eqs: Vec<String> = model
        .codelist()
        .outputs()
        .iter()
        .map(|&out| r.equation(out))
        .collect();

    let mut text = String::new();
    for (name, value) in model.constants() {
        writeln!(text, "const {name} = {value};").unwrap();
    }
    let mut helpers: Vec<(&String, f64)> = r
        .negatives
        .iter()
        .map(|(bits, name)| (name, f64::from_bits(*bits)))
        .collect();
    helpers.sort_by(|a, b| a.0.cmp(b.0));
    for (name, value) in helpers {
        writeln!(text, "const {name} = {value};").unwrap();
    }
    writeln!(text, "var {};", model.variable_names().join(", ")).unwrap();
    for (name, eq) in model.equation_names().iter().zip(eqs) {
        writeln!(text, "eq {name}: {eq};").unwrap();
    }
    text
}
