//! Code-list intermediate representation of a DAE model.
//!
//! A code list is a straight-line program. Slot 0 holds the time `t`,
//! slots `1..=n` hold the state variables `x_1..x_n`, and every later node
//! applies one operation to earlier nodes. Each equation `f_i` is identified
//! by its output node, and the model reads `f_i = 0` for every `i`.
//!
//! Nothing is simplified: `x''' + x'' - x'''` keeps both third-derivative
//! nodes, so structural quantities are computed from formal dependence.

mod expr;
mod parser;
mod render;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use expr::{BuildError, Expr, ModelBuilder};
pub use parser::{parse_model, ParseError};
pub use render::render_model;

/// Index of a node in a [`CodeList`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Identity,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Identity => "id",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
        }
    }
}

/// One operation of the code list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    /// The independent variable `t`.
    Time,
    /// State variable `x_j` (0-based `j`).
    Var(usize),
    Const(f64),
    Unary(UnaryOp, NodeId),
    Binary(BinaryOp, NodeId, NodeId),
    /// Integer power of the operand. Negative exponents mean a reciprocal.
    Pow(NodeId, i32),
    /// `d^p/dt^p` of the operand.
    Deriv(NodeId, u32),
}

impl NodeKind {
    /// Operands referenced by this node, in argument order.
    pub fn operands(&self) -> impl Iterator<Item = NodeId> {
        let ops = match *self {
            NodeKind::Time | NodeKind::Var(_) | NodeKind::Const(_) => [None, None],
            NodeKind::Unary(_, a) | NodeKind::Pow(a, _) | NodeKind::Deriv(a, _) => [Some(a), None],
            NodeKind::Binary(_, a, b) => [Some(a), Some(b)],
        };
        ops.into_iter().flatten()
    }

    pub fn is_input(&self) -> bool {
        matches!(self, NodeKind::Time | NodeKind::Var(_))
    }
}

/// Straight-line program evaluating all equation residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeList {
    nodes: Vec<NodeKind>,
    n_vars: usize,
    outputs: Vec<NodeId>,
}

impl CodeList {
    /// Empty code list holding only the input slots for `n_vars` variables.
    pub fn new(n_vars: usize) -> Self {
        let mut nodes = Vec::with_capacity(n_vars + 1);
        nodes.push(NodeKind::Time);
        nodes.extend((0..n_vars).map(NodeKind::Var));
        CodeList {
            nodes,
            n_vars,
            outputs: Vec::new(),
        }
    }

    /// Assemble a code list without any checking; see [`validate_model`].
    pub fn from_raw(nodes: Vec<NodeKind>, n_vars: usize, outputs: Vec<NodeId>) -> Self {
        CodeList {
            nodes,
            n_vars,
            outputs,
        }
    }

    pub(crate) fn push(&mut self, kind: NodeKind) -> NodeId {
        self.nodes.push(kind);
        NodeId(self.nodes.len() - 1)
    }

    pub(crate) fn push_output(&mut self, id: NodeId) {
        self.outputs.push(id);
    }

    pub fn nodes(&self) -> &[NodeKind] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeKind {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_equations(&self) -> usize {
        self.outputs.len()
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn output(&self, equation: usize) -> NodeId {
        self.outputs[equation]
    }

    pub fn time(&self) -> NodeId {
        NodeId(0)
    }

    pub fn var(&self, j: usize) -> NodeId {
        NodeId(j + 1)
    }

    /// Membership mask of the sub-list that evaluates `f_i`: every node the
    /// output of equation `i` depends on, including itself.
    pub fn equation_mask(&self, equation: usize) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        let mut stack = vec![self.outputs[equation]];
        while let Some(id) = stack.pop() {
            if mask[id.0] {
                continue;
            }
            mask[id.0] = true;
            stack.extend(self.nodes[id.0].operands());
        }
        mask
    }

    /// Nodes of equation `i`'s sub-list in evaluation order.
    pub fn equation_nodes(&self, equation: usize) -> Vec<NodeId> {
        self.equation_mask(equation)
            .iter()
            .enumerate()
            .filter_map(|(k, &m)| m.then_some(NodeId(k)))
            .collect()
    }
}

/// A square DAE `f_i(t, x, x', ...) = 0`, `i = 1..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DaeModel {
    variable_names: Vec<String>,
    equation_names: Vec<String>,
    constants: BTreeMap<String, f64>,
    codelist: CodeList,
}

impl DaeModel {
    /// Assemble a model without checking; [`validate_model`] reports problems.
    pub fn from_parts(
        variable_names: Vec<String>,
        equation_names: Vec<String>,
        constants: BTreeMap<String, f64>,
        codelist: CodeList,
    ) -> Self {
        DaeModel {
            variable_names,
            equation_names,
            constants,
            codelist,
        }
    }

    pub fn n(&self) -> usize {
        self.variable_names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn equation_names(&self) -> &[String] {
        &self.equation_names
    }

    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }

    pub fn codelist(&self) -> &CodeList {
        &self.codelist
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|v| v == name)
    }

    pub fn equation_index(&self, name: &str) -> Option<usize> {
        self.equation_names.iter().position(|e| e == name)
    }
}

/// A structural problem found by [`validate_model`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    NoEquations,
    NotSquare { variables: usize, equations: usize },
    NameCount { kind: &'static str, names: usize, expected: usize },
    DuplicateName { kind: &'static str, name: String },
    ReservedName(String),
    MisplacedInput { node: usize },
    ForwardReference { node: usize, operand: usize },
    OutputOutOfRange { equation: usize, node: usize },
    OutputIsInput { equation: usize, node: usize },
    DuplicateOutput { node: usize },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::NoEquations => write!(f, "model has no equations"),
            Diagnostic::NotSquare {
                variables,
                equations,
            } => write!(f, "{variables} variables but {equations} equations"),
            Diagnostic::NameCount {
                kind,
                names,
                expected,
            } => write!(f, "{names} {kind} names for {expected} {kind}s"),
            Diagnostic::DuplicateName { kind, name } => {
                write!(f, "{kind} name `{name}` is declared more than once")
            }
            Diagnostic::ReservedName(name) => write!(f, "`{name}` is reserved"),
            Diagnostic::MisplacedInput { node } => {
                write!(f, "node {node} is an input outside the input slots")
            }
            Diagnostic::ForwardReference { node, operand } => write!(
                f,
                "node {node} references node {operand}, which is not earlier in the list"
            ),
            Diagnostic::OutputOutOfRange { equation, node } => {
                write!(f, "output of equation {equation} is node {node}, out of range")
            }
            Diagnostic::OutputIsInput { equation, node } => write!(
                f,
                "output of equation {equation} is input slot {node}, not an operation"
            ),
            Diagnostic::DuplicateOutput { node } => {
                write!(f, "node {node} is the output of more than one equation")
            }
        }
    }
}

/// Check squareness, reference order and naming. Empty means the model is
/// ready for analysis.
pub fn validate_model(model: &DaeModel) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let cl = &model.codelist;
    let n = cl.n_vars;

    if cl.outputs.is_empty() {
        diags.push(Diagnostic::NoEquations);
    } else if cl.outputs.len() != n {
        diags.push(Diagnostic::NotSquare {
            variables: n,
            equations: cl.outputs.len(),
        });
    }
    if model.variable_names.len() != n {
        diags.push(Diagnostic::NameCount {
            kind: "variable",
            names: model.variable_names.len(),
            expected: n,
        });
    }
    if model.equation_names.len() != cl.outputs.len() {
        diags.push(Diagnostic::NameCount {
            kind: "equation",
            names: model.equation_names.len(),
            expected: cl.outputs.len(),
        });
    }

    let mut seen = HashSet::new();
    for name in model.variable_names.iter().chain(model.constants.keys()) {
        if name == "t" {
            diags.push(Diagnostic::ReservedName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            diags.push(Diagnostic::DuplicateName {
                kind: "variable",
                name: name.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    for name in &model.equation_names {
        if !seen.insert(name.as_str()) {
            diags.push(Diagnostic::DuplicateName {
                kind: "equation",
                name: name.clone(),
            });
        }
    }

    for (k, node) in cl.nodes.iter().enumerate() {
        let expected_input = match k {
            0 => Some(NodeKind::Time),
            k if k <= n => Some(NodeKind::Var(k - 1)),
            _ => None,
        };
        match expected_input {
            Some(kind) if *node != kind => diags.push(Diagnostic::MisplacedInput { node: k }),
            None if node.is_input() => diags.push(Diagnostic::MisplacedInput { node: k }),
            _ => {}
        }
        for op in node.operands() {
            if op.0 >= k {
                diags.push(Diagnostic::ForwardReference {
                    node: k,
                    operand: op.0,
                });
            }
        }
    }

    let mut seen = HashSet::new();
    for (i, out) in cl.outputs.iter().enumerate() {
        if out.0 >= cl.nodes.len() {
            diags.push(Diagnostic::OutputOutOfRange {
                equation: i,
                node: out.0,
            });
        } else if out.0 <= n {
            diags.push(Diagnostic::OutputIsInput {
                equation: i,
                node: out.0,
            });
        }
        if !seen.insert(*out) {
            diags.push(Diagnostic::DuplicateOutput { node: out.0 });
        }
    }
    diags
}
