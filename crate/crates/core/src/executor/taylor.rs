//! Truncated Taylor series arithmetic over a code list.
//!
//! Series hold Taylor coefficients `c_r = u^(r)(t0) / r!`. The evaluator is
//! generic over [`Scalar`] so the same recurrences produce plain values
//! (`f64`) or values with gradients ([`Dual`]) for Jacobians.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::codelist::{BinaryOp, CodeList, NodeId, NodeKind, UnaryOp};

use super::ExecError;

pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn value(&self) -> f64;
    fn scale(&self, k: f64) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, k: f64) -> Self {
        self * k
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn ln(&self) -> Self {
        f64::ln(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
}

/// Value with a gradient; an empty gradient is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub g: Vec<f64>,
}

impl Dual {
    pub fn constant(v: f64) -> Self {
        Dual { v, g: Vec::new() }
    }

    /// Independent variable number `k` of `n`.
    pub fn seed(v: f64, k: usize, n: usize) -> Self {
        let mut g = vec![0.0; n];
        g[k] = 1.0;
        Dual { v, g }
    }

    pub fn grad(&self, k: usize) -> f64 {
        self.g.get(k).copied().unwrap_or(0.0)
    }

    fn combine(a: &[f64], ka: f64, b: &[f64], kb: f64) -> Vec<f64> {
        let n = a.len().max(b.len());
        (0..n)
            .map(|i| ka * a.get(i).copied().unwrap_or(0.0) + kb * b.get(i).copied().unwrap_or(0.0))
            .collect()
    }

    fn chain(&self, v: f64, dv: f64) -> Dual {
        Dual {
            v,
            g: self.g.iter().map(|x| x * dv).collect(),
        }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual {
            v: self.v + o.v,
            g: Dual::combine(&self.g, 1.0, &o.g, 1.0),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual {
            v: self.v - o.v,
            g: Dual::combine(&self.g, 1.0, &o.g, -1.0),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual {
            v: self.v * o.v,
            g: Dual::combine(&self.g, o.v, &o.g, self.v),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let q = self.v / o.v;
        Dual {
            v: q,
            g: Dual::combine(&self.g, 1.0 / o.v, &o.g, -q / o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        self.chain(-self.v, -1.0)
    }
}

impl Scalar for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn scale(&self, k: f64) -> Self {
        self.chain(self.v * k, k)
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(&self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(&self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
}

/// Highest coefficient each node must provide so that every `(node, order)`
/// target can be formed. `None` marks nodes that are not needed.
pub fn required_orders(cl: &CodeList, targets: &[(NodeId, usize)]) -> Vec<Option<usize>> {
    let mut need: Vec<Option<usize>> = vec![None; cl.len()];
    for &(id, r) in targets {
        need[id.0] = need[id.0].max(Some(r));
    }
    for k in (0..cl.len()).rev() {
        let Some(r) = need[k] else { continue };
        let node = cl.nodes()[k];
        let shift = match node {
            NodeKind::Deriv(_, p) => p as usize,
            _ => 0,
        };
        for op in node.operands() {
            need[op.0] = need[op.0].max(Some(r + shift));
        }
    }
    need
}

fn cauchy<S: Scalar>(a: &[S], b: &[S], r: usize) -> S {
    let mut acc = a[0].clone() * b[r].clone();
    for k in 1..=r {
        acc = acc + a[k].clone() * b[r - k].clone();
    }
    acc
}

fn mul_series<S: Scalar>(a: &[S], b: &[S], len: usize) -> Vec<S> {
    (0..len).map(|r| cauchy(a, b, r)).collect()
}

fn div_series<S: Scalar>(a: &[S], b: &[S], len: usize, node: usize) -> Result<Vec<S>, ExecError> {
    if b[0].value() == 0.0 {
        return Err(ExecError::DivisionByZeroSeries { node });
    }
    let mut c: Vec<S> = Vec::with_capacity(len);
    for r in 0..len {
        let mut acc = a[r].clone();
        for k in 1..=r {
            acc = acc - b[k].clone() * c[r - k].clone();
        }
        c.push(acc / b[0].clone());
    }
    Ok(c)
}

/// Taylor coefficients of every needed node, each truncated at its
/// required order. `var(j, r)` supplies coefficient `r` of `x_j`.
pub fn eval_series<S: Scalar>(
    cl: &CodeList,
    need: &[Option<usize>],
    t0: f64,
    var: impl Fn(usize, usize) -> S,
) -> Result<Vec<Vec<S>>, ExecError> {
    let zero = S::from_f64(0.0);
    let mut out: Vec<Vec<S>> = Vec::with_capacity(cl.len());
    for (k, node) in cl.nodes().iter().enumerate() {
        let Some(order) = need[k] else {
            out.push(Vec::new());
            continue;
        };
        let len = order + 1;
        let s: Vec<S> = match *node {
            NodeKind::Time => (0..len)
                .map(|r| match r {
                    0 => S::from_f64(t0),
                    1 => S::from_f64(1.0),
                    _ => zero.clone(),
                })
                .collect(),
            NodeKind::Var(j) => (0..len).map(|r| var(j, r)).collect(),
            NodeKind::Const(c) => (0..len)
                .map(|r| if r == 0 { S::from_f64(c) } else { zero.clone() })
                .collect(),
            NodeKind::Deriv(u, p) => {
                let a = &out[u.0];
                (0..len)
                    .map(|r| {
                        let f: f64 = ((r + 1)..=(r + p as usize)).map(|m| m as f64).product();
                        a[r + p as usize].scale(f)
                    })
                    .collect()
            }
            NodeKind::Binary(op, a, b) => {
                let (a, b) = (&out[a.0], &out[b.0]);
                match op {
                    BinaryOp::Add => (0..len).map(|r| a[r].clone() + b[r].clone()).collect(),
                    BinaryOp::Sub => (0..len).map(|r| a[r].clone() - b[r].clone()).collect(),
                    BinaryOp::Mul => mul_series(a, b, len),
                    BinaryOp::Div => div_series(a, b, len, k)?,
                }
            }
            NodeKind::Pow(a, e) => {
                let a = &out[a.0];
                let mut p: Vec<S> = (0..len)
                    .map(|r| if r == 0 { S::from_f64(1.0) } else { zero.clone() })
                    .collect();
                for _ in 0..e.unsigned_abs() {
                    p = mul_series(&p, a, len);
                }
                if e < 0 {
                    let one: Vec<S> = (0..len)
                        .map(|r| if r == 0 { S::from_f64(1.0) } else { zero.clone() })
                        .collect();
                    div_series(&one, &p, len, k)?
                } else {
                    p
                }
            }
            NodeKind::Unary(op, a) => {
                let a = &out[a.0];
                unary(op, a, len, k)?
            }
        };
        out.push(s);
    }
    Ok(out)
}

fn unary<S: Scalar>(op: UnaryOp, a: &[S], len: usize, node: usize) -> Result<Vec<S>, ExecError> {
    let mut c: Vec<S> = Vec::with_capacity(len);
    match op {
        UnaryOp::Identity => c.extend_from_slice(&a[..len]),
        UnaryOp::Neg => c.extend(a[..len].iter().map(|x| -x.clone())),
        UnaryOp::Exp => {
            c.push(a[0].exp());
            for r in 1..len {
                let mut acc = a[1].clone() * c[r - 1].clone();
                for k in 2..=r {
                    acc = acc + (a[k].clone() * c[r - k].clone()).scale(k as f64);
                }
                c.push(acc.scale(1.0 / r as f64));
            }
        }
        UnaryOp::Log => {
            let a0 = a[0].value();
            if a0 <= 0.0 {
                return Err(ExecError::LogSqrtDomain { node, value: a0 });
            }
            c.push(a[0].ln());
            for r in 1..len {
                let mut acc = a[r].clone();
                for k in 1..r {
                    acc = acc - (c[k].clone() * a[r - k].clone()).scale(k as f64 / r as f64);
                }
                c.push(acc / a[0].clone());
            }
        }
        UnaryOp::Sqrt => {
            let a0 = a[0].value();
            if a0 <= 0.0 {
                return Err(ExecError::LogSqrtDomain { node, value: a0 });
            }
            c.push(a[0].sqrt());
            for r in 1..len {
                let mut acc = a[r].clone();
                for k in 1..r {
                    acc = acc - c[k].clone() * c[r - k].clone();
                }
                c.push(acc / c[0].scale(2.0));
            }
        }
        UnaryOp::Sin | UnaryOp::Cos => {
            let mut s = vec![a[0].sin()];
            let mut co = vec![a[0].cos()];
            for r in 1..len {
                let mut ds = a[1].clone() * co[r - 1].clone();
                let mut dc = a[1].clone() * s[r - 1].clone();
                for k in 2..=r {
                    ds = ds + (a[k].clone() * co[r - k].clone()).scale(k as f64);
                    dc = dc + (a[k].clone() * s[r - k].clone()).scale(k as f64);
                }
                s.push(ds.scale(1.0 / r as f64));
                co.push(dc.scale(-1.0 / r as f64));
            }
            c = if op == UnaryOp::Sin { s } else { co };
        }
    }
    Ok(c)
}
