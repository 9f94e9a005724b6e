//! Parser for the `.dae` model text format.
//!
//! ```text
//! model := (decl ";")+
//! decl  := "var" ident ("," ident)*
//!        | "const" ident "=" ["-"] number
//!        | "eq" ident ":" expr "=" expr
//! ```
//!
//! Expressions use the usual precedence over `+ - * / ^` with unary minus,
//! parentheses, `sin cos exp log sqrt`, `Der(expr, order)`, identifiers and
//! numeric literals. `t` is the independent variable. `#` starts a line
//! comment. Exponents must be integers.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::expr::{BuildError, Expr};
use super::{BinaryOp, DaeModel, ModelBuilder, UnaryOp};

/// Line/column of a token, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: expected {expected}, found `{found}`")]
    Syntax {
        pos: Pos,
        found: String,
        expected: String,
    },
    #[error("{pos}: unknown identifier `{name}`")]
    UnknownIdentifier { pos: Pos, name: String },
    #[error("{pos}: `{name}` is already declared")]
    Redeclared { pos: Pos, name: String },
    #[error("{pos}: exponent must be an integer, found `{found}`")]
    NonIntegerExponent { pos: Pos, found: String },
    #[error("{variables} variables but {equations} equations")]
    CountMismatch { variables: usize, equations: usize },
    #[error(transparent)]
    Model(BuildError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64, String),
    Sym(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Num(_, s) => write!(f, "{s}"),
            Tok::Sym(c) => write!(f, "{c}"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), pos));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut k = i + 1;
                if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                    k += 1;
                }
                if k < chars.len() && chars[k].is_ascii_digit() {
                    i = k;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ParseError::Syntax {
                pos,
                found: s.clone(),
                expected: "a number".into(),
            })?;
            toks.push((Tok::Num(v, s), pos));
        } else if "+-*/^(),;:=".contains(c) {
            i += 1;
            toks.push((Tok::Sym(c), pos));
        } else {
            return Err(ParseError::Syntax {
                pos,
                found: c.to_string(),
                expected: "a token".into(),
            });
        }
        col += i - start;
    }
    toks.push((Tok::Eof, Pos { line, col }));
    Ok(toks)
}

/// Expression with unresolved identifiers.
#[derive(Debug, Clone)]
enum Raw {
    Ident(String, Pos),
    Num(f64),
    Unary(UnaryOp, Box<Raw>),
    Binary(BinaryOp, Box<Raw>, Box<Raw>),
    Pow(Box<Raw>, Exponent),
    Deriv(Box<Raw>, u32),
}

#[derive(Debug, Clone)]
enum Exponent {
    Int(i32),
    Named { name: String, negate: bool, pos: Pos },
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().to_string(),
            expected: expected.to_string(),
        })
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(&format!("`{c}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.error("an identifier"),
        }
    }

    fn expr(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinaryOp::Add,
                Tok::Sym('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Raw::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Raw, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('*') => BinaryOp::Mul,
                Tok::Sym('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Raw::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Raw, ParseError> {
        if self.eat('-') {
            Ok(Raw::Unary(UnaryOp::Neg, Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Raw, ParseError> {
        let base = self.primary()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let exponent = if self.eat('(') {
            let e = self.exponent()?;
            self.expect(')')?;
            e
        } else {
            self.exponent()?
        };
        Ok(Raw::Pow(Box::new(base), exponent))
    }

    fn exponent(&mut self) -> Result<Exponent, ParseError> {
        let negate = self.eat('-');
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v, text) => {
                self.bump();
                let v = if negate { -v } else { v };
                if v.fract() != 0.0 || v.abs() > i32::MAX as f64 {
                    return Err(ParseError::NonIntegerExponent { pos, found: text });
                }
                Ok(Exponent::Int(v as i32))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Exponent::Named { name, negate, pos })
            }
            Tok::Sym('(') => {
                // e.g. `x^(a + b)`: reject with a clear message
                let found = self.peek().to_string();
                Err(ParseError::NonIntegerExponent { pos, found })
            }
            _ => self.error("an integer exponent"),
        }
    }

    fn primary(&mut self) -> Result<Raw, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v, _) => {
                self.bump();
                Ok(Raw::Num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() != Tok::Sym('(') {
                    return Ok(Raw::Ident(name, pos));
                }
                self.bump();
                let op = match name.as_str() {
                    "sin" => Some(UnaryOp::Sin),
                    "cos" => Some(UnaryOp::Cos),
                    "exp" => Some(UnaryOp::Exp),
                    "log" => Some(UnaryOp::Log),
                    "sqrt" => Some(UnaryOp::Sqrt),
                    "Der" => None,
                    _ => return Err(ParseError::UnknownIdentifier { pos, name }),
                };
                let arg = self.expr()?;
                let raw = match op {
                    Some(op) => Raw::Unary(op, Box::new(arg)),
                    None => {
                        self.expect(',')?;
                        let order = match self.peek().clone() {
                            Tok::Num(v, _) if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 => {
                                self.bump();
                                v as u32
                            }
                            _ => return self.error("a non-negative integer derivative order"),
                        };
                        Raw::Deriv(Box::new(arg), order)
                    }
                };
                self.expect(')')?;
                Ok(raw)
            }
            _ => self.error("an expression"),
        }
    }
}

enum Decl {
    Vars(Vec<(String, Pos)>),
    Const(String, Pos, f64),
    Eq(String, Pos, Raw, Raw),
}

fn parse_decls(text: &str) -> Result<Vec<Decl>, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
    };
    let mut decls = Vec::new();
    loop {
        let keyword = match p.peek().clone() {
            Tok::Eof if !decls.is_empty() => return Ok(decls),
            Tok::Ident(k) if k == "var" || k == "const" || k == "eq" => k,
            _ => return p.error("`var`, `const` or `eq`"),
        };
        p.bump();
        let decl = match keyword.as_str() {
            "var" => {
                let mut names = vec![p.ident()?];
                while p.eat(',') {
                    names.push(p.ident()?);
                }
                Decl::Vars(names)
            }
            "const" => {
                let (name, pos) = p.ident()?;
                p.expect('=')?;
                let negate = p.eat('-');
                let value = match p.peek().clone() {
                    Tok::Num(v, _) => {
                        p.bump();
                        if negate {
                            -v
                        } else {
                            v
                        }
                    }
                    _ => return p.error("a number"),
                };
                Decl::Const(name, pos, value)
            }
            _ => {
                let (name, pos) = p.ident()?;
                p.expect(':')?;
                let lhs = p.expr()?;
                p.expect('=')?;
                let rhs = p.expr()?;
                Decl::Eq(name, pos, lhs, rhs)
            }
        };
        p.expect(';')?;
        decls.push(decl);
    }
}

struct Scope {
    vars: BTreeMap<String, usize>,
    consts: BTreeMap<String, f64>,
}

impl Scope {
    fn resolve(&self, raw: &Raw) -> Result<Expr, ParseError> {
        Ok(match raw {
            Raw::Ident(name, pos) => {
                if name == "t" {
                    Expr::Time
                } else if let Some(&j) = self.vars.get(name) {
                    Expr::Var(j)
                } else if let Some(&c) = self.consts.get(name) {
                    Expr::Const(c)
                } else {
                    return Err(ParseError::UnknownIdentifier {
                        pos: *pos,
                        name: name.clone(),
                    });
                }
            }
            Raw::Num(v) => Expr::Const(*v),
            Raw::Unary(op, a) => Expr::Unary(*op, Box::new(self.resolve(a)?)),
            Raw::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(self.resolve(a)?), Box::new(self.resolve(b)?))
            }
            Raw::Deriv(a, p) => Expr::Deriv(Box::new(self.resolve(a)?), *p),
            Raw::Pow(a, e) => {
                let k = match e {
                    Exponent::Int(k) => *k,
                    Exponent::Named { name, negate, pos } => {
                        let Some(&c) = self.consts.get(name) else {
                            return Err(if self.vars.contains_key(name) || name == "t" {
                                ParseError::NonIntegerExponent {
                                    pos: *pos,
                                    found: name.clone(),
                                }
                            } else {
                                ParseError::UnknownIdentifier {
                                    pos: *pos,
                                    name: name.clone(),
                                }
                            });
                        };
                        if c.fract() != 0.0 || c.abs() > i32::MAX as f64 {
                            return Err(ParseError::NonIntegerExponent {
                                pos: *pos,
                                found: name.clone(),
                            });
                        }
                        if *negate {
                            -(c as i32)
                        } else {
                            c as i32
                        }
                    }
                };
                Expr::Pow(Box::new(self.resolve(a)?), k)
            }
        })
    }
}

/// Parse model text into a validated [`DaeModel`].
pub fn parse_model(text: &str) -> Result<DaeModel, ParseError> {
    let decls = parse_decls(text)?;

    let mut scope = Scope {
        vars: BTreeMap::new(),
        consts: BTreeMap::new(),
    };
    let mut builder = ModelBuilder::new();
    let mut declared = std::collections::HashSet::new();
    let mut n_eqs = 0;
    for decl in &decls {
        match decl {
            Decl::Vars(names) => {
                for (name, pos) in names {
                    if name == "t" || !declared.insert(name.clone()) {
                        return Err(ParseError::Redeclared {
                            pos: *pos,
                            name: name.clone(),
                        });
                    }
                    builder.var(name);
                    scope.vars.insert(name.clone(), scope.vars.len());
                }
            }
            Decl::Const(name, pos, value) => {
                if name == "t" || !declared.insert(name.clone()) {
                    return Err(ParseError::Redeclared {
                        pos: *pos,
                        name: name.clone(),
                    });
                }
                builder.constant(name, *value);
                scope.consts.insert(name.clone(), *value);
            }
            Decl::Eq(..) => n_eqs += 1,
        }
    }
    if n_eqs != scope.vars.len() {
        return Err(ParseError::CountMismatch {
            variables: scope.vars.len(),
            equations: n_eqs,
        });
    }

    let mut eq_names = std::collections::HashSet::new();
    for decl in &decls {
        if let Decl::Eq(name, pos, lhs, rhs) = decl {
            if !eq_names.insert(name.clone()) {
                return Err(ParseError::Redeclared {
                    pos: *pos,
                    name: name.clone(),
                });
            }
            let lhs = scope.resolve(lhs)?;
            let rhs = scope.resolve(rhs)?;
            builder.equation(name, lhs, rhs);
        }
    }
    builder.finish().map_err(ParseError::Model)
}
