//! Library side of the `daestruct` command-line tool: report building,
//! rendering, initialization files and the exit-code mapping.

pub mod init;
pub mod report;
pub mod text;

use daestruct::codelist::{parse_model, DaeModel};
use daestruct::executor::{solve_to_order, ExecError, SolveOptions};
use daestruct::scheme::SchemeMode;
use daestruct::{Analysis, Error};
use thiserror::Error;

pub use init::{parse_init, InitFileError};
pub use report::{AnalysisReport, SolveReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid model: {0}")]
    Model(Error),
    #[error("invalid initialization file: {0}")]
    Init(#[from] InitFileError),
    #[error("invalid stage range `{0}`, expected `a..b` with a <= b")]
    Stages(String),
    #[error("{0}")]
    IllPosed(Error),
    #[error("{0}")]
    Exec(ExecError),
    #[error("missing initialization:{0}")]
    MissingInit(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Model(_) | CliError::Init(_) | CliError::Stages(_) => 2,
            CliError::IllPosed(_) => 3,
            CliError::Exec(_) => 4,
            CliError::MissingInit(_) => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
}

fn analysis_error(e: Error) -> CliError {
    match e {
        Error::Parse(_) | Error::Build(_) => CliError::Model(e),
        Error::Sigma(_) | Error::Btf(_) => CliError::IllPosed(e),
        Error::Exec(x) => CliError::Exec(x),
    }
}

pub fn load(source: &str) -> Result<(DaeModel, Analysis), CliError> {
    let model = parse_model(source).map_err(|e| CliError::Model(e.into()))?;
    let analysis = Analysis::run(&model).map_err(analysis_error)?;
    Ok((model, analysis))
}

/// Parses `a..b`; either bound may be negative.
pub fn parse_stages(s: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Stages(s.to_string());
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn analyze(
    source: &str,
    mode: SchemeMode,
    stages: Option<(i64, i64)>,
) -> Result<AnalysisReport, CliError> {
    let (model, analysis) = load(source)?;
    let stages = stages.unwrap_or((analysis.k_d(), 0));
    Ok(AnalysisReport::build(&model, &analysis, mode, stages))
}

fn missing_message(model: &DaeModel, values: &[(usize, u32)], guesses: &[(usize, u32)]) -> String {
    let mut s = String::new();
    for (label, pairs) in [("value", values), ("guess", guesses)] {
        for &(j, r) in pairs {
            s.push_str(&format!("\n  {label} ({}, {r})", model.variable_names()[j]));
        }
    }
    s
}

pub fn solve(
    source: &str,
    init_text: &str,
    mode: SchemeMode,
    order: i64,
    tol: Option<f64>,
) -> Result<SolveReport, CliError> {
    let (model, analysis) = load(source)?;
    let init = parse_init(init_text, &model)?;
    let mut opts = SolveOptions::default();
    if let Some(t) = tol {
        opts.tol = t;
    }
    match solve_to_order(&model, &analysis, mode, &init, order, &opts) {
        Ok(e) => Ok(SolveReport::build(&model, &e, mode, order)),
        Err(ExecError::MissingInitialization { values, guesses }) => {
            Err(CliError::MissingInit(missing_message(&model, &values, &guesses)))
        }
        Err(e) => Err(CliError::Exec(e)),
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}
