//! Structural analysis of differential-algebraic equation systems.
//!
//! The pipeline reads a model into a code list ([`codelist`]), extracts its
//! signature matrix and canonical offsets ([`sigma`]), splits it into fine
//! blocks ([`btf`]), classifies equations as quasilinear or not ([`ql`]),
//! derives initialization sets and a stage schedule ([`scheme`]), and can
//! run that schedule numerically with Taylor coefficients ([`executor`]).

pub mod analysis;
pub mod btf;
pub mod codelist;
pub mod executor;
pub mod ql;
pub mod scheme;
pub mod sigma;

pub use analysis::Analysis;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] codelist::ParseError),
    #[error(transparent)]
    Build(#[from] codelist::BuildError),
    #[error(transparent)]
    Sigma(#[from] sigma::SigmaError),
    #[error(transparent)]
    Btf(#[from] btf::BtfError),
    #[error(transparent)]
    Exec(#[from] executor::ExecError),
}
