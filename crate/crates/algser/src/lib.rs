//! Command-line front end: JSON specs in, exact text or JSON reports out.
//!
//! Exit codes: 0 for definite results, 2 for inconclusive ones, 1 for errors.

pub mod cli;
pub mod commands;
pub mod expr;
pub mod spec;

pub use commands::{Options, Report};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("invalid `{field}`: {msg}")]
    Validation { field: String, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{0}")]
    Core(String),
}

pub const EXIT_DEFINITE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
