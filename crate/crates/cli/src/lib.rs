//! Library side of the `fluxmet` command-line tool: configuration parsing,
//! curve tables, model files, plotting and the subcommand implementations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod model;
pub mod plot;
pub mod table;

pub use error::{CliError, Result};
pub use table::CurveTable;
