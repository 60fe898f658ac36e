//! Command-line front end for `zeno-core`: configuration, parallel
//! Monte-Carlo ensembles, the published reference tables and CSV/JSON
//! output.

pub mod cli;
pub mod config;
pub mod error;
pub mod parallel;
pub mod reference;
pub mod tables;

pub use config::RunConfig;
pub use error::{CliError, Result};
