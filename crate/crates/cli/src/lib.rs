//! Scenario runner for the `rdlab` numerical laboratory.
//!
//! A config is a TOML file with three kinds of tables:
//!
//! ```toml
//! [term.log3]              # reaction-term catalog entry
//! kind = "shifted_log"
//! p = 3
//!
//! [operator.ex2]           # a(x) d^2/dx^2 + b(x) d/dx
//! a = "opsq(1, 2)"
//!
//! [scenario.thm1]          # one experiment
//! kind = "Thm1Certificate"
//! term = "log3"
//! ```
//!
//! `rdlab describe <cfg>` lists every parameter with its resolved value.

pub mod config;
pub mod error;
pub mod rates;
pub mod runner;
pub mod scenarios;

pub use config::{Config, Kind, Params, Scenario};
pub use error::{CliError, Result};
pub use runner::{describe, list, run, RunOptions, RunSummary, Status};
