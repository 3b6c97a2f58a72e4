//! Command-line front end for the `ranksignal` library.
//!
//! Subcommands cover the full workflow: `validate` runs the
//! signal-vs-uniformity pipeline over a rankings table and writes a
//! versioned JSON report plus human summaries; `nulls` prints the exact or
//! Monte Carlo reference distributions for a panel shape; `aggregate`
//! converts pairwise comparisons to strict rankings; `anchor` draws
//! reference panels from an external rating table; `judge-score` evaluates
//! automatic judges against panel majorities; `agreement` reports
//! rater-to-rater concordance and reliability.
//!
//! All commands are exposed as library functions taking options structs and
//! returning artifact structs, so the binary is a thin flag-parsing shell
//! and every pipeline is testable in-process.

pub mod cache;
pub mod commands;
pub mod error;
pub mod formats;
pub mod report;

pub use error::CliError;
