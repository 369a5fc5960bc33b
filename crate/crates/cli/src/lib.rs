//! Library half of the `cit` command-line tool.
//!
//! Everything the binary does is implemented here so both the integration
//! tests and the thin `main` can drive it: configuration files ([`config`]),
//! the two shipped operating points ([`presets`]), report and table
//! serialization ([`report`]), and the subcommand implementations
//! ([`commands`]).
//!
//! # Exit codes
//!
//! The binary distinguishes three outcomes, encoded by [`error::CliError`]:
//!
//! - `0` — success; any requested files were written.
//! - `1` — validation failure: malformed flags, unparseable or inconsistent
//!   configuration, plan caps exceeded. Nothing was computed.
//! - `2` — runtime failure: a propagation guard tripped (aliasing, window
//!   overflow), a solver rejected its grid, no admissible gate exists, or an
//!   output file could not be written.

pub mod commands;
pub mod config;
pub mod error;
pub mod presets;
pub mod report;
