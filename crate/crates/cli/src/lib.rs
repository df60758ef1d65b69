//! Config-driven front end for the swarm colony simulator.
//!
//! The binary exposes four subcommands:
//!
//! * `run` — integrate a configuration, writing a per-step CSV report and
//!   optional field snapshots;
//! * `validate` — check every model hypothesis and report violations;
//! * `sweep` — run the Cartesian product of parameter overrides;
//! * `convergence` — rerun a configuration under grid/time refinement and
//!   estimate convergence orders.
//!
//! Configuration files are line-oriented `section.key = value` text; see the
//! repository README for the full schema and the `configs/` directory for
//! ready-made examples.

pub mod config;
pub mod convergence;
pub mod error;
pub mod initial;
pub mod kvmap;
pub mod report;
pub mod run;
pub mod snapshot;
pub mod sweep;
pub mod threads;

pub use config::RunConfig;
pub use error::CliError;
