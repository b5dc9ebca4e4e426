//! Mission configuration, single runs and sweeps of the aerial writing
//! simulator, and the artifacts they produce.

pub mod config;
pub mod run;
pub mod sweep;

pub use config::{ConfigError, MissionConfig};
pub use run::{execute, simulate, write_artifacts, RunError, RunOutcome};
pub use sweep::{derive_seed, sweep, SweepAxis, SweepError, SweepRow, SweepValue};
