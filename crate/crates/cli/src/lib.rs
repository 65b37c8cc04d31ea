//! Experiment harness around `qmle-core`: configuration, repeated trials,
//! parameter sweeps with log-log fits, and the verification battery.

pub mod certify;
pub mod config;
pub mod error;
pub mod fit;
pub mod run;
pub mod verify;

pub use config::Config;
pub use error::CliError;
