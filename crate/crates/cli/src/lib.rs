//! Library side of the `hetmimo` binary: subcommands and SVG output.

pub mod commands;
pub mod plot;

pub use commands::{cmd_run, cmd_validate, Failure, RunArgs, ValidateArgs};
