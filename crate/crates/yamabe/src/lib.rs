//! File formats and the batch command-line front end for `yamabe-core`.

pub mod cli;
pub mod error;
pub mod io;
pub mod run;

pub use error::CliError;
