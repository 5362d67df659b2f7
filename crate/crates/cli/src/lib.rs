//! Command-line front end of `haffsim`: configuration files, presets, the
//! subcommands and their artifacts.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod presets;

pub use args::{Cli, Command, Global};
pub use commands::{run, Verdict};
pub use config::{parse_config, RunConfig};
pub use error::CliError;

/// Worker pool cap from `HAFFSIM_THREADS`.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("HAFFSIM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| CliError::Usage(format!("HAFFSIM_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}
