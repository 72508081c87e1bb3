//! Batch command line: dataset synthesis, frame merging, detection,
//! prediction, evaluation and integration-time fitting.
//!
//! Every tabular output is a CSV file starting with `# key: value`
//! provenance lines (command, seed, configuration). Outputs never depend on
//! the number of worker threads.

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

mod args;
mod commands;
mod error;
mod output;

pub use args::Cli;
pub use error::{CliError, EXIT_IO, EXIT_SCHEMA, EXIT_USAGE};
pub use output::OUT_ROOT_ENV;

/// Parses `argv` (program name first) and runs the subcommand. Errors are
/// reported as one JSON line on stderr; the return value is the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            let _ = writeln!(std::io::stderr(), "{}", err.to_json());
            return err.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{summary}");
            0
        }
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "{}", err.to_json());
            err.exit_code()
        }
    }
}
