//! Command-line front end: function specifications, subcommands and deterministic output.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod spec;

use std::io::Write;

use clap::Parser;

pub use commands::{Cli, Command};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use expr::{parse, parse_function_expr, Expr, ParseError};

/// Runs one invocation with the configuration from `FRACHARDY_CONFIG`; returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, RunConfig::from_env(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, S>(argv: I, cfg: CliResult<RunConfig>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) { 0 } else { 1 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = cfg.and_then(|cfg| {
        cfg.validate()?;
        match cfg.workers {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| CliError::param("workers", e.to_string()))?;
                let mut buf = Vec::new();
                let r = pool.install(|| commands::execute(&cli.command, &cfg, &mut buf));
                let _ = out.write_all(&buf);
                r
            }
            None => commands::execute(&cli.command, &cfg, out),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
