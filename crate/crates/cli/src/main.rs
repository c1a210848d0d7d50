use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use phasecomp_cli::report::render_report;
use phasecomp_cli::{parse_config, run, write_csv, write_report, ConfigError};

fn main() -> ExitCode {
    let config = match parse_config(std::env::args_os()) {
        Ok(c) => c,
        Err(ConfigError::Cli(e)) => e.exit(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(config: &phasecomp_cli::RunConfig) -> anyhow::Result<()> {
    let report = run(config)?;
    match &config.output {
        Some(path) => write_report(&report, path)
            .with_context(|| format!("writing report for {}", config.command.name()))?,
        None => std::io::stdout()
            .write_all(render_report(&report).as_bytes())
            .context("writing report to stdout")?,
    }
    if let Some(path) = &config.csv {
        write_csv(&report, path)?;
    }
    Ok(())
}
