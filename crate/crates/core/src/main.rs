use std::process::ExitCode;

use clap::Parser;
use rabi_lab::config::{resolve, Cli, FileConfig, THREADS_ENV};
use rabi_lab::run::run_job;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .and_then(|file| resolve(&cli, &file.unwrap_or_default(), std::env::var(THREADS_ENV).ok().as_deref()))
        .and_then(|config| run_job(&config));
    let err = match result {
        Ok(report) => match report.status() {
            Ok(()) => {
                for f in &report.manifest.files {
                    println!("{}", f.name);
                }
                return ExitCode::SUCCESS;
            }
            Err(e) => e,
        },
        Err(e) => e,
    };
    eprintln!("rabi-lab: {err}");
    ExitCode::from(err.exit_code() as u8)
}
