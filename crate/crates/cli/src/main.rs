//! `oadr`: command-line driver for options-aware dense retrieval.

mod commands;
mod manifest;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::commands::Cli;

fn init_logging() -> Result<(), String> {
    let level = match std::env::var("OADR_LOG").as_deref() {
        Err(_) | Ok("") | Ok("off") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        Ok(other) => return Err(format!("OADR_LOG must be off, info or debug (got {other:?})")),
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| writeln!(buf, "{} {}", record.level(), record.args()))
        .target(env_logger::Target::Stderr)
        .init();
    Ok(())
}

fn main() -> ExitCode {
    // clap prints usage and exits with status 2 on bad arguments.
    let cli = Cli::parse();
    if let Err(msg) = init_logging() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {}", format!("{err:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
