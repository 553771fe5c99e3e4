mod args;
mod commands;
mod render;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Format};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match cli.format {
                Format::Text => eprintln!("error[{}]: {}", failure.code, failure.message),
                Format::Structured => eprintln!("{}", render::envelope("error", &failure)),
            }
            ExitCode::from(1)
        }
    }
}
