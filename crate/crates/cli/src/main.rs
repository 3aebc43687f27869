mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ZooAction};

const EXIT_ERROR: u8 = 1;

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Diagnose(c) => commands::diagnose(&c.resolve()?),
        Command::Scale(c) => commands::scale(&c.resolve()?),
        Command::Path(c) => commands::path(&c.resolve()?),
        Command::Track(c) => commands::track(&c.resolve()?),
        Command::Map(c) => commands::map(&c.resolve()?),
        Command::Zoo { action: ZooAction::List } => commands::zoo_list(),
        Command::Zoo { action: ZooAction::Run(c) } => commands::zoo_run(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
