use clap::Parser;
use cycfit_cli::config::Cli;
use cycfit_cli::{commands, exit};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which would read as INCONCLUSIVE
            std::process::exit(if e.use_stderr() { exit::INVALID_INPUT } else { exit::OK });
        }
    };
    std::process::exit(commands::run(&cli.command));
}
