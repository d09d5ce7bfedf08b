use std::process::ExitCode;

use clap::Parser;
use gaudin_cli::{Cli, run};

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}
