use std::process::ExitCode;

use clap::Parser;
use pxrobin::cli::{run, Args};

fn main() -> ExitCode {
    ExitCode::from(run(&Args::parse()) as u8)
}
