//! Command-line front end: configuration parsing, command dispatch, JSON
//! report emission.

pub mod commands;
pub mod config;
pub mod report;

use clap::Parser;

use config::{Cli, Command};
use report::Report;

/// Exit codes: 0 pass, 1 exact-check failure, 2 usage error, 3 I/O error.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

fn exit_code_for(err: &pjn_core::Error) -> i32 {
    match err {
        pjn_core::Error::Io(_) | pjn_core::Error::Format(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv`, runs the command and prints the JSON report. Returns the
/// process exit code.
pub fn run_from<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    // clap exits with code 2 on usage errors by itself when using parse();
    // try_parse keeps that behavior under our control.
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return EXIT_USAGE;
        }
    };
    let file = match commands::load_file_config(cli.config.as_deref()) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    let outcome: pjn_core::Result<Report> = match &cli.command {
        Command::Gen(args) => commands::gen(args, &file),
        Command::Osc(args) => commands::osc(args, &file),
        Command::Norm(args) => commands::norm(args, &file),
        Command::Sharp(args) => commands::sharp(args, &file),
        Command::Cz(args) => commands::cz(args, &file),
        Command::Chain(args) => commands::chain(args, &file),
        Command::Constants(args) => commands::constants_cmd(args, &file),
        Command::Verify(args) => commands::verify(args, &file),
    };
    match outcome {
        Ok(report) => {
            match serde_json::to_string_pretty(&report) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("error: report serialization: {e}");
                    return EXIT_IO;
                }
            }
            if report.exact_checks_pass() {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}
