//! The `logmorph` command line: argument parsing, command dispatch and
//! report writing on top of `logmorph-core`.

pub mod args;
mod commands;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use commands::Env;
use report::Writer;

/// Runs one invocation and returns the process exit code: 0 on success,
/// 1 on a fatal error (one line on stderr), 2 on a usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let msg = format!("{e:#}").replace(['\n', '\r'], " ");
            eprintln!("logmorph: error: {msg}");
            1
        }
    }
}

fn execute(cli: &Cli) -> anyhow::Result<()> {
    let env = Env {
        cli,
        writer: Writer::new(&cli.out, cli.output_format),
    };
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&env, a),
        Command::Classify(a) => commands::classify(&env, a),
        Command::Templates(a) => commands::templates(&env, a),
        Command::Words(a) => commands::words(&env, a),
        Command::Phrases(a) => commands::phrases(&env, a),
        Command::Pairs(a) => commands::pairs(&env, a),
        Command::Ngrams(a) => commands::ngrams(&env, a),
        Command::Profile(a) => commands::profile(&env, a),
    }
}
