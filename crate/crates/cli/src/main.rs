//! `lowtail`: reproducible experiments with JSON or CSV output.
//!
//! Exit codes: 0 success, 1 domain or configuration error, 2 resolution or
//! convergence error, 3 failed acceptance criterion, 64 usage error,
//! 74 output error. `LOWTAIL_THREADS` fixes the worker count.

mod args;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn configure_threads() {
    if let Some(n) = std::env::var("LOWTAIL_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    configure_threads();
    match run::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("lowtail: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
