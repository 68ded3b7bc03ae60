use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sbtd_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut buf = Vec::new();
    let result = run(cli, &mut buf);
    // records are flushed even when a later check fails, so the offending
    // seed stays visible
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(&buf);
    let _ = stdout.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
