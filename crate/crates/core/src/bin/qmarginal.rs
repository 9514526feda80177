use std::process::ExitCode;

use clap::Parser;
use qmarginal::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    match run(&cli, &echo) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli, echo: &str) -> qmarginal::Result<u8> {
    let outcome = execute(cli, echo)?;
    for (stage, secs) in &outcome.timings {
        eprintln!("timing {stage}: {secs:.3}s");
    }
    match &cli.out {
        Some(path) => std::fs::write(path, &outcome.report)?,
        None => print!("{}", outcome.report),
    }
    if let (Some(path), Some(lines)) = (&cli.transcript, &outcome.transcript) {
        std::fs::write(path, lines)?;
    }
    Ok(outcome.exit_code as u8)
}
