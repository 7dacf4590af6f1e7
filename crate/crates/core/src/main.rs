use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use dk_sweep::cli::{execute, Cli};
use dk_sweep::Error;

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = cli.resolve()?;
    let output = execute(&cfg)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &output.csv)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(output.csv.as_bytes())?;
            stdout.flush()?;
        }
    }
    for note in &output.notes {
        eprintln!("{note}");
    }
    output.status
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
