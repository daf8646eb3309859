use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use conecert_cli::{run, Cli, Output};

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let code = out.exit_code();
    let text = match &out {
        Output::Report(r) => {
            eprintln!("{}: {:?} ({} claims, {:.2} s)", r.command, r.verdict, r.claims.len(), r.wall_time_s);
            serde_json::to_string_pretty(r).map(|s| s + "\n")
        }
        Output::Json(v) => serde_json::to_string_pretty(v).map(|s| s + "\n"),
        Output::Csv(s) => Ok(s.clone()),
    };
    let written = text.map_err(std::io::Error::other).and_then(|t| emit(&cli, &t));
    if let Err(e) = written {
        eprintln!("error: writing output: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code as u8)
}
