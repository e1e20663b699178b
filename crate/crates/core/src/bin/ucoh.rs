use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use uniform_cohomology::cli::{run_command_str, Overrides, COMMANDS};

/// Exact computations for interacting systems on finite windows.
#[derive(Parser, Debug)]
#[command(name = "ucoh", version)]
struct Args {
    /// One of: consv, validate, irreducible, expand, diff, closed, integrate,
    /// pairing, split, uniformize, h0, omega-rho, delta, decompose,
    /// counterexample, transfer.
    command: String,
    /// JSON manifest; `-` reads standard input.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
}

fn read_manifest(path: Option<&PathBuf>) -> std::io::Result<String> {
    match path {
        None => Ok("{}".into()),
        Some(p) if p.as_os_str() == "-" => std::io::read_to_string(std::io::stdin()),
        Some(p) => std::fs::read_to_string(p),
    }
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if !COMMANDS.contains(&args.command.as_str()) {
        eprintln!("unknown command `{}`; expected one of {}", args.command, COMMANDS.join(", "));
        return ExitCode::from(2);
    }
    let text = match read_manifest(args.manifest.as_ref()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read manifest: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = run_command_str(&args.command, &text, &Overrides { seed: args.seed, budget: args.budget });
    let body = outcome.to_json_string();
    match &args.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, body) {
                eprintln!("cannot write report: {e}");
                return ExitCode::from(2);
            }
        }
        None => print!("{body}"),
    }
    ExitCode::from(outcome.code as u8)
}
