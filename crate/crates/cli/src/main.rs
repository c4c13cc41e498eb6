use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cubic_moment_cli::commands::{cmd_solve, cmd_synth, cmd_verify, Outcome, SolveFlags};

/// Solve, verify and synthesize bivariate cubic moment problems.
#[derive(Parser)]
#[command(name = "cubic-moment", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find an atomic representing measure for the moments in a problem file.
    Solve {
        file: String,
        /// Verification tolerance, |computed - β| <= tol·(1 + |β|).
        #[arg(long)]
        tol: Option<f64>,
        /// Include M(2), M(3), ranks and column relations.
        #[arg(long)]
        certificate: bool,
        /// Print rational values as "p/q" strings.
        #[arg(long)]
        exact: bool,
    },
    /// Check a measure file against a problem file.
    Verify {
        problem: String,
        measure: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Compute the ten moments of a measure file.
    Synth { measure: String },
}

fn emit(out: Outcome) -> ExitCode {
    if let Some(v) = &out.stdout {
        println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
    }
    if let Some(msg) = &out.stderr {
        eprintln!("{msg}");
    }
    ExitCode::from(out.code as u8)
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
    let out = match cli.command {
        Command::Solve {
            file,
            tol,
            certificate,
            exact,
        } => cmd_solve(
            &file,
            SolveFlags {
                tol,
                certificate,
                exact,
            },
        ),
        Command::Verify { problem, measure, tol } => cmd_verify(&problem, &measure, tol),
        Command::Synth { measure } => cmd_synth(&measure),
    };
    emit(out)
}
