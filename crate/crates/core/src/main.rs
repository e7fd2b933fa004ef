use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bvtransfer::commands::{
    cmd_check, cmd_homotopy, cmd_transfer, exit_code_for, CommandOptions, Report, RouteChoice,
    EXIT_INPUT,
};
use bvtransfer::problem::Problem;

/// Homotopy transfer of quantum L∞ structures on finite-dimensional
/// dg odd-symplectic spaces.
#[derive(Parser)]
#[command(name = "bvtransfer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the space and the master equation (or the main identity).
    Check(CommonArgs),
    /// Compute the effective action on homology.
    Transfer {
        #[command(flatten)]
        common: CommonArgs,
        /// hpl, feynman, alt or all (all also compares the routes).
        #[arg(long, default_value = "hpl")]
        route: String,
    },
    /// Compute the exactness witness relating the action and its transfer.
    Homotopy(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem file, or `-` for standard input.
    input: PathBuf,
    /// Truncation weight; overrides the file.
    #[arg(long)]
    max_weight: Option<u32>,
    /// Write the JSON report here (`-` for standard output) instead of
    /// standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed for the random sample inputs of the identity sweeps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monomial length bound of the exhaustive identity sweeps (0 disables).
    #[arg(long, default_value_t = 2)]
    exhaustive_len: usize,
}

fn read_input(path: &PathBuf) -> io::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn write_report(report: &Report, target: Option<&PathBuf>) -> io::Result<()> {
    let json = report.to_json();
    match target {
        Some(path) if path.as_os_str() != "-" => {
            std::fs::write(path, &json)?;
            let mut out = io::stdout().lock();
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{status} {}", check.name)?;
            }
            writeln!(out, "{}", report.status)
        }
        _ => io::stdout().lock().write_all(json.as_bytes()),
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    let (common, route) = match &cli.command {
        Command::Check(c) | Command::Homotopy(c) => (c, None),
        Command::Transfer { common, route } => (common, Some(route.as_str())),
    };
    let text = read_input(&common.input)
        .map_err(|e| format!("cannot read {}: {e}", common.input.display()))?;
    let mut options = CommandOptions {
        seed: common.seed,
        exhaustive_len: common.exhaustive_len,
        ..CommandOptions::default()
    };
    if let Some(route) = route {
        options.route = route.parse::<RouteChoice>().map_err(|e| e.to_string())?;
    }
    let outcome = Problem::parse(&text, common.max_weight).and_then(|problem| match &cli.command {
        Command::Check(_) => cmd_check(&problem),
        Command::Transfer { .. } => cmd_transfer(&problem, &options),
        Command::Homotopy(_) => cmd_homotopy(&problem, &options),
    });
    match outcome {
        Ok(report) => {
            write_report(&report, common.report.as_ref())
                .map_err(|e| format!("cannot write report: {e}"))?;
            Ok(report.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(exit_code_for(&e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}
