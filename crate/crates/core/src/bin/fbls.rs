use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fbls::cli::{self, RunConfig, RunError};
use fbls::problems;

#[derive(Parser)]
#[command(name = "fbls", version, about = "Forward-backward splitting with linesearches")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration, write trace, report and summary.
    Run { config: PathBuf },
    /// Solve several configurations on a shared problem and tabulate costs.
    Compare {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Objective gap used for the iterations_to_gap column.
        #[arg(long, default_value_t = 1e-6)]
        gap: f64,
        /// Directory for comparison.csv (defaults to the first config's output_dir).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the problem families.
    ListProblems,
    /// Print the certificate names and what they check.
    ListCertificates,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match args.command {
        Command::Run { config } => run(config),
        Command::Compare { configs, gap, output } => compare(configs, gap, output),
        Command::ListProblems => {
            for e in problems::catalog() {
                println!("{:<26} {}\n{:<26} metadata: {}", e.family, e.summary, "", e.metadata);
            }
            0
        }
        Command::ListCertificates => {
            for (name, inequality, needs) in cli::certificate_catalog() {
                println!("{name:<24} {inequality}\n{:<24} requires: {needs}", "");
            }
            0
        }
    };
    ExitCode::from(code as u8)
}

fn run(path: PathBuf) -> i32 {
    let config = match RunConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fbls: {e}");
            return 2;
        }
    };
    match cli::run(&config) {
        Ok(outcome) => {
            print!("{}", cli::summary_text(&config, &outcome));
            for c in &outcome.certificates {
                let status = match &c.outcome {
                    Ok(cert) => cert.status.to_string(),
                    Err(e) => format!("error: {e}"),
                };
                println!("certificate {:<24} {status}", c.name);
            }
            println!("outputs in {}", outcome.output_dir.display());
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("fbls: {e}");
            e.exit_code()
        }
    }
}

fn compare(paths: Vec<PathBuf>, gap: f64, output: Option<PathBuf>) -> i32 {
    let mut configs = Vec::new();
    for p in &paths {
        match RunConfig::load(p) {
            Ok(c) => configs.push(c),
            Err(e) => {
                eprintln!("fbls: {e}");
                return 2;
            }
        }
    }
    let comparison = match cli::compare(&configs, gap) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fbls: {}", RunError::Invalid(e));
            return 2;
        }
    };
    let dir = output.unwrap_or_else(|| configs[0].resolved_output_dir());
    let written = fs::create_dir_all(&dir)
        .map_err(fbls::Error::from)
        .and_then(|_| fs::File::create(dir.join("comparison.csv")).map_err(fbls::Error::from))
        .and_then(|f| cli::write_comparison_csv(&comparison, f));
    if let Err(e) = written {
        eprintln!("fbls: {e}");
        return 1;
    }
    println!("{:<18} {:<20} {:>10} {:>8} {:>8} {:>8}", "method", "termination", "iterations", "prox", "grad", "f");
    for r in &comparison.rows {
        println!(
            "{:<18} {:<20} {:>10} {:>8} {:>8} {:>8}",
            r.method.name(),
            r.termination.name(),
            r.iterations,
            r.cum_prox,
            r.cum_grad,
            r.cum_f
        );
    }
    println!("table written to {}", dir.join("comparison.csv").display());
    if comparison.rows.iter().any(|r| r.termination.is_failure()) {
        1
    } else {
        0
    }
}
