mod report;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use termred::diagnostics::{occupancy_table, ode_findings, OccupancyRow, OdeFinding};
use termred::expr::{parse_system, System};
use termred::scheduler::{run_reduction_with, RunConfig, RunError, Strategy, SystemState};
use termred::toolkit::{bench_grid, oracle_best, BenchConfig, PairKind, ToolkitError, CSV_HEADER};

use report::{Stats, StepRecord};

/// Shorten systems of equations by pairwise single-term combinations.
#[derive(Parser)]
#[command(name = "termred", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a system to a fixed point and print the result.
    Reduce(ReduceArgs),
    /// Print occupancy rows and ODE findings as JSON lines.
    Diagnose {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time the pair search on random polynomials; prints CSV.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ReduceArgs {
    input: PathBuf,
    /// Write the reduced system here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "few")]
    strategy: Strategy,
    /// Summary report as a single JSON object.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// One JSON record per accepted step.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Compare every step with the brute-force search (when small enough).
    #[arg(long)]
    oracle_check: bool,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Disable quotient-table pruning.
    #[arg(long)]
    no_pruning: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Term counts of the first equation.
    #[arg(long, value_delimiter = ',', default_value = "100,1000")]
    n1: Vec<usize>,
    /// Term counts of the second equation.
    #[arg(long, value_delimiter = ',', default_value = "10,1000")]
    n2: Vec<usize>,
    #[arg(long, default_value_t = 7)]
    vars: usize,
    #[arg(long, default_value_t = 7)]
    degree: u32,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time constructed reducible pairs instead of independent ones.
    #[arg(long)]
    successful: bool,
    #[arg(long)]
    no_pruning: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure with its exit status: 1 for usage and input errors, 2 when an
/// internal consistency check fails.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    fn consistency(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn run_failure(e: RunError) -> Failure {
    match e {
        RunError::Pool(msg) => Failure::usage(msg),
        other => Failure::consistency(other.to_string()),
    }
}

fn read_system(path: &Path) -> Result<System, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    parse_system(&text).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let res = match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    res.map_err(|e| Failure::usage(format!("write failed: {e}")))
}

fn json_lines<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| serde_json::to_string(&x).expect("records serialize") + "\n")
        .collect()
}

fn reduce(args: ReduceArgs) -> Result<(), Failure> {
    let system = read_system(&args.input)?;
    let cfg = RunConfig {
        max_steps: args.max_steps,
        threads: args.threads.max(1),
        pruning: !args.no_pruning,
    };
    let oracle = args.oracle_check;
    let state = run_reduction_with(
        SystemState::new(system.clone(), args.strategy),
        &cfg,
        |e1, e2, r, raw| {
            if !oracle {
                return Ok(());
            }
            match oracle_best(e1, e2) {
                Ok(best) if best.min_terms != raw.term_count() => Err(format!(
                    "oracle reaches {} terms, engine {} (predicted {})",
                    best.min_terms,
                    raw.term_count(),
                    r.predicted_n3
                )),
                Ok(_) | Err(ToolkitError::GuardExceeded { .. }) => Ok(()),
                Err(e) => Err(e.to_string()),
            }
        },
    )
    .map_err(run_failure)?;

    write_out(args.output.as_deref(), &state.to_system().to_string())?;
    if let Some(path) = &args.stats {
        let stats = Stats::new(&system, &state, ode_findings(state.equations()));
        write_out(Some(path), &json_lines([stats]))?;
    }
    if let Some(path) = &args.log {
        let records = state.log().iter().enumerate().map(|(i, s)| StepRecord::new(i + 1, s));
        write_out(Some(path), &json_lines(records))?;
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DiagnosticLine {
    Occupancy(OccupancyRow),
    Ode(OdeFinding),
}

fn diagnose(input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let system = read_system(input)?;
    let indexed = || system.equations.iter().enumerate();
    let lines = occupancy_table(indexed())
        .into_iter()
        .map(DiagnosticLine::Occupancy)
        .chain(ode_findings(indexed()).into_iter().map(DiagnosticLine::Ode));
    write_out(output, &json_lines(lines))
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let cfg = BenchConfig {
        n1: args.n1,
        n2: args.n2,
        vars: args.vars,
        degree: args.degree,
        reps: args.reps.max(1),
        seed: args.seed,
        kind: if args.successful {
            PairKind::Successful
        } else {
            PairKind::Unsuccessful
        },
        pruning: !args.no_pruning,
    };
    let cells = bench_grid(&cfg).map_err(|e| Failure::usage(e.to_string()))?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for c in &cells {
        csv.push_str(&c.csv_row());
        csv.push('\n');
    }
    write_out(args.output.as_deref(), &csv)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let res = match cli.command {
        Command::Reduce(args) => reduce(args),
        Command::Diagnose { input, output } => diagnose(&input, output.as_deref()),
        Command::Bench(args) => bench(args),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("termred: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
