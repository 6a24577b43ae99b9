use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use reserve_cli::commands::{cmd_gen, cmd_lift_tables, cmd_optimize, cmd_sweep};
use reserve_cli::config::{MechanismChoice, RunConfig, SweepMode, Task};
use reserve_cli::logio::LogFormat;
use reserve_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "reserves",
    version,
    about = "Personalized reserve prices for second-price auctions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute reserves from a bid log
    Optimize(Shared),
    /// Revenue lift and welfare loss tables, one row per input log
    LiftTables(Shared),
    /// A/B sweep over treated bidders (theoretical) or treated fractions (empirical)
    Sweep(Shared),
    /// Write a generator's samples to a log file
    Gen(Shared),
}

#[derive(Args)]
struct Shared {
    /// JSON run configuration; flags override its keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bid log (repeatable for lift tables)
    #[arg(long)]
    input: Vec<PathBuf>,
    #[arg(long)]
    generator: Option<String>,
    /// Generator parameters as a JSON object
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<LogFormat>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismChoice>,
    #[arg(long, value_enum)]
    task: Option<Task>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    max_product_size: Option<u64>,
    #[arg(long)]
    max_rounds: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<SweepMode>,
    /// Value distribution as JSON, e.g. {"family":"uniform","lo":0,"hi":1}
    #[arg(long)]
    dist: Option<String>,
    /// Number of bidders for theoretical sweeps
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated treated fractions for empirical sweeps
    #[arg(long, value_delimiter = ',')]
    fractions: Option<Vec<f64>>,
    /// Reserve CSV applied in empirical sweeps (default: optimal lazy reserves)
    #[arg(long)]
    reserves: Option<PathBuf>,
    /// Random bidder subsets per fraction in empirical sweeps
    #[arg(long)]
    assignments: Option<u64>,
}

fn json_flag<T: serde::de::DeserializeOwned>(name: &str, text: Option<String>) -> CliResult<Option<T>> {
    text.map(|t| serde_json::from_str(&t).map_err(|e| CliError::Config(format!("--{name}: {e}"))))
        .transpose()
}

impl Shared {
    fn into_config(self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            input: self.input,
            format: self.format,
            generator: self.generator,
            params: json_flag("params", self.params)?,
            count: self.count,
            seed: self.seed,
            out: self.out,
            mechanism: self.mechanism,
            task: self.task,
            trials: self.trials,
            max_product_size: self.max_product_size,
            max_rounds: self.max_rounds,
            mode: self.mode,
            dist: json_flag("dist", self.dist)?,
            n: self.n,
            fractions: self.fractions,
            reserves: self.reserves,
            assignments: self.assignments,
        };
        Ok(base.overlay(flags))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Optimize(a) => {
            let r = cmd_optimize(&a.into_config()?)?;
            println!(
                "{} revenue {} (zero reserves {}); wrote {} and {}",
                r.result.mechanism,
                r.result.expected_revenue,
                r.revenue_zero_reserve,
                r.reserves_path.display(),
                r.summary_path.display()
            );
        }
        Command::LiftTables(a) => {
            let r = cmd_lift_tables(&a.into_config()?)?;
            println!(
                "{} slots; wrote {} and {}",
                r.rows.len(),
                r.revenue_path.display(),
                r.welfare_path.display()
            );
        }
        Command::Sweep(a) => {
            let r = cmd_sweep(&a.into_config()?)?;
            println!("{} rows; wrote {}", r.result.rows.len(), r.path.display());
        }
        Command::Gen(a) => {
            let path = cmd_gen(&a.into_config()?)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
