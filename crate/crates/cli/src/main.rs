use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::Parser;
use superconc::experiment::{
    all_pass, default_n_grid, emit_report, run_scenario, write_report, LpExponent, OutputFormat, Scenario,
    ScenarioConfig, ScenarioParams, CATALOG, DEFAULT_LP_C, DEFAULT_REPS,
};

/// Monte Carlo checks of superconcentration rates.
///
/// Run without arguments to list the scenarios.
#[derive(Parser, Debug)]
#[command(name = "superconc", version)]
struct Args {
    /// Scenario name, see the catalog.
    #[arg(long)]
    scenario: Option<String>,

    /// Comma-separated, strictly increasing list of n.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<u64>>,

    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,

    #[arg(long, env = "SUPERCONC_SEED", default_value_t = 0)]
    seed: u64,

    /// Potential exponent for alpha-max-variance and coulomb-max.
    #[arg(long)]
    alpha: Option<f64>,

    /// ℓᵖ exponent: a number, or `auto` for ceil(c·log n).
    #[arg(long)]
    p: Option<String>,

    /// The c in p = ceil(c·log n).
    #[arg(long, default_value_t = DEFAULT_LP_C)]
    lp_c: f64,

    /// Gamma shape for gamma-max-tails.
    #[arg(long)]
    shape: Option<f64>,

    #[arg(long)]
    beta_a: Option<f64>,

    #[arg(long)]
    beta_b: Option<f64>,

    /// Source law for pushforward-validate.
    #[arg(long)]
    source: Option<String>,

    /// Target law for pushforward-validate.
    #[arg(long)]
    target: Option<String>,

    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// csv or json-lines.
    #[arg(long, default_value = "csv")]
    format: String,

    /// Shard count; 1 runs sequentially.
    #[arg(long)]
    shards: Option<usize>,
}

fn print_catalog() {
    println!("scenarios:");
    let width = CATALOG.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
    for (name, about) in CATALOG {
        println!("  {name:width$}  {about}");
    }
    println!("\nrun `superconc --help` for flags");
}

fn run(args: Args) -> anyhow::Result<bool> {
    let Some(name) = args.scenario else {
        print_catalog();
        return Ok(true);
    };
    let p = match args.p.as_deref() {
        None | Some("auto") => LpExponent::Auto { c: args.lp_c },
        Some(v) => LpExponent::Fixed(v.parse().with_context(|| format!("--p expects a number or 'auto', got '{v}'"))?),
    };
    let params = ScenarioParams {
        alpha: args.alpha,
        p: Some(p),
        shape: args.shape,
        beta_a: args.beta_a,
        beta_b: args.beta_b,
        source: args.source,
        target: args.target,
    };
    let scenario = Scenario::parse(&name, &params)?;
    let format: OutputFormat = args.format.parse()?;
    if args.shards == Some(0) {
        bail!("--shards must be positive");
    }
    let mut config = ScenarioConfig::new(scenario, args.n_grid.unwrap_or_else(default_n_grid), args.reps, args.seed);
    config.shards = args.shards;
    config.format = format;
    config.out = args.out;
    let rows = run_scenario(&config)?;
    match &config.out {
        Some(path) => emit_report(&rows, format, path)?,
        None => {
            let stdout = io::stdout();
            write_report(&rows, format, stdout.lock(), "<stdout>".as_ref())?;
            io::stdout().flush().ok();
        }
    }
    Ok(all_pass(&rows))
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
