#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use error::{CliError, CliResult};

type Execute = fn(&std::path::Path, &std::path::Path, u64) -> CliResult<()>;

const AFTER_HELP: &str = "\
Outputs (all written atomically into --out; every JSON file carries `version`,
`command`, `seed` and `config`, every CSV starts with a `# {...}` line holding the same):
  quantize        trace.csv (n,y,q,v), summary.json
  analyze-filter  filter.json, coefficient_table.csv (n,h1..h{k+1}) for minimal filters
  gap-report      gap_report.json, gap_report.csv (k,y_star,theorem_limit,classical_limit,
                  g_at_classical_limit), gap_curve.csv (k,y,g,m), lambda0.csv (k,f_sup,lambda0)
  sweep           sweep.csv (k,amplitude,lambda,runs,max_abs_v,min_v,max_v,m,certified,
                  violations,lambda0,y_star,classical), rows sorted by (k, amplitude, lambda)
  adversary       <name>.csv (n,y,v) per run, adversary.json
  reconstruct     reconstruction.csv (t,f,f_q,error), summary.json

Exit codes: 0 ok, 1 usage or i/o error, 2 numeric failure.";

#[derive(Parser)]
#[command(name = "sigdelta", version, about = "One-bit sigma-delta quantization experiments", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON config for the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a sampled signal and summarize the state trace.
    Quantize(Common),
    /// Moment conditions, g sequence and trajectory data for a feedback filter.
    AnalyzeFilter(Common),
    /// Gap function, y_star and λ₀ for a list of k.
    GapReport(Common),
    /// Empirical state bounds over a grid of k, amplitude and sampling rate.
    Sweep(Common),
    /// Step and peak-flip inputs with a divergence verdict.
    Adversary(Common),
    /// Reconstruct from bits or samples and measure the sup error.
    Reconstruct(Common),
}

fn dispatch(cmd: Command) -> CliResult<()> {
    let (c, f): (Common, Execute) = match cmd {
        Command::Quantize(c) => (c, commands::quantize::execute),
        Command::AnalyzeFilter(c) => (c, commands::analyze_filter::execute),
        Command::GapReport(c) => (c, commands::gap_report::execute),
        Command::Sweep(c) => (c, commands::sweep::execute),
        Command::Adversary(c) => (c, commands::adversary::execute),
        Command::Reconstruct(c) => (c, commands::reconstruct::execute),
    };
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(error::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    f(&c.config, &c.out, c.seed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
