use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use amis_bench::{parse_config, run_benchmark, RunOptions};

#[derive(Parser)]
#[command(name = "amis-bench", version, about = "Compare adaptive importance sampling schemes over seeded replicates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark described by a config file.
    Run {
        config: PathBuf,
        /// Replace the config's base seed.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Worker threads (results do not depend on it).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (defaults to run.output, then the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write trace_<seed>_<alg>.csv per run.
        #[arg(long)]
        traces: bool,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed_override, jobs, out, traces } => {
            let mut cfg = parse_config(&config)?;
            if let Some(s) = seed_override {
                cfg.override_seed(s);
            }
            let out_dir = out
                .or_else(|| cfg.output.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let opts = RunOptions { jobs, traces };
            let report = run_benchmark(&cfg, &opts)?;
            report
                .write(&out_dir)
                .with_context(|| format!("writing results to {}", out_dir.display()))?;
            let failed = report.rows.iter().filter(|r| r.outcome.is_err()).count();
            eprintln!(
                "{} runs ({failed} failed) written to {}",
                report.rows.len(),
                out_dir.display()
            );
            print!("{}", report.summary());
        }
    }
    Ok(())
}
