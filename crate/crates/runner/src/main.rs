use std::path::PathBuf;
use std::process::ExitCode;

use chainqed_runner::{run, Config, RunOptions, Task};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chainqed", version, about = "Two-level chain coupled to quantized field and phonon modes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Schrödinger propagation
    Propagate(RunArgs),
    /// Heisenberg equations against i[H, O]
    VerifyEom(RunArgs),
    /// Compact cross-product form against the explicit equations
    VerifyCompact(RunArgs),
    /// Mean-field propagation
    Meanfield(RunArgs),
    /// Exact and mean-field runs side by side
    Compare(RunArgs),
    /// Parameter sweep over a base task
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::Propagate(a) => (Task::Propagate, a),
        Command::VerifyEom(a) => (Task::VerifyEom, a),
        Command::VerifyCompact(a) => (Task::VerifyCompact, a),
        Command::Meanfield(a) => (Task::Meanfield, a),
        Command::Compare(a) => (Task::Compare, a),
        Command::Sweep(a) => (Task::Sweep, a),
    };
    let level = if args.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (cfg, text) = match Config::load(&args.config) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(t) = cfg.task {
        if t != task {
            log::warn!("config names task '{}', running '{}'", t.name(), task.name());
        }
    }
    let opts = RunOptions {
        out_dir: args.out,
        workers: args.workers,
        seed: args.seed,
    };
    match run(&cfg, &text, task, &opts) {
        Ok(report) => {
            for c in &report.checks {
                println!(
                    "{} {}: measured {:e}, tolerance {:e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.tolerance
                );
            }
            for f in &report.flags {
                println!("flag: {f}");
            }
            for p in &report.points {
                println!("{} {}{}", if p.passed { "PASS" } else { "FAIL" }, p.dir, p.error.as_deref().map(|e| format!(": {e}")).unwrap_or_default());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
