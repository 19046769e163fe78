use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prognet_cli::commands::{self, TTestArgs};
use prognet_cli::config::Overrides;
use prognet_cli::{CliError, WORKERS_ENV};
use prognet_core::parallel::Parallelism;
use prognet_core::transfer::StrategyKind;

#[derive(Parser)]
#[command(name = "prognet", version, about = "Baseline, PT/FT and progressive-network transfer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validation experiment from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per processor).
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
        #[arg(long, value_parser = ["1", "2", "4", "8"])]
        train_folds: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Strategy to run (repeatable): baseline, ptft, prognet.
        #[arg(long = "strategy")]
        strategies: Vec<StrategyKind>,
    },
    /// Write a synthetic source/target corpus pair.
    Synth {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Corrected paired t-test between two CV results.
    Ttest {
        /// Report containing result A (and B when no second report is given).
        report_a: PathBuf,
        report_b: Option<PathBuf>,
        #[arg(long)]
        a: Option<StrategyKind>,
        #[arg(long)]
        b: Option<StrategyKind>,
        #[arg(long)]
        df: Option<usize>,
        #[arg(long)]
        ratio: Option<f64>,
    },
    /// Rebuild learning curves from per-fold training logs.
    Curve {
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_epochs: Option<usize>,
        /// Average only folds that reached an epoch instead of padding.
        #[arg(long)]
        no_pad: bool,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            workers,
            train_folds,
            epochs,
            strategies,
        } => {
            let overrides = Overrides {
                seed,
                output_dir: out,
                train_folds: train_folds.map(|s| s.parse().expect("validated by clap")),
                epochs,
                strategies,
            };
            match commands::cmd_run(&config, &overrides, Parallelism::from_workers(workers))? {
                Some(report) => print!("{}", report.table()),
                None => println!("synthetic corpus written"),
            }
        }
        Command::Synth { config, seed, out } => {
            let dir = commands::cmd_synth(config.as_deref(), seed, out.as_deref())?;
            println!("wrote {}", dir.display());
        }
        Command::Ttest {
            report_a,
            report_b,
            a,
            b,
            df,
            ratio,
        } => {
            let o = commands::cmd_ttest(&TTestArgs {
                report_a,
                report_b,
                a,
                b,
                df,
                ratio,
            })?;
            let r = &o.result;
            println!("a: {}\nb: {}", o.a.name(), o.b.name());
            println!("mean difference: {}", r.mean_difference);
            println!("t: {}\ndf: {}\np: {}", r.t, r.df, r.p);
            let verdict = if r.significant { "significant" } else { "not significant" };
            println!("verdict: {verdict} at alpha {}", prognet_core::eval::ALPHA);
            if r.degenerate_variance {
                println!("note: zero variance in the paired differences");
            }
        }
        Command::Curve {
            logs,
            out,
            max_epochs,
            no_pad,
        } => {
            let curves = commands::cmd_curve(&logs, &out, max_epochs, !no_pad)?;
            for (s, c) in curves {
                println!("{}: {} epochs", s.name(), c.points.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
