use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pearl_lab::engines::EngineKind;
use pearl_lab_bench::checks::{markdown_report, run_checks};
use pearl_lab_bench::run::{cmd_run, RunOptions};
use pearl_lab_bench::sweep::{cmd_sweep, parse_floats, parse_range, SweepSpec};
use pearl_lab_bench::train::cmd_train;
use pearl_lab_bench::{BenchError, Result};

/// Speculative and parallel decoding lab.
#[derive(Parser)]
#[command(name = "pearl-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepEngine {
    Sd,
    Pearl,
}

#[derive(Subcommand)]
enum Command {
    /// Train a byte-level n-gram model from a corpus file.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config and write its trace, summary and plots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Decode prompts concurrently (results do not change).
        #[arg(long)]
        parallel_prompts: bool,
        /// Inject real forward latency and report wall-clock time.
        #[arg(long)]
        real_latency: bool,
    },
    /// Simulated speedup over an (alpha, c, gamma) grid.
    Sweep {
        #[arg(long, default_value = "0.6,0.8")]
        alphas: String,
        #[arg(long, default_value = "3,5")]
        cs: String,
        /// Windows, e.g. `1-8` or `2,4,8`.
        #[arg(long, default_value = "1-8")]
        gammas: String,
        #[arg(long, value_enum, default_value = "pearl")]
        engine: SweepEngine,
        /// Engine steps per cell.
        #[arg(long, default_value_t = 50_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the acceptance checks and print a markdown report.
    VerifyTheorems {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only these check ids, e.g. `1,8`.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            corpus,
            order,
            lambda,
            out,
        } => {
            let report = cmd_train(&corpus, order, lambda, &out)?;
            println!("vocab size: {}", report.vocab_size);
            println!("contexts: {}", report.contexts);
        }
        Command::Run {
            config,
            seed,
            out,
            parallel_prompts,
            real_latency,
        } => {
            let opts = RunOptions {
                seed,
                out,
                parallel_prompts,
                real_latency,
            };
            let s = cmd_run(&config, &opts)?;
            println!(
                "{} gamma={}: {} tokens in {} steps, {:.4} per step, simulated speedup {:.4}",
                s.engine, s.gamma, s.tokens, s.steps, s.mean_finalized_per_step, s.simulated_speedup
            );
            if let Some(rate) = s.acceptance_rate {
                println!("acceptance rate {rate:.4} over {} completed draft runs", s.segments);
            }
            if let Some(w) = s.wall_clock_secs {
                println!("wall clock {w:.3} s");
            }
        }
        Command::Sweep {
            alphas,
            cs,
            gammas,
            engine,
            steps,
            seed,
            out,
        } => {
            let spec = SweepSpec {
                engine: match engine {
                    SweepEngine::Sd => EngineKind::Sd,
                    SweepEngine::Pearl => EngineKind::Pearl,
                },
                alphas: parse_floats(&alphas)?,
                cs: parse_floats(&cs)?,
                gammas: parse_range(&gammas)?,
                steps,
                seed,
            };
            for best in cmd_sweep(&spec, &out)? {
                println!("alpha={} c={}: best gamma {}", best.alpha, best.c, best.gamma);
            }
        }
        Command::VerifyTheorems { seed, out, only } => {
            let outcomes = run_checks(seed, only.as_deref());
            let report = markdown_report(seed, &outcomes);
            print!("{report}");
            if let Some(path) = out {
                std::fs::write(&path, &report).map_err(|e| BenchError::io(path, e))?;
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            if failed > 0 {
                return Err(BenchError::ChecksFailed {
                    failed,
                    total: outcomes.len(),
                });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PEARL_LAB_LOG", "warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
