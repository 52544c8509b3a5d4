use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tsgb_bench::config::RunConfig;
use tsgb_bench::data::build_task_data;
use tsgb_bench::error::{AtStage, BenchError, Stage};
use tsgb_bench::report::{completed_runs, load_results, plot_run, tables_by_task, write_report};
use tsgb_bench::throughput::{measure_throughput, DEFAULT_BATCH, DEFAULT_REPEATS};
use tsgb_bench::{run_benchmark, sweep_dir};
use tsgb_models::FittedModel;

#[derive(Parser)]
#[command(name = "tsgb", about = "Benchmark generative time-series models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
    /// Run every config in a directory.
    Sweep {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
    },
    /// Tabulate completed runs.
    Report {
        #[arg(long, default_value = "runs")]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also draw each run's plot into its directory.
        #[arg(long)]
        plots: bool,
    },
    /// Time training steps and sampling on a freshly initialized model.
    Throughput {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BATCH)]
        batch_size: usize,
        #[arg(long, default_value_t = DEFAULT_REPEATS)]
        repeats: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {}", e.stage, e.message);
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run { config, runs } => {
            let cfg = RunConfig::from_file(&config)?;
            let result = run_benchmark(&cfg, &runs)?;
            println!("{}", serde_json::to_string_pretty(&result.report).at(Stage::Report)?);
            println!("run directory: {}", tsgb_bench::run_dir(&runs, &cfg).display());
        }
        Command::Sweep { config_dir, parallel, runs } => {
            let entries = sweep_dir(&config_dir, &runs, parallel)?;
            let mut first_failure = None;
            for e in &entries {
                match &e.outcome {
                    Ok(r) => println!("ok    {}  {}", e.source.display(), &r.config_hash[..16]),
                    Err(err) => {
                        println!("fail  {}  [{}] {}", e.source.display(), err.stage, err.message);
                        first_failure.get_or_insert(err.stage);
                    }
                }
            }
            if let Some(stage) = first_failure {
                return Err(BenchError::new(stage, "one or more sweep runs failed"));
            }
        }
        Command::Report { runs, out, plots } => {
            let dirs = completed_runs(&runs)?;
            let results = load_results(&dirs)?;
            let tables = tables_by_task(&results)?;
            for path in write_report(&tables, &out)? {
                println!("wrote {}", path.display());
            }
            if plots {
                for (dir, result) in dirs.iter().zip(&results) {
                    println!("wrote {}", plot_run(dir, result)?.display());
                }
            }
        }
        Command::Throughput { config, batch_size, repeats } => {
            let cfg = RunConfig::from_file(&config)?;
            cfg.validate()?;
            let data = build_task_data(&cfg)?;
            let mut model = FittedModel::initialize(
                &cfg.model,
                &data.spec,
                &data.train,
                &cfg.effective_trainer(),
                tsgb_models::DType::F32,
            )
            .at(Stage::Fit)?;
            let t = measure_throughput(&mut model, &data.train, batch_size, repeats, cfg.seed)?;
            println!("{}", serde_json::to_string_pretty(&t).at(Stage::Report)?);
        }
    }
    Ok(())
}
