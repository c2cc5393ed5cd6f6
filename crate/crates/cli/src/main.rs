//! Command-line driver for the adversarial test prioritization toolkit.
//!
//! One JSON config plus one seed determines every output byte. Stages cache
//! their artifacts in the output directory and are reused when inputs match.
//!
//! Exit codes: 0 success, 2 configuration error, 3 stage failure.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lbt_core::error::Error;
use lbt_core::pipeline::{ExperimentConfig, Pipeline, STAGE_ORDER};
use lbt_core::seed;

#[derive(Parser)]
#[command(
    name = "lbt",
    about = "Prioritize adversarial test inputs via surrogate mutation and sequential testing",
    version
)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for artifacts and reports.
    #[arg(long, global = true, default_value = "lbt-out")]
    out: PathBuf,

    /// Override the config's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline (optionally stopping after a stage).
    Run {
        /// Last stage to run: data, train-mut, gen-adv, build-surrogate,
        /// calibrate, prioritize, evaluate.
        #[arg(long)]
        stage: Option<String>,
    },
    /// Materialize the dataset splits and train the model under test.
    TrainMut,
    /// Tune the attack into the accuracy band and write the adversarial set.
    GenAdv,
    /// Build the behavioral model from black-box label queries.
    BuildSurrogate,
    /// Grow the mutant pool, measure the benign score threshold, and set
    /// the mutant budget.
    Calibrate,
    /// Produce the prioritized suite (default) or one baseline's ranking.
    Prioritize {
        /// Baseline method: random, gini, pe, maxp, nac, nbc, dsa, kde.
        #[arg(long)]
        method: Option<String>,
    },
    /// Rank all enabled baselines, evaluate every method, write the report.
    Evaluate,
    /// Recompute the retraining delta for one finished method.
    Retrain {
        #[arg(long)]
        method: String,
    },
    /// Print the per-method metric table of a finished run.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn load_pipeline(cli: &Cli) -> Result<Pipeline, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <file> is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Pipeline::new(cfg, &cli.out)
}

fn run(cli: Cli) -> Result<(), Error> {
    let pipeline = load_pipeline(&cli)?;
    match &cli.command {
        Command::Run { stage } => {
            let last = STAGE_ORDER[STAGE_ORDER.len() - 1];
            let stage = stage.as_deref().unwrap_or(last);
            let _lock = pipeline.lock()?;
            pipeline.run_through(stage)?;
            if stage == last {
                print!("{}", pipeline.report_table()?);
            }
        }
        Command::TrainMut => {
            let _lock = pipeline.lock()?;
            pipeline.run_data()?;
            pipeline.run_train_mut()?;
        }
        Command::GenAdv => {
            let _lock = pipeline.lock()?;
            pipeline.run_gen_adv()?;
        }
        Command::BuildSurrogate => {
            let _lock = pipeline.lock()?;
            pipeline.run_build_surrogate()?;
        }
        Command::Calibrate => {
            {
                let _lock = pipeline.lock()?;
                pipeline.run_calibrate()?;
            }
            print!("{}", pipeline.calibration_summary()?);
        }
        Command::Prioritize { method: None } => {
            let _lock = pipeline.lock()?;
            pipeline.run_prioritize()?;
            let csv = fs::read_to_string(pipeline.out_dir().join("suite").join("lbt.csv"))?;
            print!("{csv}");
        }
        Command::Prioritize {
            method: Some(method),
        } => {
            let rank_seed = seed::child(pipeline.config().seed, "baseline-random");
            let ranked = pipeline.rank_method(method, rank_seed)?;
            let header = serde_json::json!({
                "method": method,
                "seed": pipeline.config().seed,
            });
            print!("{}", ranked.to_csv(ranked.ids.len(), &header)?);
        }
        Command::Evaluate => {
            let _lock = pipeline.lock()?;
            pipeline.run_evaluate()?;
            print!("{}", pipeline.report_table()?);
        }
        Command::Retrain { method } => {
            let delta = pipeline.retrain_method(method)?;
            println!("{method} retrain accuracy delta: {delta:+.6}");
        }
        Command::Report => {
            print!("{}", pipeline.report_table()?);
        }
    }
    Ok(())
}
