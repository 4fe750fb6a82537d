//! `pdm`: predictive-maintenance modeling toolkit for AI4I-format data.
//!
//! Subcommands mirror the workflow stages — ingest, correlations, training,
//! tuning, evaluation, attribution, figures — plus `run` to execute the whole
//! pipeline from one config file and `synth` to produce a demo dataset.

mod artifacts;
mod config;
mod figures;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pdm_core::dataset::TargetMode;
use pdm_core::explain::ShapMethod;
use pdm_core::models::{Family, ModelConfig};
use pdm_core::{dataset, explain, metrics, models, stats, tuning};

use artifacts::OutDir;
use config::{RunConfig, SearchKind, ShapSpec, SplitSpec, TuningSpec};
use stages::UsageError;

#[derive(Parser)]
#[command(
    name = "pdm",
    version,
    about = "Failure-severity modeling and attribution for milling-machine telemetry"
)]
struct Cli {
    /// Cap the worker-thread pool (0 = one worker per core). `--threads 1`
    /// reproduces the outputs of any other setting bit-for-bit.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Output directory for artifacts (overrides PDM_OUT_DIR and config).
    #[arg(short, long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CsvArg {
    /// Dataset CSV; omit to reuse `dataset.json` from the output directory.
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic AI4I-format CSV.
    Synth {
        /// Where to write the CSV.
        #[arg(default_value = "ai4i_synthetic.csv")]
        path: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        #[arg(long, default_value_t = 20)]
        seed: u64,
    },
    /// Validate a CSV and persist the encoded dataset.
    Ingest {
        /// Dataset CSV to load.
        csv: PathBuf,
    },
    /// Pearson correlation matrix (JSON + CSV + SVG heatmap).
    Corr {
        #[command(flatten)]
        csv: CsvArg,
        /// Comma-separated column subset (default: numeric sensors + labels).
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
    },
    /// Split, standardize and fit models.
    Train {
        #[command(flatten)]
        csv: CsvArg,
        /// Target construction: severity | binary | multilabel.
        #[arg(long, default_value_t = TargetMode::Severity)]
        target: TargetMode,
        /// Families to fit (repeatable); default is the full roster.
        /// Multilabel mode fits exactly one family (the first given).
        #[arg(long = "model")]
        model: Vec<Family>,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 42)]
        split_seed: u64,
        /// Override every model's RNG seed (default: per-family defaults).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Cross-validated hyperparameter search for one family.
    Tune {
        #[command(flatten)]
        csv: CsvArg,
        /// Family to search.
        #[arg(long)]
        model: Family,
        /// grid | random
        #[arg(long, default_value_t = SearchKind::Grid)]
        search: SearchKind,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Configurations sampled by random search.
        #[arg(long, default_value_t = 16)]
        budget: usize,
        /// Refit the family on the tuned configuration, replacing its
        /// trained model file.
        #[arg(long)]
        refit: bool,
    },
    /// Score trained models on both splits and rank them.
    Evaluate {
        #[command(flatten)]
        csv: CsvArg,
        /// Score threshold for raising a flag (multilabel mode only).
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Shapley attributions for the highest-risk rows.
    Explain {
        #[command(flatten)]
        csv: CsvArg,
        /// Family to explain (default: best-ranked evaluated model).
        #[arg(long)]
        model: Option<Family>,
        /// auto | exact | tree | kernel
        #[arg(long, default_value_t = ShapMethod::Auto)]
        method: ShapMethod,
        /// Background rows sampled from the training split.
        #[arg(long, default_value_t = 100)]
        background: usize,
        #[arg(long, default_value_t = 7)]
        background_seed: u64,
        /// How many top-risk rows to explain.
        #[arg(long, default_value_t = 500)]
        queries: usize,
        /// Coalition samples per row for the kernel method.
        #[arg(long, default_value_t = 2048)]
        kernel_budget: usize,
        #[arg(long, default_value_t = 0)]
        kernel_seed: u64,
    },
    /// Render figures (scatter, residuals, beeswarm, dependence) from
    /// persisted artifacts.
    Report {
        #[command(flatten)]
        csv: CsvArg,
        /// Residual histogram bins.
        #[arg(long, default_value_t = 30)]
        bins: usize,
    },
    /// Run the full pipeline from a config file.
    Run {
        /// JSON config; flags below override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// severity | binary
        #[arg(long)]
        target: Option<TargetMode>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    match pdm_core::parallel::with_threads(threads, || dispatch(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// Map an error chain to the documented exit codes: 2 usage, 3 data/schema
/// and IO, 4 numerical/modeling failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if cause.is::<dataset::DatasetError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
        {
            return 3;
        }
        if cause.is::<models::ModelsError>()
            || cause.is::<explain::ExplainError>()
            || cause.is::<tuning::TuningError>()
            || cause.is::<metrics::MetricsError>()
            || cause.is::<stats::StatsError>()
        {
            return 4;
        }
    }
    3
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let out_flag = cli.out.as_deref();
    match cli.command {
        Command::Synth { path, rows, seed } => {
            stages::synth(rows, seed, &path)?;
            println!("wrote {} ({rows} rows, seed {seed})", path.display());
        }
        Command::Ingest { csv } => {
            let out = OutDir::resolve(out_flag, None)?;
            let artifacts = stages::ingest(&csv, &out)?;
            report_artifacts(&out, "ingest", &artifacts);
        }
        Command::Corr { csv, columns } => {
            let out = OutDir::resolve(out_flag, None)?;
            let (_, artifacts) = stages::corr(csv.csv.as_deref(), &out, columns)?;
            report_artifacts(&out, "corr", &artifacts);
        }
        Command::Train { csv, target, model, test_fraction, split_seed, seed } => {
            let out = OutDir::resolve(out_flag, None)?;
            let mut roster: Vec<ModelConfig> = if model.is_empty() {
                config::default_roster()
            } else {
                model.iter().map(|&f| ModelConfig::new(f)).collect()
            };
            if let Some(s) = seed {
                for m in &mut roster {
                    m.seed = s;
                }
            }
            let opts = stages::TrainOptions {
                target,
                split: SplitSpec { test_fraction, seed: split_seed },
                models: roster,
                multilabel_family: model.first().copied(),
            };
            let artifacts = stages::train(csv.csv.as_deref(), &out, &opts)?;
            report_artifacts(&out, "train", &artifacts);
        }
        Command::Tune { csv, model, search, folds, seed, budget, refit } => {
            let out = OutDir::resolve(out_flag, None)?;
            let spec = TuningSpec { family: model, search, folds, seed, budget };
            let (result, mut artifacts) = stages::tune(csv.csv.as_deref(), &out, &spec)?;
            if refit {
                artifacts.extend(stages::apply_tuned_config(csv.csv.as_deref(), &out, &result)?);
            }
            let best = result.best();
            println!(
                "best {} config: cv rmse {:.6} over {} candidates",
                model,
                best.score.mean_rmse,
                result.evaluated.len()
            );
            report_artifacts(&out, "tune", &artifacts);
        }
        Command::Evaluate { csv, threshold } => {
            let out = OutDir::resolve(out_flag, None)?;
            let artifacts = stages::evaluate(csv.csv.as_deref(), &out, threshold)?;
            report_artifacts(&out, "evaluate", &artifacts);
        }
        Command::Explain {
            csv,
            model,
            method,
            background,
            background_seed,
            queries,
            kernel_budget,
            kernel_seed,
        } => {
            let out = OutDir::resolve(out_flag, None)?;
            let opts = stages::ExplainOptions {
                model,
                shap: ShapSpec {
                    method,
                    background,
                    background_seed,
                    queries,
                    kernel_budget,
                    kernel_seed,
                },
            };
            let artifacts = stages::explain(csv.csv.as_deref(), &out, &opts)?;
            report_artifacts(&out, "explain", &artifacts);
        }
        Command::Report { csv, bins } => {
            let out = OutDir::resolve(out_flag, None)?;
            let artifacts = stages::report(csv.csv.as_deref(), &out, bins)?;
            report_artifacts(&out, "report", &artifacts);
        }
        Command::Run { config, dataset, target } => {
            let mut run_config = match config {
                Some(path) => RunConfig::load(&path)?,
                None => RunConfig::default(),
            };
            if let Some(d) = dataset {
                run_config.dataset = d;
            }
            if let Some(t) = target {
                run_config.target = t;
            }
            let out = OutDir::resolve(out_flag, Some(run_config.out_dir.as_path()))?;
            let manifest = stages::run_pipeline(&run_config, &out)?;
            let total: u64 = manifest.stages.iter().map(|s| s.wall_ms).sum();
            println!(
                "pipeline ok: {} stages, {} artifacts, {:.1}s (config {})",
                manifest.stages.len(),
                manifest.stages.iter().map(|s| s.artifacts.len()).sum::<usize>(),
                total as f64 / 1000.0,
                &manifest.config_hash[..12],
            );
            println!("manifest: {}", out.path("manifest.json").display());
        }
    }
    Ok(())
}

fn report_artifacts(out: &OutDir, stage: &str, artifacts: &[String]) {
    println!("{stage}: wrote {} artifacts to {}", artifacts.len(), out.root().display());
    for a in artifacts {
        println!("  {a}");
    }
}
