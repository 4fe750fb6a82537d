//! Pipeline stages. Each stage reads its inputs from the output directory
//! (or ingests a CSV passed directly), writes its artifacts there, and
//! returns the list of files it produced; `run_pipeline` chains them and
//! records the run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use pdm_core::dataset::{self, Dataset, Standardizer, Target, TargetMode};
use pdm_core::explain::{self, Background, KernelOptions, ShapMatrix, ShapMethod};
use pdm_core::metrics::{self, EvalReport, LabelReport};
use pdm_core::models::{self, Family, ModelConfig, MultiLabelModel, TrainedModel};
use pdm_core::stats::{self, CorrMatrix};
use pdm_core::tuning::{self, Axis, SearchSpace, TuningResult};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::artifacts::{csv_body, OutDir, RunManifest, StageRecord};
use crate::config::{RunConfig, SearchKind, ShapSpec, SplitSpec, TuningSpec};
use crate::figures;

/// Invalid flag combinations and similar caller mistakes (exit code 2).
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

// ------------------------------------------------------------- loading ----

/// Load the dataset either straight from a CSV or from `dataset.json`.
pub fn load_dataset(csv: Option<&Path>, out: &OutDir) -> anyhow::Result<Dataset> {
    match csv {
        Some(path) => {
            let table = dataset::load_ai4i(path)
                .with_context(|| format!("loading {}", path.display()))?;
            Ok(dataset::encode_features(&table)?)
        }
        None => out.read_json::<Dataset>("dataset.json", "ingest"),
    }
}

/// Persisted train/test partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitRecord {
    pub n: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// What the train stage produced: the target construction, the split, and
/// every fitted configuration (seeds included).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainSummary {
    pub target: TargetMode,
    pub split: SplitSpec,
    pub trained: Vec<ModelConfig>,
    /// Set in multilabel mode: the one family fitted one-vs-rest.
    pub multilabel_family: Option<Family>,
}

/// Evaluation artifact: per-model reports on both splits plus the ranking.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub target: TargetMode,
    pub split: SplitSpec,
    /// Family names ordered best to worst on the held-out split.
    pub ranking: Vec<String>,
    pub reports: Vec<EvalReport>,
}

/// Per-flag classification results for a multilabel run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LabelMetricsBundle {
    pub family: Family,
    pub threshold: f64,
    pub split: SplitSpec,
    pub reports: Vec<LabelReport>,
}

/// Attribution artifact: provenance (model, method, seeds) plus the matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExplainRecord {
    pub model: Family,
    pub requested_method: ShapMethod,
    pub background_size: usize,
    pub background_seed: u64,
    pub kernel_budget: usize,
    pub kernel_seed: u64,
    /// Original dataset row indices of the explained rows, in matrix order.
    pub query_rows: Vec<usize>,
    pub matrix: ShapMatrix,
}

/// One figure's file pair in `report.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigureRecord {
    pub name: String,
    pub svg: String,
    pub csv: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportSummary {
    pub best_model: String,
    pub figures: Vec<FigureRecord>,
}

fn model_file(family: Family) -> String {
    format!("model_{family}.json")
}

fn family_slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect::<String>()
        .split('_')
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

fn severity_like_target(d: &Dataset, target: TargetMode) -> anyhow::Result<Vec<f64>> {
    match dataset::derive_target(d, target) {
        Target::Vector(v) => Ok(v),
        Target::Flags(_) => Err(UsageError(format!(
            "target mode `{target}` has no single regression vector"
        ))
        .into()),
    }
}

// -------------------------------------------------------------- stages ----

/// `synth`: write a synthetic AI4I-format CSV.
pub fn synth(rows: usize, seed: u64, path: &Path) -> anyhow::Result<()> {
    let csv = pdm_core::synth::generate_csv(&pdm_core::synth::SynthConfig { rows, seed });
    std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `ingest`: validate + encode the CSV and persist the dataset.
pub fn ingest(csv: &Path, out: &OutDir) -> anyhow::Result<Vec<String>> {
    let table = dataset::load_ai4i(csv).with_context(|| format!("loading {}", csv.display()))?;
    let d = dataset::encode_features(&table)?;

    #[derive(Serialize)]
    struct IngestSummary {
        source: PathBuf,
        rows: usize,
        features: Vec<String>,
        failure_count: usize,
        flag_counts: Vec<(String, usize)>,
    }
    let summary = IngestSummary {
        source: csv.to_path_buf(),
        rows: d.n_rows(),
        features: d.feature_names.clone(),
        failure_count: d.machine_failure.iter().map(|&v| usize::from(v)).sum(),
        flag_counts: dataset::FLAG_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| {
                (name.to_string(), d.flags.iter().map(|f| usize::from(f[i])).sum())
            })
            .collect(),
    };

    Ok(vec![
        out.write_json("dataset.json", &d)?,
        out.write_json("ingest_summary.json", &summary)?,
    ])
}

/// `corr`: Pearson matrix over the analysis columns, as JSON + CSV + SVG.
pub fn corr(
    csv: Option<&Path>,
    out: &OutDir,
    columns: Option<Vec<String>>,
) -> anyhow::Result<(CorrMatrix, Vec<String>)> {
    let d = load_dataset(csv, out)?;
    let columns = columns.unwrap_or_else(stats::default_corr_columns);
    let corr = stats::pearson_matrix(&d, &columns)?;
    let artifacts = vec![
        out.write_json("corr.json", &corr)?,
        out.write_text("corr.csv", &figures::corr_csv(&corr))?,
        out.write_text("corr.svg", &figures::corr_svg(&corr))?,
    ];
    Ok((corr, artifacts))
}

/// Options for the train stage.
pub struct TrainOptions {
    pub target: TargetMode,
    pub split: SplitSpec,
    /// Roster to fit; one configuration per family.
    pub models: Vec<ModelConfig>,
    /// Multilabel mode fits this family one-vs-rest (default: the best
    /// ranked family if an evaluation exists, else gradient boosting).
    pub multilabel_family: Option<Family>,
}

/// `train`: split, standardize on training rows, fit the roster.
pub fn train(csv: Option<&Path>, out: &OutDir, opts: &TrainOptions) -> anyhow::Result<Vec<String>> {
    let d = load_dataset(csv, out)?;
    let (train_rows, test_rows) =
        dataset::train_test_split(d.n_rows(), opts.split.test_fraction, opts.split.seed)?;
    let scaler = Standardizer::fit(&d.features, &train_rows)?;
    let x_train = scaler.transform(&d.features.select_rows(&train_rows));

    let mut artifacts = vec![
        out.write_json(
            "split.json",
            &SplitRecord {
                n: d.n_rows(),
                test_fraction: opts.split.test_fraction,
                seed: opts.split.seed,
                train: train_rows.clone(),
                test: test_rows,
            },
        )?,
        out.write_json("standardizer.json", &scaler)?,
    ];

    let mut summary = TrainSummary {
        target: opts.target,
        split: opts.split,
        trained: Vec::new(),
        multilabel_family: None,
    };

    if opts.target == TargetMode::MultiLabel {
        let family = match opts.multilabel_family {
            Some(f) => f,
            None => best_ranked_family(out).unwrap_or(Family::GradientBoosting),
        };
        let config = opts
            .models
            .iter()
            .find(|m| m.family == family)
            .cloned()
            .unwrap_or_else(|| ModelConfig::new(family));
        let flags = match dataset::derive_target(&d, TargetMode::MultiLabel) {
            Target::Flags(m) => m.select_rows(&train_rows),
            Target::Vector(_) => unreachable!("multilabel target is a flag matrix"),
        };
        let model = models::fit_multilabel(&config, &x_train, &flags)?;
        artifacts.push(out.write_json(&format!("multilabel_model_{family}.json"), &model)?);
        summary.trained.push(config);
        summary.multilabel_family = Some(family);
    } else {
        let y = severity_like_target(&d, opts.target)?;
        let y_train: Vec<f64> = train_rows.iter().map(|&r| y[r]).collect();
        for config in &opts.models {
            let model = models::fit(config, &x_train, &y_train)?
                .with_feature_names(&d.feature_names);
            artifacts.push(out.write_json(&model_file(config.family), &model)?);
            summary.trained.push(config.clone());
        }
    }

    artifacts.push(out.write_json("train_summary.json", &summary)?);
    Ok(artifacts)
}

/// The best-ranked family from a previous evaluation, if one exists.
fn best_ranked_family(out: &OutDir) -> Option<Family> {
    let bundle: MetricsBundle = out.read_json("metrics.json", "evaluate").ok()?;
    bundle.ranking.first()?.parse().ok()
}

/// Default cross-validation search space per family: a small grid around
/// each family's baseline configuration.
pub fn default_search_space(family: Family) -> SearchSpace {
    let axes = match family {
        Family::Linear => vec![],
        Family::Cart => vec![
            Axis::MaxDepth(vec![None, Some(4), Some(6), Some(8)]),
            Axis::MinSamplesLeaf(vec![1, 5, 20]),
        ],
        Family::Knn => vec![Axis::K(vec![3, 5, 9, 15])],
        Family::Svr => vec![Axis::C(vec![0.5, 1.0, 2.0]), Axis::Epsilon(vec![0.05, 0.1])],
        Family::AdaboostR2 => vec![Axis::NEstimators(vec![25, 50])],
        Family::RandomForest => vec![
            Axis::NEstimators(vec![50, 100]),
            Axis::MaxDepth(vec![None, Some(8)]),
        ],
        Family::GradientBoosting => vec![
            Axis::NEstimators(vec![100, 200]),
            Axis::LearningRate(vec![0.05, 0.1]),
            Axis::MaxDepth(vec![Some(3), Some(4)]),
        ],
        Family::RegularizedBoosting => vec![
            Axis::NEstimators(vec![100, 200]),
            Axis::Lambda(vec![0.5, 1.0, 2.0]),
        ],
    };
    SearchSpace::new(family, axes)
}

/// `tune`: k-fold search over one family on the training rows only.
pub fn tune(
    csv: Option<&Path>,
    out: &OutDir,
    spec: &TuningSpec,
) -> anyhow::Result<(TuningResult, Vec<String>)> {
    let d = load_dataset(csv, out)?;
    let split: SplitRecord = out.read_json("split.json", "train")?;
    let summary: TrainSummary = out.read_json("train_summary.json", "train")?;
    let y = severity_like_target(&d, summary.target)?;

    // Raw (unstandardized) training features: each fold refits its own
    // standardizer inside cross-validation, so no validation row leaks in.
    let x_train = d.features.select_rows(&split.train);
    let y_train: Vec<f64> = split.train.iter().map(|&r| y[r]).collect();
    let plan = dataset::kfold(split.train.len(), spec.folds, spec.seed, None)?;

    let space = default_search_space(spec.family);
    let result = match spec.search {
        SearchKind::Grid => tuning::grid_search(&space, &x_train, &y_train, &plan)?,
        SearchKind::Random => {
            tuning::random_search(&space, &x_train, &y_train, &plan, spec.seed, spec.budget)?
        }
    };
    let artifact = out.write_json(&format!("tuning_{}.json", spec.family), &result)?;
    Ok((result, vec![artifact]))
}

/// Refit one family on the full training split with its tuned config,
/// replacing the roster model file.
pub fn apply_tuned_config(
    csv: Option<&Path>,
    out: &OutDir,
    result: &TuningResult,
) -> anyhow::Result<Vec<String>> {
    let d = load_dataset(csv, out)?;
    let split: SplitRecord = out.read_json("split.json", "train")?;
    let scaler: Standardizer = out.read_json("standardizer.json", "train")?;
    let summary: TrainSummary = out.read_json("train_summary.json", "train")?;
    let y = severity_like_target(&d, summary.target)?;

    let x_train = scaler.transform(&d.features.select_rows(&split.train));
    let y_train: Vec<f64> = split.train.iter().map(|&r| y[r]).collect();
    let config = result.best().config.clone();
    let model = models::fit(&config, &x_train, &y_train)?.with_feature_names(&d.feature_names);
    Ok(vec![out.write_json(&model_file(config.family), &model)?])
}

/// `evaluate`: score every trained model on both splits; in multilabel
/// mode, per-flag classification metrics instead.
pub fn evaluate(
    csv: Option<&Path>,
    out: &OutDir,
    threshold: f64,
) -> anyhow::Result<Vec<String>> {
    let d = load_dataset(csv, out)?;
    let split: SplitRecord = out.read_json("split.json", "train")?;
    let scaler: Standardizer = out.read_json("standardizer.json", "train")?;
    let summary: TrainSummary = out.read_json("train_summary.json", "train")?;

    let x_train = scaler.transform(&d.features.select_rows(&split.train));
    let x_test = scaler.transform(&d.features.select_rows(&split.test));

    if summary.target == TargetMode::MultiLabel {
        let family = summary
            .multilabel_family
            .ok_or_else(|| UsageError("train summary lists no multilabel family".into()))?;
        let model: MultiLabelModel =
            out.read_json(&format!("multilabel_model_{family}.json"), "train")?;
        let flags_all = match dataset::derive_target(&d, TargetMode::MultiLabel) {
            Target::Flags(m) => m,
            Target::Vector(_) => unreachable!("multilabel target is a flag matrix"),
        };
        let predicted = models::predict_multilabel(&model, &x_test, threshold)?;
        let labels: Vec<String> = dataset::FLAG_NAMES.iter().map(|s| s.to_string()).collect();
        let reports =
            metrics::classification_metrics(&labels, &flags_all.select_rows(&split.test), &predicted)?;
        let bundle = LabelMetricsBundle {
            family,
            threshold,
            split: SplitSpec { test_fraction: split.test_fraction, seed: split.seed },
            reports,
        };
        return Ok(vec![out.write_json("label_metrics.json", &bundle)?]);
    }

    let y = severity_like_target(&d, summary.target)?;
    let y_train: Vec<f64> = split.train.iter().map(|&r| y[r]).collect();
    let y_test: Vec<f64> = split.test.iter().map(|&r| y[r]).collect();

    let mut artifacts = Vec::new();
    let mut reports = Vec::new();
    let mut test_reports = Vec::new();
    for config in &summary.trained {
        let family = config.family;
        let model: TrainedModel = out.read_json(&model_file(family), "train")?;
        let train_pred = model.predict(&x_train)?;
        let test_pred = model.predict(&x_test)?;
        reports.push(metrics::regression_metrics(
            family.name(),
            "train",
            &y_train,
            &train_pred,
        )?);
        let test_report =
            metrics::regression_metrics(family.name(), "test", &y_test, &test_pred)?;
        reports.push(test_report.clone());
        test_reports.push(test_report);

        let csv_text = figures::scatter_csv(&split.test, &y_test, &test_pred);
        artifacts.push(out.write_text(&format!("predictions_{family}.csv"), &csv_text)?);
    }

    let ranking: Vec<String> =
        metrics::rank_models(&test_reports)?.into_iter().map(|r| r.model).collect();
    let bundle = MetricsBundle {
        target: summary.target,
        split: SplitSpec { test_fraction: split.test_fraction, seed: split.seed },
        ranking,
        reports,
    };
    artifacts.insert(0, out.write_json("metrics.json", &bundle)?);
    Ok(artifacts)
}

/// Options for the explain stage.
pub struct ExplainOptions {
    /// Family to explain; defaults to the best-ranked evaluated model.
    pub model: Option<Family>,
    pub shap: ShapSpec,
}

/// `explain`: attribute the highest-risk predictions. Rows are ranked by
/// the model's prediction over the whole dataset (descending, ties by row
/// index) and the top `queries` rows get explained against a background
/// sampled from the training rows.
pub fn explain(
    csv: Option<&Path>,
    out: &OutDir,
    opts: &ExplainOptions,
) -> anyhow::Result<Vec<String>> {
    let d = load_dataset(csv, out)?;
    let split: SplitRecord = out.read_json("split.json", "train")?;
    let scaler: Standardizer = out.read_json("standardizer.json", "train")?;
    let summary: TrainSummary = out.read_json("train_summary.json", "train")?;
    if summary.target == TargetMode::MultiLabel {
        return Err(UsageError(
            "the explain stage attributes a single regression model; train with \
             --target severity or --target binary first"
                .into(),
        )
        .into());
    }

    let family = match opts.model {
        Some(f) => f,
        None => best_ranked_family(out).ok_or_else(|| {
            UsageError("no evaluation found; pass --model or run `pdm evaluate` first".into())
        })?,
    };
    let model: TrainedModel = out.read_json(&model_file(family), "train")?;

    let x_all = scaler.transform(&d.features);
    let x_train = scaler.transform(&d.features.select_rows(&split.train));
    let predictions = model.predict(&x_all)?;
    let mut order: Vec<usize> = (0..d.n_rows()).collect();
    order.sort_by(|&a, &b| predictions[b].total_cmp(&predictions[a]).then(a.cmp(&b)));
    order.truncate(opts.shap.queries.min(d.n_rows()));
    order.sort_unstable();

    let queries_std = x_all.select_rows(&order);
    let queries_raw = d.features.select_rows(&order);
    let background = Background::sample(&x_train, opts.shap.background, opts.shap.background_seed)?;
    let options =
        KernelOptions { budget: opts.shap.kernel_budget, seed: opts.shap.kernel_seed };
    let matrix = explain::shap_matrix(&model, &queries_std, &background, opts.shap.method, &options)
        .map_err(|e| match e {
            explain::ExplainError::NotATreeModel(f) => anyhow::Error::from(UsageError(format!(
                "`{f}` is not an additive tree ensemble, so `--method tree` does not apply; \
                 try `--method kernel` (or `--method exact` for small feature counts)"
            ))),
            other => other.into(),
        })?;

    // CSV twin of the attribution matrix, with raw-scale feature values.
    let mut rows = Vec::with_capacity(order.len() * d.n_features());
    for (qi, &row) in order.iter().enumerate() {
        for f in 0..d.n_features() {
            rows.push(vec![
                row.to_string(),
                d.feature_names[f].clone(),
                queries_raw.get(qi, f).to_string(),
                matrix.phi.get(qi, f).to_string(),
            ]);
        }
    }
    let shap_csv = csv_body(&["row", "feature", "value", "phi"], rows);

    let summary_table = explain::shap_summary(&matrix, &queries_raw, &d.feature_names)?;
    let local = {
        // The single most at-risk row is the first query in ranking order.
        let top = (0..order.len())
            .max_by(|&a, &b| {
                matrix.predictions[a]
                    .total_cmp(&matrix.predictions[b])
                    .then(order[b].cmp(&order[a]))
            })
            .expect("at least one query row");
        let v = explain::ShapVector {
            phi: matrix.phi.row(top).to_vec(),
            base_value: matrix.base_value,
            prediction: matrix.predictions[top],
        };
        #[derive(Serialize)]
        struct LocalRecord {
            row: usize,
            prediction: f64,
            base_value: f64,
            contributions: Vec<explain::LocalContribution>,
        }
        LocalRecord {
            row: order[top],
            prediction: v.prediction,
            base_value: v.base_value,
            contributions: explain::local_explanation(&v, queries_raw.row(top), &d.feature_names)?,
        }
    };

    let record = ExplainRecord {
        model: family,
        requested_method: opts.shap.method,
        background_size: opts.shap.background,
        background_seed: opts.shap.background_seed,
        kernel_budget: opts.shap.kernel_budget,
        kernel_seed: opts.shap.kernel_seed,
        query_rows: order,
        matrix,
    };

    Ok(vec![
        out.write_json("shap.json", &record)?,
        out.write_text("shap.csv", &shap_csv)?,
        out.write_json("shap_summary.json", &summary_table)?,
        out.write_json("local_top.json", &local)?,
    ])
}

/// `report`: render every figure from the persisted artifacts.
pub fn report(csv: Option<&Path>, out: &OutDir, bins: usize) -> anyhow::Result<Vec<String>> {
    let metrics_bundle: MetricsBundle = out.read_json("metrics.json", "evaluate")?;
    let best = metrics_bundle
        .ranking
        .first()
        .cloned()
        .ok_or_else(|| UsageError("evaluation ranked no models".into()))?;

    // Correlation figure comes from the corr stage; require it.
    out.read_text("corr.csv", "corr")?;
    out.read_text("corr.svg", "corr")?;

    let mut figures_list = vec![FigureRecord {
        name: "correlation_heatmap".into(),
        svg: "corr.svg".into(),
        csv: "corr.csv".into(),
    }];
    let mut artifacts = Vec::new();

    // Actual-vs-predicted scatter + residual histogram for the best model.
    let pred_file = format!("predictions_{best}.csv");
    let pred_text = out.read_text(&pred_file, "evaluate")?;
    let (mut rows, mut actual, mut predicted) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in pred_text.lines().enumerate().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            anyhow::bail!("{pred_file}:{}: expected `row,actual,predicted`", i + 1);
        }
        rows.push(cells[0].parse::<usize>().with_context(|| format!("{pred_file}:{}", i + 1))?);
        actual.push(cells[1].parse::<f64>().with_context(|| format!("{pred_file}:{}", i + 1))?);
        predicted
            .push(cells[2].parse::<f64>().with_context(|| format!("{pred_file}:{}", i + 1))?);
    }

    artifacts.push(out.write_text("scatter.csv", &figures::scatter_csv(&rows, &actual, &predicted))?);
    artifacts.push(out.write_text("scatter.svg", &figures::scatter_svg(&actual, &predicted, &best))?);
    figures_list.push(FigureRecord {
        name: "actual_vs_predicted".into(),
        svg: "scatter.svg".into(),
        csv: "scatter.csv".into(),
    });

    let residuals: Vec<f64> = actual.iter().zip(&predicted).map(|(a, p)| a - p).collect();
    let hist = figures::histogram(&residuals, bins);
    artifacts.push(out.write_text("residual_hist.csv", &figures::residual_csv(&hist))?);
    artifacts.push(out.write_text("residual_hist.svg", &figures::residual_svg(&hist, &best))?);
    figures_list.push(FigureRecord {
        name: "residual_histogram".into(),
        svg: "residual_hist.svg".into(),
        csv: "residual_hist.csv".into(),
    });

    // Beeswarm + dependence from the attribution artifacts.
    let summary_table: explain::SummaryTable = out.read_json("shap_summary.json", "explain")?;
    out.read_text("shap.csv", "explain")?;
    artifacts.push(out.write_text("shap_summary.svg", &figures::beeswarm_svg(&summary_table))?);
    figures_list.push(FigureRecord {
        name: "attribution_beeswarm".into(),
        svg: "shap_summary.svg".into(),
        csv: "shap.csv".into(),
    });

    if summary_table.features.len() >= 2 {
        let record: ExplainRecord = out.read_json("shap.json", "explain")?;
        let d = load_dataset(csv, out)?;
        let queries_raw = d.features.select_rows(&record.query_rows);
        let top = summary_table.features[0].feature_index;
        let second = summary_table.features[1].feature_index;
        let table = explain::shap_dependence(
            &record.matrix,
            &queries_raw,
            &d.feature_names,
            top,
            Some(second),
        )?;
        let slug = family_slug(&table.feature_name);
        let csv_name = format!("dependence_{slug}.csv");
        let svg_name = format!("dependence_{slug}.svg");
        artifacts.push(out.write_text(&csv_name, &figures::dependence_csv(&table))?);
        artifacts.push(out.write_text(&svg_name, &figures::dependence_svg(&table))?);
        figures_list.push(FigureRecord {
            name: "attribution_dependence".into(),
            svg: svg_name,
            csv: csv_name,
        });
    }

    let summary = ReportSummary { best_model: best, figures: figures_list };
    artifacts.push(out.write_json("report.json", &summary)?);
    Ok(artifacts)
}

// ------------------------------------------------------------ pipeline ----

/// Run the whole workflow: ingest, correlations, training, optional
/// tuning, evaluation, attribution, figures. Every stage's artifacts and
/// wall time land in the manifest; a failing stage is recorded with its
/// error and the partial artifact list is kept.
pub fn run_pipeline(config: &RunConfig, out: &OutDir) -> anyhow::Result<RunManifest> {
    if config.dataset.as_os_str().is_empty() {
        return Err(UsageError(
            "no dataset: pass --dataset or set `dataset` in the config file".into(),
        )
        .into());
    }
    if config.target == TargetMode::MultiLabel {
        return Err(UsageError(
            "`run` drives the regression workflow (severity|binary); multilabel runs \
             through `pdm train --target multilabel` and `pdm evaluate`"
                .into(),
        )
        .into());
    }

    let mut manifest = RunManifest::new(config);
    let csv = Some(config.dataset.as_path());

    let stages: Vec<(&'static str, Box<dyn FnOnce() -> anyhow::Result<Vec<String>>>)> = vec![
        ("ingest", Box::new({
            let (dataset, out) = (config.dataset.clone(), out.clone());
            move || ingest(&dataset, &out)
        })),
        ("corr", Box::new({
            let out = out.clone();
            move || corr(None, &out, None).map(|(_, a)| a)
        })),
        ("train", Box::new({
            let out = out.clone();
            let opts = TrainOptions {
                target: config.target,
                split: config.split,
                models: config.models.clone(),
                multilabel_family: None,
            };
            move || train(None, &out, &opts)
        })),
        ("tune", Box::new({
            let (out, tuning) = (out.clone(), config.tuning);
            move || match tuning {
                None => Ok(Vec::new()),
                Some(spec) => {
                    let (result, mut artifacts) = tune(None, &out, &spec)?;
                    artifacts.extend(apply_tuned_config(None, &out, &result)?);
                    Ok(artifacts)
                }
            }
        })),
        ("evaluate", Box::new({
            let out = out.clone();
            move || evaluate(None, &out, 0.5)
        })),
        ("explain", Box::new({
            let out = out.clone();
            let opts = ExplainOptions { model: None, shap: config.shap };
            move || explain(None, &out, &opts)
        })),
        ("report", Box::new({
            let out = out.clone();
            move || report(None, &out, 30)
        })),
    ];

    let mut failure: Option<anyhow::Error> = None;
    for (name, stage) in stages {
        let start = Instant::now();
        match stage() {
            Ok(artifacts) => manifest.stages.push(StageRecord {
                stage: name.to_string(),
                status: "ok".to_string(),
                error: None,
                wall_ms: start.elapsed().as_millis() as u64,
                artifacts,
            }),
            Err(err) => {
                manifest.status = "failed".to_string();
                manifest.stages.push(StageRecord {
                    stage: name.to_string(),
                    status: "failed".to_string(),
                    error: Some(format!("{err:#}")),
                    wall_ms: start.elapsed().as_millis() as u64,
                    artifacts: Vec::new(),
                });
                failure = Some(err.context(format!("stage `{name}` failed")));
                break;
            }
        }
    }

    out.write_json("config.json", config)?;
    out.write_json("manifest.json", &manifest)?;
    let _ = csv;
    match failure {
        Some(err) => Err(err),
        None => Ok(manifest),
    }
}
