//! Rayon map vs the sequential fallback on the two workloads that dominate
//! pipeline time: per-tree ensemble fitting and per-row attribution.
//!
//! Run with `cargo bench -p pdm-core`.

use criterion::{criterion_group, criterion_main, Criterion};
use pdm_core::dataset::{self, TargetMode};
use pdm_core::explain::{Background, KernelOptions, ShapMethod};
use pdm_core::matrix::Matrix;
use pdm_core::models::{self, Family, ModelConfig};
use pdm_core::{explain, parallel, synth};

struct Fixture {
    x: Matrix,
    y: Vec<f64>,
}

/// A standardized slice of the synthetic dataset with the severity target.
fn fixture(rows: usize) -> Fixture {
    let csv = synth::generate_csv(&synth::SynthConfig { rows, seed: 20 });
    let dir = std::env::temp_dir().join(format!("pdm-bench-{rows}.csv"));
    std::fs::write(&dir, csv).expect("writing fixture csv");
    let table = dataset::load_ai4i(&dir).expect("loading fixture");
    let d = dataset::encode_features(&table).expect("encoding fixture");
    let all: Vec<usize> = (0..d.n_rows()).collect();
    let scaler = dataset::Standardizer::fit(&d.features, &all).expect("standardizer");
    let y = match dataset::derive_target(&d, TargetMode::Severity) {
        dataset::Target::Vector(v) => v,
        dataset::Target::Flags(_) => unreachable!("severity is a vector target"),
    };
    Fixture { x: scaler.transform(&d.features), y }
}

/// Ensemble-style workload: many independent tree fits, one per task.
fn tree_fits(c: &mut Criterion) {
    let f = fixture(1_500);
    let tasks = 24usize;
    let fit_one = |i: usize| {
        let mut config = ModelConfig::new(Family::Cart);
        config.max_depth = Some(6);
        config.seed = parallel::derive_seed(42, i as u64);
        models::fit(&config, &f.x, &f.y).expect("tree fit")
    };

    let mut group = c.benchmark_group("tree_fits");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| parallel::map_indexed(tasks, fit_one)));
    group.bench_function("sequential", |b| {
        b.iter(|| parallel::map_indexed_seq(tasks, fit_one))
    });
    group.finish();
}

/// Attribution-style workload: one tree-path walk per query row.
fn attribution_rows(c: &mut Criterion) {
    let f = fixture(1_500);
    let mut config = ModelConfig::new(Family::GradientBoosting);
    config.n_estimators = 50;
    let model = models::fit(&config, &f.x, &f.y).expect("boosting fit");
    let bg = Background::sample(&f.x, 100, 7).expect("background");
    let options = KernelOptions::default();
    let queries = 128usize;
    let explain_one = |i: usize| {
        let row = Matrix::from_rows(vec![f.x.row(i).to_vec()]);
        explain::shap_matrix(&model, &row, &bg, ShapMethod::Tree, &options)
            .expect("attribution")
    };

    let mut group = c.benchmark_group("attribution_rows");
    group.sample_size(20);
    group.bench_function("parallel", |b| b.iter(|| parallel::map_indexed(queries, explain_one)));
    group.bench_function("sequential", |b| {
        b.iter(|| parallel::map_indexed_seq(queries, explain_one))
    });
    group.finish();
}

criterion_group!(benches, tree_fits, attribution_rows);
criterion_main!(benches);
