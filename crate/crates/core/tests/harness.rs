use std::path::Path;

use fairbench::faireff::{AucCurve, LambdaMode, MetricSurface};
use fairbench::harness::tables::{self, EfficiencyRecord, SummaryRecord};
use fairbench::harness::{
    build_report, compute_efficiencies, emit_report, run_experiment, run_sweep, DatasetConfig, ExperimentConfig,
    ExperimentRecord, Intervention, Pipeline, ReportFormat, Split, SplitSurfaces, SweepContext,
};
use fairbench::learners::{LearnerConfig, LearnerKind, Regularization};
use fairbench::policies::PolicyKind;
use fairbench::synthgen::Preset;

fn small_config(out: &Path, pipelines: Vec<Pipeline>) -> ExperimentConfig {
    ExperimentConfig {
        seed: 17,
        output_dir: out.to_path_buf(),
        lambda_points: 5,
        tau_points: 21,
        datasets: vec![DatasetConfig {
            repetitions: Some(2),
            ..DatasetConfig::preset("sp", Preset::SimpleProxy, 800)
        }],
        pipelines,
        ..ExperimentConfig::default()
    }
}

fn lr_grid() -> Vec<LearnerConfig> {
    vec![
        LearnerConfig::logistic(Regularization::None),
        LearnerConfig::logistic(Regularization::L2 { strength: 0.1 }),
    ]
}

fn suite() -> Vec<Pipeline> {
    vec![
        Pipeline::new("lr", LearnerKind::Logistic).with_grid(lr_grid()),
        Pipeline::new("repair-lr", LearnerKind::Logistic)
            .with_intervention(Intervention::Repair { grid_size: 51 })
            .with_grid(lr_grid()),
        Pipeline::new("reweigh-nb", LearnerKind::GaussianNb).with_intervention(Intervention::Reweigh),
        Pipeline::new("fair-lr", LearnerKind::FairLogistic).with_grid(lr_grid()),
        Pipeline::new("fs-trees", LearnerKind::TreeEnsemble)
            .with_intervention(Intervention::FeatureSelect {
                k: 8,
                weights: Default::default(),
            })
            .with_grid(vec![LearnerConfig::trees(10, 3)]),
    ]
}

fn read_dir_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_config(&dir.path().join("a"), suite());
    let b = small_config(&dir.path().join("b"), suite());
    assert!(run_experiment(&a, Some(1)).unwrap().succeeded());
    assert!(run_experiment(&b, Some(4)).unwrap().succeeded());
    let (fa, fb) = (read_dir_csvs(&a.output_path()), read_dir_csvs(&b.output_path()));
    assert_eq!(fa.len(), 9);
    assert_eq!(fa, fb);
}

#[test]
fn result_tables_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), suite());
    let outcome = run_experiment(&config, None).unwrap();
    assert!(outcome.succeeded());
    let out = &outcome.output_dir;

    let records: Vec<ExperimentRecord> = tables::read_table(&out.join(tables::RECORDS)).unwrap();
    // Benchmarks: 1 λ; aware pipelines: 5 λ. Each: 2 reps × 21 τ × 2 splits.
    let per_lambda = 2 * 21 * 2;
    assert_eq!(records.len(), per_lambda * (1 + 4 * 5));
    assert!(records.iter().all(|r| (0.0..=1.0).contains(&r.di)));
    assert!(records.iter().filter(|r| r.pipeline == "lr").all(|r| r.lambda == 0.0));

    // Repair at λ = 0 is the identity, so it reproduces the benchmark.
    let strip = |r: &ExperimentRecord| ExperimentRecord {
        pipeline: String::new(),
        ..r.clone()
    };
    let bench: Vec<_> = records.iter().filter(|r| r.pipeline == "lr").map(strip).collect();
    let repaired: Vec<_> = records
        .iter()
        .filter(|r| r.pipeline == "repair-lr" && r.lambda == 0.0)
        .map(strip)
        .collect();
    assert_eq!(bench, repaired);

    let eff: Vec<EfficiencyRecord> = tables::read_table(&out.join(tables::EFFICIENCIES)).unwrap();
    assert_eq!(eff.len(), 5 * 2);
    assert_eq!(eff.iter().find(|e| e.pipeline == "lr").unwrap().lambda_mode, "single-point");
    assert_eq!(eff.iter().find(|e| e.pipeline == "fair-lr").unwrap().lambda_mode, "continuous");
    assert_eq!(eff, outcome.efficiencies);

    // Summary averages equal the mean of the per-repetition policy metrics.
    let summary: Vec<SummaryRecord> = tables::read_table(&out.join(tables::SUMMARY)).unwrap();
    let lr_argmax = summary
        .iter()
        .find(|s| s.pipeline == "lr" && s.policy == PolicyKind::Argmax)
        .unwrap();
    let at_half: Vec<&ExperimentRecord> = records
        .iter()
        .filter(|r| r.pipeline == "lr" && r.split == Split::Test && r.tau == 0.5)
        .collect();
    let mean_acc = at_half.iter().map(|r| r.accuracy).sum::<f64>() / at_half.len() as f64;
    assert_eq!(lr_argmax.accuracy, Some(mean_acc));
    let free = summary
        .iter()
        .find(|s| s.pipeline == "fair-lr" && s.policy == PolicyKind::PolicyFree)
        .unwrap();
    let thetas: Vec<f64> = eff.iter().filter(|e| e.pipeline == "fair-lr").map(|e| e.theta_di).collect();
    assert_eq!(free.theta_di, Some(thetas.iter().sum::<f64>() / thetas.len() as f64));

    // Report tables.
    let report = build_report(out).unwrap();
    assert_eq!(report.scatter.len(), 5 * 2);
    assert_eq!(report.benchmark.iter().filter(|b| b.policy == "argmax").count(), 1);
    assert_eq!(report.theta.len(), eff.len());
    for (t, e) in report.theta.iter().zip(&eff) {
        assert_eq!((t.theta_di, t.theta_eo), (e.theta_di, e.theta_eo));
    }
    let files = emit_report(out, ReportFormat::Csv).unwrap();
    assert_eq!(files.len(), 5);
    let svgs = emit_report(out, ReportFormat::Svg).unwrap();
    assert!(svgs.iter().all(|p| std::fs::read_to_string(p).unwrap().starts_with("<svg")));
}

#[test]
fn one_benchmark_gives_one_theta_pair_per_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), vec![Pipeline::new("nb", LearnerKind::GaussianNb)]);
    let outcome = run_experiment(&config, Some(2)).unwrap();
    assert_eq!(outcome.efficiencies.len(), 2);
    assert_eq!(
        outcome.efficiencies.iter().map(|e| e.repetition).collect::<Vec<_>>(),
        vec![0, 1]
    );
}

#[test]
fn empty_pipeline_set_writes_header_only_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), Vec::new());
    let outcome = run_experiment(&config, None).unwrap();
    assert!(outcome.succeeded());
    emit_report(&outcome.output_dir, ReportFormat::Csv).unwrap();
    for name in [tables::RECORDS, tables::SUMMARY, "report_scatter.csv", "report_theta.csv"] {
        let text = std::fs::read_to_string(outcome.output_dir.join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
    }
}

#[test]
fn failing_pipeline_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    // Selecting more columns than exist fails every cell.
    let broken = Pipeline::new("fs-too-many", LearnerKind::GaussianNb).with_intervention(Intervention::FeatureSelect {
        k: 500,
        weights: Default::default(),
    });
    let config = small_config(dir.path(), vec![Pipeline::new("nb", LearnerKind::GaussianNb), broken]);
    let outcome = run_experiment(&config, None).unwrap();
    assert!(!outcome.succeeded());
    assert_eq!(outcome.failed_pipelines.len(), 1);
    assert_eq!(outcome.failed_pipelines[0].pipeline, "fs-too-many");
    assert!(outcome.summary.iter().any(|s| s.pipeline == "nb"));
}

#[test]
fn sweep_on_a_single_repetition() {
    let config = small_config(Path::new("unused"), Vec::new());
    let (data, plan) = config.load_dataset(0).unwrap();
    let (train, test) = fairbench::datasets::split(&data, &plan).unwrap().remove(0);
    let context = SweepContext {
        dataset: "sp".into(),
        dataset_index: 0,
        repetition: 0,
        master_seed: 1,
    };
    let pipeline = Pipeline::new("fair-lr", LearnerKind::FairLogistic);
    let tuned = LearnerConfig {
        kind: LearnerKind::FairLogistic,
        ..LearnerConfig::logistic(Regularization::L2 { strength: 0.1 })
    };
    let lambdas = config.lambda_grid();
    let taus = config.tau_grid();
    let sweep = run_sweep(&pipeline, &train, &test, &tuned, &lambdas, &taus, &context);
    assert_eq!(sweep.cells.len(), 5);
    assert!(sweep.cells.iter().all(|c| c.is_ok()));
    let test_surfaces = sweep.surfaces(Split::Test).unwrap();
    assert_eq!(test_surfaces.di.mode(), LambdaMode::Continuous);
    let again = run_sweep(&pipeline, &train, &test, &tuned, &lambdas, &taus, &context);
    assert_eq!(again.records(&context), sweep.records(&context));
}

fn fixture_surface(values: [f64; 9]) -> MetricSurface<f64> {
    MetricSurface::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0], values.to_vec(), LambdaMode::Continuous).unwrap()
}

#[test]
fn efficiencies_match_hand_computation() {
    // Rows over τ; trapezoid per row: (v0 + 2 v1 + v2) / 4, then the same over λ.
    let di = [1.0, 0.8, 0.6, 0.9, 0.7, 0.5, 0.8, 0.6, 0.2];
    let eo = [1.0; 9];
    let rows_di = [(1.0 + 1.6 + 0.6) / 4.0, (0.9 + 1.4 + 0.5) / 4.0, (0.8 + 1.2 + 0.2) / 4.0];
    let k_di = (rows_di[0] + 2.0 * rows_di[1] + rows_di[2]) / 4.0;
    let aucs = [0.9, 0.8, 0.7];
    let k_auc = (0.8 + 2.0 * 0.6 + 0.4) / 4.0;
    let surfaces = SplitSurfaces {
        accuracy: fixture_surface(eo),
        precision: fixture_surface(eo),
        di: fixture_surface(di),
        eo: fixture_surface(eo),
        auc: AucCurve::new(vec![0.0, 0.5, 1.0], aucs.to_vec(), LambdaMode::Continuous).unwrap(),
    };
    let (t_di, t_eo) = compute_efficiencies(&surfaces).unwrap();
    assert!((t_di.k_f - k_di).abs() < 1e-12);
    assert!((t_di.k_p - k_auc).abs() < 1e-12);
    assert!((t_di.theta - 2.0 * k_auc * k_di / (k_auc + k_di)).abs() < 1e-12);
    assert!((t_eo.theta - 2.0 * k_auc / (k_auc + 1.0)).abs() < 1e-12);

    let perfect = SplitSurfaces {
        auc: AucCurve::new(vec![0.0, 0.5, 1.0], vec![1.0; 3], LambdaMode::Continuous).unwrap(),
        ..surfaces.clone()
    };
    let perfect = SplitSurfaces {
        di: fixture_surface([1.0; 9]),
        ..perfect
    };
    assert_eq!(compute_efficiencies(&perfect).unwrap().0.theta, 1.0);
    let chance = SplitSurfaces {
        auc: AucCurve::new(vec![0.0, 0.5, 1.0], vec![0.5; 3], LambdaMode::Continuous).unwrap(),
        ..surfaces
    };
    assert_eq!(compute_efficiencies(&chance).unwrap().0.theta, 0.0);
}

#[test]
fn on_off_repair_lifts_di_under_argmax() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(
        dir.path(),
        vec![Pipeline::new("repair-lr", LearnerKind::Logistic)
            .with_intervention(Intervention::Repair { grid_size: 101 })
            .with_grid(lr_grid())],
    );
    config.datasets[0].n = Some(4000);
    config.datasets[0].repetitions = Some(4);
    config.policies = vec![PolicyKind::Argmax];
    let outcome = run_experiment(&config, None).unwrap();
    let report = build_report(&outcome.output_dir).unwrap();
    let uplift = &report.uplift[0];
    assert!(uplift.di_uplift > 0.0, "{uplift:?}");
}
