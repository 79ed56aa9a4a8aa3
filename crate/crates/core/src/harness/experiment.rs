use std::path::PathBuf;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::pipeline::{tune_hyperparams, Pipeline};
use super::sweep::{compute_efficiencies, run_sweep, CellResult, ExperimentRecord, Split, SweepContext, SweepOutput};
use super::tables::*;
use crate::datasets::{split, Dataset};
use crate::error::{Error, Result};
use crate::policies::{resolve_threshold, select_fairness_budget, BudgetObservation, PolicyKind, FOUR_FIFTHS};

/// What a finished run produced, besides the files in `output_dir`.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub summary: Vec<SummaryRecord>,
    pub efficiencies: Vec<EfficiencyRecord>,
    pub budgets: Vec<BudgetRecord>,
    pub reachability: Vec<ReachabilityRecord>,
    /// Pipelines excluded for exceeding the failed-cell limit.
    pub failed_pipelines: Vec<FailureRecord>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        self.failed_pipelines.is_empty()
    }
}

struct Task {
    dataset: usize,
    repetition: usize,
    pipeline: usize,
}

struct TaskOutput {
    context: SweepContext,
    sweep: std::result::Result<SweepOutput, String>,
}

/// Everything one (dataset, pipeline) pair produced across repetitions.
struct Group<'a> {
    dataset: &'a str,
    pipeline: &'a Pipeline,
    reps: Vec<&'a TaskOutput>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl Group<'_> {
    fn lambda_grid(&self) -> Vec<f64> {
        self.reps
            .iter()
            .find_map(|r| r.sweep.as_ref().ok().map(|s| s.lambda_grid.clone()))
            .unwrap_or_default()
    }

    /// Successful cells at λ index `i`, with their repetition index.
    fn cells_at(&self, i: usize) -> Vec<(usize, &CellResult)> {
        self.reps
            .iter()
            .filter_map(|r| {
                let sweep = r.sweep.as_ref().ok()?;
                let cell = sweep.cells.get(i)?.as_ref().ok()?;
                Some((r.context.repetition, cell))
            })
            .collect()
    }

    fn failures(&self, n_lambda: usize) -> Vec<FailureRecord> {
        let mut out = Vec::new();
        for r in &self.reps {
            match &r.sweep {
                Err(e) => out.extend((0..n_lambda.max(1)).map(|_| FailureRecord {
                    dataset: self.dataset.into(),
                    pipeline: self.pipeline.name.clone(),
                    repetition: Some(r.context.repetition),
                    lambda: None,
                    fatal: false,
                    error: e.clone(),
                })),
                Ok(sweep) => out.extend(sweep.failures().map(|(lambda, e)| FailureRecord {
                    dataset: self.dataset.into(),
                    pipeline: self.pipeline.name.clone(),
                    repetition: Some(r.context.repetition),
                    lambda: Some(lambda),
                    fatal: false,
                    error: e.into(),
                })),
            }
        }
        out
    }
}

#[derive(Default)]
struct Tables {
    records: Vec<ExperimentRecord>,
    surfaces: Vec<SurfaceRecord>,
    efficiencies: Vec<EfficiencyRecord>,
    resolutions: Vec<ResolutionRecord>,
    policy_metrics: Vec<PolicyMetricRecord>,
    budgets: Vec<BudgetRecord>,
    summary: Vec<SummaryRecord>,
    reachability: Vec<ReachabilityRecord>,
    failures: Vec<FailureRecord>,
    timings: Vec<TimingRecord>,
}

fn tune_and_sweep(config: &ExperimentConfig, pipeline: &Pipeline, train: &Dataset, test: &Dataset, context: &SweepContext) -> std::result::Result<SweepOutput, String> {
    let tuned = tune_hyperparams(pipeline, train, config.tuning_folds, context.tuning_seed()).map_err(|e| {
        log::warn!("{} / {} rep {}: {e}", context.dataset, pipeline.name, context.repetition);
        e.to_string()
    })?;
    log::debug!(
        "{} / {} rep {}: tuned {}",
        context.dataset,
        pipeline.name,
        context.repetition,
        tuned.label()
    );
    Ok(run_sweep(
        pipeline,
        train,
        test,
        &tuned,
        &config.lambda_grid(),
        &config.tau_grid(),
        context,
    ))
}

/// Runs every (dataset, repetition, pipeline) sweep and writes the result
/// tables to the configured output directory. `jobs` bounds the worker
/// threads; results do not depend on it.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<RunOutcome> {
    config.validate()?;
    let mut loaded = Vec::new();
    for i in 0..config.datasets.len() {
        let (dataset, plan) = config.load_dataset(i)?;
        log::info!(
            "dataset {}: {} rows, {} features, {} repetitions",
            config.datasets[i].name,
            dataset.n(),
            dataset.d(),
            plan.repetitions
        );
        loaded.push(split(&dataset, &plan)?);
    }

    let tasks: Vec<Task> = loaded
        .iter()
        .enumerate()
        .flat_map(|(d, reps)| {
            (0..reps.len()).flat_map(move |r| {
                (0..config.pipelines.len()).map(move |p| Task {
                    dataset: d,
                    repetition: r,
                    pipeline: p,
                })
            })
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outputs: Vec<TaskOutput> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let context = SweepContext {
                    dataset: config.datasets[t.dataset].name.clone(),
                    dataset_index: t.dataset,
                    repetition: t.repetition,
                    master_seed: config.seed,
                };
                let (train, test) = &loaded[t.dataset][t.repetition];
                let sweep = tune_and_sweep(config, &config.pipelines[t.pipeline], train, test, &context);
                TaskOutput { context, sweep }
            })
            .collect()
    });

    let mut tables = Tables::default();
    let mut failed = Vec::new();
    for (d, dataset) in config.datasets.iter().enumerate() {
        let mut aware_groups = Vec::new();
        for (p, pipeline) in config.pipelines.iter().enumerate() {
            let reps = tasks
                .iter()
                .zip(&outputs)
                .filter(|(t, _)| t.dataset == d && t.pipeline == p)
                .map(|(_, o)| o)
                .collect();
            let group = Group {
                dataset: &dataset.name,
                pipeline,
                reps,
            };
            let n_lambda = if pipeline.is_fairness_aware() {
                config.lambda_points
            } else {
                1
            };
            let failures = group.failures(n_lambda);
            let total = group.reps.len() * n_lambda;
            let fraction = failures.len() as f64 / total.max(1) as f64;
            tables.failures.extend(failures);
            if fraction > config.max_failed_fraction || group.lambda_grid().is_empty() {
                let record = FailureRecord {
                    dataset: dataset.name.clone(),
                    pipeline: pipeline.name.clone(),
                    repetition: None,
                    lambda: None,
                    fatal: true,
                    error: format!("{:.0}% of cells failed", 100.0 * fraction),
                };
                log::error!("{} / {}: {}", record.dataset, record.pipeline, record.error);
                tables.failures.push(record.clone());
                failed.push(record);
                continue;
            }
            collect_group(config, &group, &mut tables)?;
            if pipeline.is_fairness_aware() {
                aware_groups.push(group);
            }
        }
        tables.reachability.push(reachability(config, &dataset.name, &aware_groups));
    }

    let out = config.output_path();
    std::fs::create_dir_all(&out)?;
    write_table(&out.join(RECORDS), &tables.records)?;
    write_table(&out.join(SURFACES), &tables.surfaces)?;
    write_table(&out.join(EFFICIENCIES), &tables.efficiencies)?;
    write_table(&out.join(RESOLUTIONS), &tables.resolutions)?;
    write_table(&out.join(POLICY_METRICS), &tables.policy_metrics)?;
    write_table(&out.join(BUDGETS), &tables.budgets)?;
    write_table(&out.join(SUMMARY), &tables.summary)?;
    write_table(&out.join(REACHABILITY), &tables.reachability)?;
    write_table(&out.join(FAILURES), &tables.failures)?;
    if config.record_timings {
        write_table(&out.join(TIMINGS), &tables.timings)?;
    }
    std::fs::write(out.join(RUN_CONFIG), config.to_toml()?)?;

    for r in tables.reachability.iter().filter(|r| !r.reachable) {
        log::warn!("{}: no fairness-aware pipeline reached DI > {FOUR_FIFTHS} under argmax", r.dataset);
    }
    Ok(RunOutcome {
        output_dir: out,
        summary: tables.summary,
        efficiencies: tables.efficiencies,
        budgets: tables.budgets,
        reachability: tables.reachability,
        failed_pipelines: failed,
    })
}

fn collect_group(config: &ExperimentConfig, group: &Group, tables: &mut Tables) -> Result<()> {
    let tau_grid = config.tau_grid();
    let lambdas = group.lambda_grid();
    let name = &group.pipeline.name;
    let mut thetas: Vec<(f64, f64)> = Vec::new();

    for rep in &group.reps {
        let Ok(sweep) = &rep.sweep else { continue };
        tables.records.extend(sweep.records(&rep.context));
        if config.record_timings {
            tables.timings.extend(sweep.successes().map(|c| TimingRecord {
                dataset: group.dataset.into(),
                pipeline: name.clone(),
                repetition: rep.context.repetition,
                lambda: c.lambda,
                fit_seconds: c.fit_seconds,
            }));
        }
        let mode = sweep.lambda_mode();
        if !sweep.single_point && mode != crate::faireff::LambdaMode::Continuous {
            log::warn!(
                "{} / {name} rep {}: λ endpoint missing, integrating as {}",
                group.dataset,
                rep.context.repetition,
                mode.as_str()
            );
        }
        for split in Split::BOTH {
            let surfaces = match sweep.surfaces(split) {
                Ok(s) => s,
                Err(e) => {
                    log::warn!("{} / {name} rep {}: {e}", group.dataset, rep.context.repetition);
                    continue;
                }
            };
            let base = SurfaceRecord {
                dataset: group.dataset.into(),
                pipeline: name.clone(),
                repetition: rep.context.repetition,
                split,
                lambda_mode: mode.as_str().into(),
                ..SurfaceRecord::default()
            };
            for (metric, surface) in surfaces.named() {
                for (i, &lambda) in surface.lambda_grid().iter().enumerate() {
                    for (&tau, &value) in surface.tau_grid().iter().zip(surface.row(i)) {
                        tables.surfaces.push(SurfaceRecord {
                            metric: metric.into(),
                            lambda,
                            tau: Some(tau),
                            value,
                            ..base.clone()
                        });
                    }
                }
            }
            for (&lambda, &value) in surfaces.auc.lambda_grid().iter().zip(surfaces.auc.values()) {
                tables.surfaces.push(SurfaceRecord {
                    metric: "auc".into(),
                    lambda,
                    tau: None,
                    value,
                    ..base.clone()
                });
            }
            if split == Split::Test {
                let (di, eo) = compute_efficiencies(&surfaces)?;
                thetas.push((di.theta, eo.theta));
                tables.efficiencies.push(EfficiencyRecord {
                    dataset: group.dataset.into(),
                    pipeline: name.clone(),
                    repetition: rep.context.repetition,
                    lambda_mode: mode.as_str().into(),
                    k_auc: di.k_p,
                    k_di: di.k_f,
                    k_eo: eo.k_f,
                    theta_di: di.theta,
                    theta_eo: eo.theta,
                });
            }
        }
    }

    for &kind in &config.policies {
        let policy = config.policy(kind);
        let mut metrics_by_lambda: Vec<Vec<PolicyMetricRecord>> = Vec::new();
        for (i, &lambda) in lambdas.iter().enumerate() {
            let cells = group.cells_at(i);
            let mut at_lambda = Vec::new();
            if !cells.is_empty() {
                let curves: Vec<Vec<f64>> = cells
                    .iter()
                    .map(|(_, c)| c.split(Split::Train).thresholds.iter().map(|t| t.acceptance).collect())
                    .collect();
                let resolution = resolve_threshold(&policy, &tau_grid, &curves)?;
                tables.resolutions.push(ResolutionRecord {
                    dataset: group.dataset.into(),
                    pipeline: name.clone(),
                    policy: kind,
                    lambda,
                    tau: resolution.tau,
                    dropped: resolution.is_dropped(),
                    reason: resolution.dropped.clone().unwrap_or_default(),
                    mean_acceptance: resolution.mean_acceptance,
                });
                if let Some(tau) = resolution.tau {
                    let t = tau_grid
                        .iter()
                        .position(|&g| g == tau)
                        .expect("policy thresholds lie on the grid");
                    for (repetition, cell) in &cells {
                        for split in Split::BOTH {
                            let eval = cell.split(split);
                            let row = &eval.thresholds[t];
                            at_lambda.push(PolicyMetricRecord {
                                dataset: group.dataset.into(),
                                pipeline: name.clone(),
                                policy: kind,
                                lambda,
                                tau,
                                repetition: *repetition,
                                split,
                                accuracy: row.metrics.accuracy,
                                precision: row.metrics.precision,
                                di: row.metrics.di,
                                eo: row.metrics.eo,
                                spd: row.metrics.spd,
                                acceptance: row.acceptance,
                                auc: eval.auc,
                            });
                        }
                    }
                }
            }
            tables.policy_metrics.extend(at_lambda.iter().cloned());
            metrics_by_lambda.push(at_lambda);
        }
        summarize_policy(group, kind, &lambdas, &metrics_by_lambda, &thetas, tables);
    }
    Ok(())
}

fn test_mean(rows: &[PolicyMetricRecord], f: impl Fn(&PolicyMetricRecord) -> f64) -> Option<f64> {
    mean(rows.iter().filter(|r| r.split == Split::Test).map(f))
}

fn summarize_policy(
    group: &Group,
    kind: PolicyKind,
    lambdas: &[f64],
    metrics_by_lambda: &[Vec<PolicyMetricRecord>],
    thetas: &[(f64, f64)],
    tables: &mut Tables,
) {
    let aware = group.pipeline.is_fairness_aware();
    let base = SummaryRecord {
        dataset: group.dataset.into(),
        pipeline: group.pipeline.name.clone(),
        fairness_aware: aware,
        policy: kind,
        ..SummaryRecord::default()
    };
    if kind == PolicyKind::PolicyFree {
        tables.summary.push(SummaryRecord {
            status: "ok".into(),
            theta_di: mean(thetas.iter().map(|t| t.0)),
            theta_eo: mean(thetas.iter().map(|t| t.1)),
            ..base
        });
        return;
    }
    let chosen = if aware {
        let observations: Vec<BudgetObservation> = metrics_by_lambda
            .iter()
            .flatten()
            .filter(|r| r.split == Split::Train)
            .map(|r| BudgetObservation {
                lambda: r.lambda,
                repetition: r.repetition,
                train_di: r.di,
                train_accuracy: r.accuracy,
            })
            .collect();
        let lambda = select_fairness_budget(&observations);
        let index = lambda.and_then(|l| lambdas.iter().position(|&g| g == l));
        let off = lambdas.iter().position(|&g| g == 0.0).map(|i| &metrics_by_lambda[i][..]).unwrap_or(&[]);
        let on = index.map(|i| &metrics_by_lambda[i][..]).unwrap_or(&[]);
        tables.budgets.push(BudgetRecord {
            dataset: group.dataset.into(),
            pipeline: group.pipeline.name.clone(),
            policy: kind,
            lambda,
            test_accuracy: test_mean(on, |r| r.accuracy),
            test_di: test_mean(on, |r| r.di),
            test_eo: test_mean(on, |r| r.eo),
            test_accuracy_off: test_mean(off, |r| r.accuracy),
            test_di_off: test_mean(off, |r| r.di),
            test_eo_off: test_mean(off, |r| r.eo),
        });
        index
    } else {
        Some(0)
    };
    let record = match chosen {
        None => SummaryRecord {
            status: "no-budget".into(),
            ..base
        },
        Some(i) if metrics_by_lambda.get(i).is_none_or(|m| m.is_empty()) => SummaryRecord {
            status: "dropped".into(),
            lambda: Some(lambdas[i]),
            ..base
        },
        Some(i) => {
            let rows = &metrics_by_lambda[i];
            SummaryRecord {
                status: "ok".into(),
                lambda: Some(lambdas[i]),
                tau: Some(rows[0].tau),
                accuracy: test_mean(rows, |r| r.accuracy),
                precision: test_mean(rows, |r| r.precision),
                di: test_mean(rows, |r| r.di),
                eo: test_mean(rows, |r| r.eo),
                ..base
            }
        }
    };
    tables.summary.push(record);
}

fn reachability(config: &ExperimentConfig, dataset: &str, groups: &[Group]) -> ReachabilityRecord {
    let tau_grid = config.tau_grid();
    let mut best = ReachabilityRecord {
        dataset: dataset.into(),
        ..ReachabilityRecord::default()
    };
    let Some(t) = tau_grid.iter().position(|&g| g == config.policy.argmax_threshold) else {
        return best;
    };
    for group in groups {
        for (i, &lambda) in group.lambda_grid().iter().enumerate() {
            let di = mean(
                group
                    .cells_at(i)
                    .iter()
                    .map(|(_, c)| c.split(Split::Test).thresholds[t].metrics.di),
            );
            if let Some(di) = di {
                if best.di.is_none_or(|b| di > b) {
                    best.pipeline = group.pipeline.name.clone();
                    best.lambda = Some(lambda);
                    best.di = Some(di);
                }
            }
        }
    }
    best.reachable = best.di.is_some_and(|d| d > FOUR_FIFTHS);
    best
}
