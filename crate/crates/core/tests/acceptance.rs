//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use fairbench::datasets::{target_spd, weighted_target_spd, Dataset};
use fairbench::faireff::{fair_efficiency, k_auc, k_integral, uniform_grid, AucCurve, LambdaMode, MetricSurface};
use fairbench::harness::{run_experiment, DatasetConfig, ExperimentConfig, Intervention, Pipeline};
use fairbench::interventions::{apply_repair, fair_feature_select, fit_repairer, reweigh, RankWeights};
use fairbench::learners::{
    fairness_multiplier, fit_tree_ensemble, LearnerConfig, LearnerKind, LogisticObjective, Regularization,
};
use fairbench::metrics::{auc, threshold_metrics};
use fairbench::policies::{
    resolve_threshold, select_fairness_budget, BudgetObservation, Policy, PolicyKind, DROP_REASON,
};
use fairbench::seed::rng;
use fairbench::synthgen::{generate, Preset};
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Check = std::result::Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(ok: bool, message: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message.into())
    }
}

fn within_budget(elapsed: Duration, limit: Duration) -> std::result::Result<(), String> {
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn metric_oracle() -> Check {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(8..=50);
        let mut y: Vec<u8> = (0..n).map(|_| u8::from(r.random::<bool>())).collect();
        let mut z: Vec<u8> = (0..n).map(|_| u8::from(r.random::<bool>())).collect();
        // Both groups need a positive label and the labels need a negative.
        (y[0], z[0], y[1], z[1], y[2]) = (1, 0, 1, 1, 0);
        let scores: Vec<f64> = (0..n).map(|_| (r.random_range(0..20) as f64) / 19.0).collect();
        let tau = (r.random_range(0..10) as f64) / 9.0;
        let m = threshold_metrics(&y, &z, &scores, tau).map_err(|e| e.to_string())?;

        let pred: Vec<bool> = scores.iter().map(|&s| s > tau).collect();
        let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as f64;
        let rate = |g: u8| count(&|i| z[i] == g && pred[i]) / count(&|i| z[i] == g);
        let tpr = |g: u8| count(&|i| z[i] == g && pred[i] && y[i] == 1) / count(&|i| z[i] == g && y[i] == 1);
        let (r0, r1) = (rate(0), rate(1));
        let di = if r0 == 0.0 && r1 == 0.0 {
            1.0
        } else if r0 == 0.0 || r1 == 0.0 {
            0.0
        } else {
            (r0 / r1).min(r1 / r0)
        };
        let accuracy = count(&|i| pred[i] == (y[i] == 1)) / n as f64;
        let predicted = count(&|i| pred[i]);
        let precision = if predicted == 0.0 {
            1.0
        } else {
            count(&|i| pred[i] && y[i] == 1) / predicted
        };
        let mut pairs = 0.0;
        let mut wins = 0.0;
        for i in 0..n {
            for j in 0..n {
                if y[i] == 1 && y[j] == 0 {
                    pairs += 1.0;
                    wins += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        let a = auc(&scores, &y).map_err(|e| e.to_string())?;
        for (got, want) in [
            (m.di, di),
            (m.eo, 1.0 - (tpr(0) - tpr(1)).abs()),
            (m.spd, (r0 - r1).abs()),
            (m.accuracy, accuracy),
            (m.precision, precision),
            (a, wins / pairs),
        ] {
            worst = worst.max((got - want).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("200 instances, max deviation {worst:e}"))
}

fn quadrature() -> Check {
    let start = Instant::now();
    let grid: Vec<f64> = uniform_grid(101);
    let squared: MetricSurface<f64> = MetricSurface::from_fn(grid.clone(), grid.clone(), LambdaMode::Continuous, |_, t| t * t)
        .map_err(|e| e.to_string())?;
    let err: f64 = (k_integral(&squared) - 1.0 / 3.0).abs();
    ensure(err <= 2e-5, format!("tau^2 error {err:e}"))?;
    let (a, b, c, d) = (0.1, 0.2, 0.3, 0.25);
    let bilinear: MetricSurface<f64> = MetricSurface::from_fn(uniform_grid(7), uniform_grid(11), LambdaMode::Continuous, |l, t| {
        a + b * l + c * t + d * l * t
    })
    .map_err(|e| e.to_string())?;
    let exact = a + b / 2.0 + c / 2.0 + d / 4.0;
    let bilinear_err: f64 = (k_integral(&bilinear) - exact).abs();
    ensure(bilinear_err <= 1e-12, format!("bilinear error {bilinear_err:e}"))?;
    let lambdas: Vec<f64> = uniform_grid(21);
    let curve = AucCurve::new(lambdas.clone(), lambdas.iter().map(|l| 0.5 + 0.5 * l).collect(), LambdaMode::Continuous)
        .map_err(|e| e.to_string())?;
    let k = k_auc(&curve);
    ensure(k == 0.5, format!("k_auc = {k:e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("tau^2 error {err:.2e}, bilinear error {bilinear_err:.1e}, k_auc = {k}"))
}

fn theta_endpoints() -> Check {
    let cases = [(0.0, 0.7, 0.0), (0.6, 0.0, 0.0), (0.0, 0.0, 0.0), (1.0, 1.0, 1.0)];
    for (k_p, k_f, want) in cases {
        let theta = fair_efficiency(k_p, k_f).map_err(|e| e.to_string())?.theta;
        ensure(theta == want, format!("theta({k_p}, {k_f}) = {theta}"))?;
    }
    // The same through surfaces: a maximally unfair surface.
    let grid: Vec<f64> = uniform_grid(11);
    let unfair = MetricSurface::from_fn(grid.clone(), grid.clone(), LambdaMode::Continuous, |_, _| 0.0)
        .map_err(|e| e.to_string())?;
    let predictive = AucCurve::new(grid.clone(), vec![0.9; 11], LambdaMode::Continuous).map_err(|e| e.to_string())?;
    let theta = fair_efficiency(k_auc(&predictive), k_integral(&unfair))
        .map_err(|e| e.to_string())?
        .theta;
    ensure(theta == 0.0, format!("surface theta {theta}"))?;
    Ok("K_f=0 or K_p=0 gives 0; K_p=K_f=1 gives 1".into())
}

fn calibration() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    for preset in [Preset::SimpleDirect, Preset::SimpleProxy, Preset::InteractionsDirect] {
        let (prevalence, spd) = preset.targets();
        let (mut p_sum, mut s_sum) = (0.0, 0.0);
        for seed in 0..10 {
            let data = generate(&preset.spec(100_000, seed)).map_err(|e| e.to_string())?;
            p_sum += data.label_mean();
            s_sum += target_spd(&data).map_err(|e| e.to_string())?;
        }
        let (p, s) = (p_sum / 10.0, s_sum / 10.0);
        ensure(
            (p - prevalence).abs() <= 0.02 && (s - spd).abs() <= 0.03,
            format!("{}: prevalence {p:.4} (target {prevalence}), SPD {s:.4} (target {spd})", preset.name()),
        )?;
        lines.push(format!("{} ({p:.3}, {s:.3})", preset.name()));
    }
    within_budget(start.elapsed(), Duration::from_secs(120))?;
    Ok(lines.join(", "))
}

fn reweighing() -> Check {
    let mut r = rng(5);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = r.random_range(8..300);
        let mut z: Vec<u8> = (0..n).map(|_| u8::from(r.random::<f64>() < 0.4)).collect();
        let mut y: Vec<u8> = (0..n)
            .map(|i| u8::from(r.random::<f64>() < 0.2 + 0.5 * f64::from(z[i])))
            .collect();
        for (i, (zc, yc)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            z[i] = zc;
            y[i] = yc;
        }
        let data = Dataset::new(Array2::zeros((n, 1)), z, y, vec!["x".into()]).map_err(|e| e.to_string())?;
        let w = reweigh(&data).map_err(|e| e.to_string())?;
        worst = worst.max(weighted_target_spd(&data, &w).map_err(|e| e.to_string())?);
    }
    ensure(worst <= 1e-12, format!("max weighted SPD {worst:e}"))?;
    Ok(format!("100 datasets, max weighted SPD {worst:.1e}"))
}

fn shifted_normals(per_group: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let n = 2 * per_group;
    let mut x = Array2::zeros((n, 1));
    let z: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let y: Vec<u8> = (0..n).map(|i| (i / 2 % 2) as u8).collect();
    for i in 0..n {
        let e: f64 = StandardNormal.sample(&mut r);
        x[[i, 0]] = e + f64::from(z[i]);
    }
    Dataset::new(x, z, y, vec!["x".into()]).unwrap()
}

fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let mut all: Vec<f64> = a.iter().chain(&b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.iter()
        .map(|&v| {
            let fa = a.partition_point(|&x| x <= v) as f64 / a.len() as f64;
            let fb = b.partition_point(|&x| x <= v) as f64 / b.len() as f64;
            (fa - fb).abs()
        })
        .fold(0.0, f64::max)
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        for &k in &order[i..=j] {
            out[k] = (i + j) as f64 / 2.0 + 1.0;
        }
        i = j + 1;
    }
    out
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn repair() -> Check {
    let data = shifted_normals(10_000, 3);
    let model = fit_repairer(&data, 101).map_err(|e| e.to_string())?;
    let group = |values: &[f64], g: u8| -> Vec<f64> {
        values
            .iter()
            .zip(data.protected())
            .filter(|(_, &z)| z == g)
            .map(|(&v, _)| v)
            .collect()
    };
    let original: Vec<f64> = data.features().column(0).to_vec();
    let mut ks_full = f64::NAN;
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let out = apply_repair(&model, data.features().view(), data.protected(), lambda).map_err(|e| e.to_string())?;
        let repaired: Vec<f64> = out.column(0).to_vec();
        if lambda == 0.0 {
            ensure(out == *data.features(), "λ=0 is not the identity")?;
        }
        for g in 0..2 {
            let rho = spearman(&group(&original, g), &group(&repaired, g));
            ensure((rho - 1.0).abs() < 1e-12, format!("λ={lambda} group {g}: rank correlation {rho}"))?;
        }
        if lambda == 1.0 {
            ks_full = ks(group(&repaired, 0), group(&repaired, 1));
        }
    }
    ensure(ks_full <= 0.05, format!("KS distance {ks_full}"))?;
    Ok(format!("KS at λ=1: {ks_full:.4}; identity at λ=0; rank correlation 1"))
}

fn selection_fixture() -> Dataset {
    let mut r = rng(8);
    let n = 1_500;
    let mut x = Array2::zeros((n, 6));
    let mut z = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let zi = u8::from(r.random::<f64>() < 0.5);
        let yi = u8::from(r.random::<f64>() < 0.3 + 0.3 * f64::from(zi));
        let e: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut r));
        x[[i, 0]] = e[0];
        x[[i, 1]] = f64::from(yi);
        x[[i, 2]] = f64::from(zi);
        x[[i, 3]] = f64::from(yi) + 1.5 * e[1];
        x[[i, 4]] = 2.0 * f64::from(zi) + e[2];
        x[[i, 5]] = f64::from(u8::from(r.random::<f64>() < 0.4 + 0.2 * f64::from(yi)));
        z.push(zi);
        y.push(yi);
    }
    Dataset::new(x, z, y, (0..6).map(|j| format!("c{j}")).collect()).unwrap()
}

/// Brute-force rank pipeline: every score and rank recomputed by direct
/// counting from the raw columns.
fn selection_oracle(data: &Dataset, lambda: f64, weights: &RankWeights, seed: u64) -> Vec<usize> {
    let d = data.d();
    let n = data.n();
    let columns: Vec<Vec<f64>> = (0..d).map(|j| data.features().column(j).to_vec()).collect();
    let rank_desc = |s: &[f64]| -> Vec<f64> {
        s.iter()
            .map(|&v| {
                let greater = s.iter().filter(|&&o| o > v).count() as f64;
                let equal = s.iter().filter(|&&o| o == v).count() as f64;
                greater + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let mutual_information = |col: &[f64], t: &[u8]| -> f64 {
        let binary = col.iter().all(|&v| v == 0.0 || v == 1.0);
        let bins: Vec<usize> = col
            .iter()
            .map(|&v| if binary { v as usize } else { col.iter().filter(|&&o| o < v).count() * 10 / n })
            .collect();
        let mut total = 0.0;
        for b in 0..10 {
            for c in 0..2u8 {
                let nb = bins.iter().filter(|&&x| x == b).count() as f64;
                let nc = t.iter().filter(|&&x| x == c).count() as f64;
                let nbc = bins.iter().zip(t).filter(|(&x, &y)| x == b && y == c).count() as f64;
                if nbc > 0.0 {
                    total += nbc / n as f64 * (nbc * n as f64 / (nb * nc)).ln();
                }
            }
        }
        total
    };
    let anova = |col: &[f64], t: &[u8]| -> f64 {
        let part = |c: u8| -> Vec<f64> { col.iter().zip(t).filter(|(_, &y)| y == c).map(|(&v, _)| v).collect() };
        let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (a, b) = (part(0), part(1));
        let grand = avg(col);
        let between = a.len() as f64 * (avg(&a) - grand).powi(2) + b.len() as f64 * (avg(&b) - grand).powi(2);
        let within: f64 = a.iter().map(|v| (v - avg(&a)).powi(2)).sum::<f64>()
            + b.iter().map(|v| (v - avg(&b)).powi(2)).sum::<f64>();
        if within == 0.0 {
            if between > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            between * (n as f64 - 2.0) / within
        }
    };
    let combined = |t: &[u8]| -> Vec<f64> {
        let mi: Vec<f64> = columns.iter().map(|c| mutual_information(c, t)).collect();
        let f: Vec<f64> = columns.iter().map(|c| anova(c, t)).collect();
        let tree_data =
            Dataset::new(data.features().clone(), vec![0; n], t.to_vec(), data.feature_names().to_vec()).unwrap();
        let config = LearnerConfig {
            seed,
            ..LearnerConfig::trees(50, 6)
        };
        let gi = fit_tree_ensemble(&tree_data, &config).unwrap().gain_importance().unwrap().to_vec();
        let (rm, rf, rg) = (rank_desc(&mi), rank_desc(&f), rank_desc(&gi));
        (0..d).map(|j| weights.mi * rm[j] + weights.f_test * rf[j] + weights.gain * rg[j]).collect()
    };
    let ry = combined(data.labels());
    let rz = combined(data.protected());
    let score: Vec<f64> = (0..d)
        .map(|j| (1.0 - lambda) * ry[j] + lambda * ((d as f64 + 1.0) - rz[j]))
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| score[a].partial_cmp(&score[b]).unwrap().then(a.cmp(&b)));
    order
}

fn feature_selection() -> Check {
    let data = selection_fixture();
    let w = RankWeights::default();
    let first = fair_feature_select(&data, 1, 0.0, &w, 3).map_err(|e| e.to_string())?;
    ensure(first == vec![1], format!("λ=0 picked {first:?} first"))?;
    let all = fair_feature_select(&data, 6, 1.0, &w, 3).map_err(|e| e.to_string())?;
    ensure(all.last() == Some(&2), format!("λ=1 order {all:?}"))?;
    for lambda in [0.0, 0.3, 0.5, 1.0] {
        let got = fair_feature_select(&data, 6, lambda, &w, 3).map_err(|e| e.to_string())?;
        let want = selection_oracle(&data, lambda, &w, 3);
        ensure(got == want, format!("λ={lambda}: {got:?} vs oracle {want:?}"))?;
    }
    Ok(format!("y-copy first at λ=0, z-copy last at λ=1 ({all:?}), oracle agrees"))
}

fn preset_dataset(name: &str, preset: Preset) -> DatasetConfig {
    DatasetConfig {
        train_proportion: Some(0.4),
        repetitions: Some(4),
        ..DatasetConfig::preset(name, preset, 10_000)
    }
}

fn in_train_tradeoff(out: &Path) -> Check {
    let start = Instant::now();
    let config = ExperimentConfig {
        seed: 2021,
        output_dir: out.join("tradeoff"),
        policies: vec![PolicyKind::Argmax],
        datasets: vec![preset_dataset("S-P", Preset::SimpleProxy)],
        pipelines: vec![Pipeline::new("fair-logistic", LearnerKind::FairLogistic)],
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&config, None).map_err(|e| e.to_string())?;
    ensure(outcome.succeeded(), "pipeline failed")?;
    let budget = &outcome.budgets[0];
    let lambda = budget.lambda.ok_or("no λ met the four-fifths rule on training data")?;
    let (di_on, di_off) = (budget.test_di.unwrap(), budget.test_di_off.unwrap());
    let (acc_on, acc_off) = (budget.test_accuracy.unwrap(), budget.test_accuracy_off.unwrap());
    let detail = format!(
        "λ*={lambda}: DI {di_off:.3} -> {di_on:.3}, accuracy {acc_off:.3} -> {acc_on:.3}"
    );
    ensure(di_on - di_off >= 0.05, format!("DI uplift too small; {detail}"))?;
    ensure(acc_off - acc_on <= 0.05, format!("accuracy drop too large; {detail}"))?;
    within_budget(start.elapsed(), Duration::from_secs(300))?;
    Ok(detail)
}

fn four_fifths(out: &Path) -> Check {
    let lr = vec![LearnerConfig::logistic(Regularization::L2 { strength: 0.1 })];
    let config = ExperimentConfig {
        seed: 2021,
        output_dir: out.join("reachability"),
        lambda_points: 11,
        policies: vec![PolicyKind::Argmax],
        datasets: Preset::ALL.iter().map(|&p| preset_dataset(p.name(), p)).collect(),
        pipelines: vec![
            Pipeline::new("fair-logistic", LearnerKind::FairLogistic).with_grid(lr.clone()),
            Pipeline::new("repair-logistic", LearnerKind::Logistic)
                .with_intervention(Intervention::Repair { grid_size: 101 })
                .with_grid(lr.clone()),
            Pipeline::new("reweigh-logistic", LearnerKind::Logistic)
                .with_intervention(Intervention::Reweigh)
                .with_grid(lr),
        ],
        ..ExperimentConfig::default()
    };
    let outcome = run_experiment(&config, None).map_err(|e| e.to_string())?;
    ensure(outcome.succeeded(), "a pipeline failed")?;
    let lines: Vec<String> = outcome
        .reachability
        .iter()
        .map(|r| format!("{} {:.3} ({} λ={})", r.dataset, r.di.unwrap_or(0.0), r.pipeline, r.lambda.unwrap_or(f64::NAN)))
        .collect();
    ensure(
        outcome.reachability.iter().all(|r| r.reachable),
        format!("unreachable: {}", lines.join("; ")),
    )?;
    Ok(lines.join("; "))
}

fn gradients() -> Check {
    let mut r = rng(10);
    let data = generate(&Preset::SimpleProxy.spec(300, 4)).map_err(|e| e.to_string())?;
    let d = data.d();
    let mut worst = 0.0f64;
    for (i, regularization) in [
        Regularization::None,
        Regularization::L2 { strength: 0.5 },
        Regularization::ElasticNet { strength: 0.2, mixing: 0.5 },
        Regularization::L2 { strength: 0.05 },
    ]
    .into_iter()
    .enumerate()
    {
        let config = LearnerConfig::logistic(regularization);
        let objective = LogisticObjective::new(&data, &config, fairness_multiplier(0.25 * i as f64));
        for _ in 0..5 {
            let p: Vec<f64> = (0..=d).map(|_| r.random_range(-1.5..1.5)).collect();
            let g = objective.gradient(&p);
            for j in 0..=d {
                let h = 1e-6 * p[j].abs().max(1.0);
                let (mut a, mut b) = (p.clone(), p.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (objective.smooth_value(&a) - objective.smooth_value(&b)) / (2.0 * h);
                worst = worst.max((fd - g[j]).abs() / g[j].abs().max(1e-3));
            }
        }
    }
    ensure(worst <= 1e-5, format!("max relative error {worst:e}"))?;
    Ok(format!("20 points, max relative error {worst:.1e}"))
}

fn determinism(out: &Path) -> Check {
    let config = |dir: &str| ExperimentConfig {
        seed: 99,
        output_dir: out.join(dir),
        lambda_points: 6,
        tau_points: 51,
        datasets: vec![DatasetConfig {
            repetitions: Some(3),
            ..DatasetConfig::preset("I-P", Preset::InteractionsProxy, 2_000)
        }],
        pipelines: vec![
            Pipeline::new("trees", LearnerKind::TreeEnsemble).with_grid(vec![LearnerConfig::trees(20, 4)]),
            Pipeline::new("fair-logistic", LearnerKind::FairLogistic),
            Pipeline::new("fs-nb", LearnerKind::GaussianNb).with_intervention(Intervention::FeatureSelect {
                k: 8,
                weights: RankWeights::default(),
            }),
        ],
        ..ExperimentConfig::default()
    };
    let mut snapshots = Vec::new();
    for (dir, jobs) in [("serial", 1), ("parallel", 8), ("again", 3)] {
        let c = config(dir);
        run_experiment(&c, Some(jobs)).map_err(|e| e.to_string())?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(c.output_path())
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        snapshots.push(files);
    }
    ensure(snapshots[0] == snapshots[1], "1 vs 8 threads differ")?;
    ensure(snapshots[0] == snapshots[2], "repeat run differs")?;
    let bytes: usize = snapshots[0].iter().map(|(_, b)| b.len()).sum();
    Ok(format!("{} files, {bytes} bytes identical across 3 runs", snapshots[0].len()))
}

fn policy_mechanics() -> Check {
    let grid = [0.0, 0.4, 0.5, 0.6, 1.0];
    let argmax = resolve_threshold(&Policy::default(), &grid, &[vec![1.0, 0.3, 0.1, 0.05, 0.0]])
        .map_err(|e| e.to_string())?;
    ensure(argmax.tau == Some(0.5) && !argmax.is_dropped(), "argmax did not resolve to 0.5")?;
    let ppr = Policy::new(PolicyKind::Ppr);
    let kept = resolve_threshold(
        &ppr,
        &grid,
        &[
            vec![1.0, 0.15, 0.05, 0.0, 0.0],
            vec![1.0, 0.19, 0.05, 0.0, 0.0],
            vec![1.0, 0.22, 0.05, 0.0, 0.0],
        ],
    )
    .map_err(|e| e.to_string())?;
    ensure(
        kept.tau == Some(0.4) && !kept.is_dropped(),
        format!("mean 0.1867 not kept: {kept:?}"),
    )?;
    let dropped = resolve_threshold(&ppr, &grid, &[vec![1.0, 0.12, 0.1, 0.05, 0.0]]).map_err(|e| e.to_string())?;
    ensure(
        dropped.tau.is_none() && dropped.dropped.as_deref() == Some(DROP_REASON),
        format!("mean 0.12 not dropped: {dropped:?}"),
    )?;
    let obs = |lambda, train_di, train_accuracy| BudgetObservation {
        lambda,
        repetition: 0,
        train_di,
        train_accuracy,
    };
    ensure(select_fairness_budget(&[obs(0.6, 0.85, 0.7)]) == Some(0.6), "single candidate")?;
    ensure(select_fairness_budget(&[obs(0.2, 0.78, 0.9), obs(0.9, 0.78, 0.7)]).is_none(), "no candidate")?;
    ensure(
        select_fairness_budget(&[obs(0.7, 0.9, 0.8), obs(0.3, 0.9, 0.8)]) == Some(0.3),
        "tie toward smaller λ",
    )?;
    Ok("argmax τ=0.5; PPR 0.1867 kept at τ=0.4, 0.12 dropped; budget rules hold".into())
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let out = scratch.path();
    let criteria: Vec<Criterion> = vec![
        ("metric oracle equivalence", Box::new(metric_oracle)),
        ("quadrature accuracy", Box::new(quadrature)),
        ("fair efficiency endpoints", Box::new(theta_endpoints)),
        ("synthetic calibration", Box::new(calibration)),
        ("reweighing exactness", Box::new(reweighing)),
        ("repair completeness", Box::new(repair)),
        ("fair feature selection", Box::new(feature_selection)),
        ("in-train trade-off on S-P", Box::new(|| in_train_tradeoff(out))),
        ("four-fifths reachability", Box::new(|| four_fifths(out))),
        ("gradient checks", Box::new(gradients)),
        ("determinism", Box::new(|| determinism(out))),
        ("policy mechanics", Box::new(policy_mechanics)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let elapsed = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} [{elapsed:.2?}]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} [{elapsed:.2?}]: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
