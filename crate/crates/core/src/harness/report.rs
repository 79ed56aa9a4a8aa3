use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::Split;
use super::tables::*;
use crate::error::{Error, Result};
use crate::policies::PolicyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Csv,
    Svg,
}

impl ReportFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
}

pub const BENCHMARK_TABLE: &str = "report_benchmark.csv";
pub const UPLIFT_TABLE: &str = "report_uplift.csv";
pub const SCATTER_TABLE: &str = "report_scatter.csv";
pub const THETA_TABLE: &str = "report_theta.csv";
pub const THETA_BOX_TABLE: &str = "report_theta_box.csv";

/// Repetition-averaged test metrics of a fairness-unaware pipeline.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset: String,
    pub pipeline: String,
    pub policy: String,
    pub tau: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub di: f64,
    pub eo: f64,
    pub auc: f64,
}

/// Test DI and accuracy with the intervention fully on (largest λ) and off.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UpliftRow {
    pub dataset: String,
    pub pipeline: String,
    pub policy: String,
    pub lambda_on: f64,
    pub di_off: f64,
    pub di_on: f64,
    pub di_uplift: f64,
    pub accuracy_off: f64,
    pub accuracy_on: f64,
    pub accuracy_change: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub dataset: String,
    pub pipeline: String,
    pub policy: String,
    pub fairness_aware: bool,
    pub status: String,
    pub lambda: Option<f64>,
    pub accuracy: Option<f64>,
    pub di: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub dataset: String,
    pub pipeline: String,
    pub repetition: usize,
    pub theta_di: f64,
    pub theta_eo: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub dataset: String,
    pub pipeline: String,
    pub metric: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// All report tables, computed from a run directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub benchmark: Vec<BenchmarkRow>,
    pub uplift: Vec<UpliftRow>,
    pub scatter: Vec<ScatterRow>,
    pub theta: Vec<ThetaRow>,
    pub theta_box: Vec<BoxRow>,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn box_row(dataset: &str, pipeline: &str, metric: &str, mut values: Vec<f64>) -> BoxRow {
    values.sort_by(f64::total_cmp);
    BoxRow {
        dataset: dataset.into(),
        pipeline: pipeline.into(),
        metric: metric.into(),
        min: values[0],
        q1: quantile(&values, 0.25),
        median: quantile(&values, 0.5),
        q3: quantile(&values, 0.75),
        max: values[values.len() - 1],
    }
}

pub fn build_report(run_dir: &Path) -> Result<Report> {
    let config_path = run_dir.join(RUN_CONFIG);
    if !config_path.exists() {
        return Err(Error::NotFound(run_dir.to_path_buf()));
    }
    let config = ExperimentConfig::from_toml(&std::fs::read_to_string(&config_path)?)?;
    let metrics: Vec<PolicyMetricRecord> = read_table(&run_dir.join(POLICY_METRICS))?;
    let summary: Vec<SummaryRecord> = read_table(&run_dir.join(SUMMARY))?;
    let efficiencies: Vec<EfficiencyRecord> = read_table(&run_dir.join(EFFICIENCIES))?;

    let threshold_policies: Vec<PolicyKind> = config
        .policies
        .iter()
        .copied()
        .filter(|&k| k != PolicyKind::PolicyFree)
        .collect();
    let lambda_max = config.lambda_grid().last().copied().unwrap_or(1.0);
    let mut report = Report::default();

    for dataset in &config.datasets {
        for pipeline in &config.pipelines {
            for &kind in &threshold_policies {
                let test_rows = |lambda: f64| -> Vec<&PolicyMetricRecord> {
                    metrics
                        .iter()
                        .filter(|r| {
                            r.dataset == dataset.name
                                && r.pipeline == pipeline.name
                                && r.policy == kind
                                && r.lambda == lambda
                                && r.split == Split::Test
                        })
                        .collect()
                };
                let avg = |rows: &[&PolicyMetricRecord], f: fn(&PolicyMetricRecord) -> f64| {
                    mean(&rows.iter().map(|r| f(r)).collect::<Vec<_>>())
                };
                let off = test_rows(0.0);
                if !pipeline.is_fairness_aware() && !off.is_empty() {
                    report.benchmark.push(BenchmarkRow {
                        dataset: dataset.name.clone(),
                        pipeline: pipeline.name.clone(),
                        policy: kind.as_str().into(),
                        tau: off[0].tau,
                        accuracy: avg(&off, |r| r.accuracy),
                        precision: avg(&off, |r| r.precision),
                        di: avg(&off, |r| r.di),
                        eo: avg(&off, |r| r.eo),
                        auc: avg(&off, |r| r.auc),
                    });
                }
                let on = test_rows(lambda_max);
                if pipeline.is_fairness_aware() && !off.is_empty() && !on.is_empty() {
                    let (di_off, di_on) = (avg(&off, |r| r.di), avg(&on, |r| r.di));
                    let (acc_off, acc_on) = (avg(&off, |r| r.accuracy), avg(&on, |r| r.accuracy));
                    report.uplift.push(UpliftRow {
                        dataset: dataset.name.clone(),
                        pipeline: pipeline.name.clone(),
                        policy: kind.as_str().into(),
                        lambda_on: lambda_max,
                        di_off,
                        di_on,
                        di_uplift: di_on - di_off,
                        accuracy_off: acc_off,
                        accuracy_on: acc_on,
                        accuracy_change: acc_on - acc_off,
                    });
                }
                let row = summary
                    .iter()
                    .find(|s| s.dataset == dataset.name && s.pipeline == pipeline.name && s.policy == kind);
                report.scatter.push(match row {
                    Some(s) => ScatterRow {
                        dataset: dataset.name.clone(),
                        pipeline: pipeline.name.clone(),
                        policy: kind.as_str().into(),
                        fairness_aware: s.fairness_aware,
                        status: s.status.clone(),
                        lambda: s.lambda,
                        accuracy: s.accuracy,
                        di: s.di,
                    },
                    None => ScatterRow {
                        dataset: dataset.name.clone(),
                        pipeline: pipeline.name.clone(),
                        policy: kind.as_str().into(),
                        fairness_aware: pipeline.is_fairness_aware(),
                        status: "failed".into(),
                        ..ScatterRow::default()
                    },
                });
            }
            let thetas: Vec<&EfficiencyRecord> = efficiencies
                .iter()
                .filter(|e| e.dataset == dataset.name && e.pipeline == pipeline.name)
                .collect();
            report.theta.extend(thetas.iter().map(|e| ThetaRow {
                dataset: e.dataset.clone(),
                pipeline: e.pipeline.clone(),
                repetition: e.repetition,
                theta_di: e.theta_di,
                theta_eo: e.theta_eo,
            }));
            if !thetas.is_empty() {
                let di = thetas.iter().map(|e| e.theta_di).collect();
                let eo = thetas.iter().map(|e| e.theta_eo).collect();
                report.theta_box.push(box_row(&dataset.name, &pipeline.name, "theta_di", di));
                report.theta_box.push(box_row(&dataset.name, &pipeline.name, "theta_eo", eo));
            }
        }
    }
    Ok(report)
}

/// Writes the report tables (CSV) or plots (SVG) into `run_dir` and
/// returns the written paths.
pub fn emit_report(run_dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    let report = build_report(run_dir)?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let mut put = |name: &str| {
                let path = run_dir.join(name);
                written.push(path.clone());
                path
            };
            write_table(&put(BENCHMARK_TABLE), &report.benchmark)?;
            write_table(&put(UPLIFT_TABLE), &report.uplift)?;
            write_table(&put(SCATTER_TABLE), &report.scatter)?;
            write_table(&put(THETA_TABLE), &report.theta)?;
            write_table(&put(THETA_BOX_TABLE), &report.theta_box)?;
        }
        ReportFormat::Svg => {
            let mut policies: Vec<&str> = report.scatter.iter().map(|s| s.policy.as_str()).collect();
            policies.dedup();
            for policy in policies {
                let rows: Vec<&ScatterRow> = report.scatter.iter().filter(|s| s.policy == policy).collect();
                let path = run_dir.join(format!("scatter_{policy}.svg"));
                std::fs::write(&path, scatter_svg(policy, &rows))?;
                written.push(path);
            }
            let path = run_dir.join("theta_box.svg");
            std::fs::write(&path, box_svg(&report.theta_box))?;
            written.push(path);
        }
    }
    Ok(written)
}

const PALETTE: [&str; 8] = [
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666",
];

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn colour_index<'a>(names: &mut Vec<&'a str>, name: &'a str) -> usize {
    match names.iter().position(|&n| n == name) {
        Some(i) => i,
        None => {
            names.push(name);
            names.len() - 1
        }
    }
}

fn scatter_svg(policy: &str, rows: &[&ScatterRow]) -> String {
    let (w, h, m) = (640.0, 480.0, 60.0);
    let x = |v: f64| m + v * (w - 2.0 * m);
    let y = |v: f64| h - m - v * (h - 2.0 * m);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">Accuracy vs DI ({})</text>"#,
        w / 2.0,
        escape(policy)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"##,
            x(v), y(0.0), x(v), y(1.0), x(v), y(0.0) + 16.0, x(0.0) - 6.0, y(v) + 4.0
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/>"##,
            x(0.0), y(v), x(1.0), y(v)
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#c00" stroke-dasharray="4 3"/>"##,
        x(0.8), y(0.0), x(0.8), y(1.0)
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">DI</text>"#, w / 2.0, h - 18.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">Accuracy</text>"#,
        h / 2.0,
        h / 2.0
    );
    let mut names = Vec::new();
    for row in rows {
        let colour = PALETTE[colour_index(&mut names, &row.pipeline) % PALETTE.len()];
        if let (Some(di), Some(acc)) = (row.di, row.accuracy) {
            let _ = writeln!(
                svg,
                r#"<circle cx="{:.1}" cy="{:.1}" r="5" fill="{colour}" fill-opacity="0.8"><title>{} / {}</title></circle>"#,
                x(di),
                y(acc),
                escape(&row.dataset),
                escape(&row.pipeline)
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let ly = m + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.1}" cy="{ly:.1}" r="5" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            w - m - 110.0,
            PALETTE[i % PALETTE.len()],
            w - m - 100.0,
            ly + 4.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn box_svg(rows: &[BoxRow]) -> String {
    let mut by_metric: BTreeMap<&str, Vec<&BoxRow>> = BTreeMap::new();
    for r in rows {
        by_metric.entry(r.metric.as_str()).or_default().push(r);
    }
    let per_panel = by_metric.values().map(Vec::len).max().unwrap_or(0);
    let (label_w, plot_w, row_h, m) = (220.0, 360.0, 22.0, 40.0);
    let panel_h = m + row_h * per_panel as f64 + 30.0;
    let w = label_w + plot_w + m;
    let h = (panel_h * by_metric.len() as f64).max(80.0);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (p, (metric, boxes)) in by_metric.iter().enumerate() {
        let top = panel_h * p as f64;
        let x = |v: f64| label_w + v * plot_w;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">{}</text>"#,
            label_w + plot_w / 2.0,
            top + 20.0,
            escape(metric)
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"##,
                x(v),
                top + m - 8.0,
                x(v),
                top + m + row_h * boxes.len() as f64,
                x(v),
                top + m + row_h * boxes.len() as f64 + 14.0
            );
        }
        for (i, b) in boxes.iter().enumerate() {
            let cy = top + m + row_h * (i as f64 + 0.5);
            let colour = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{} / {}</text>"#,
                label_w - 8.0,
                cy + 4.0,
                escape(&b.dataset),
                escape(&b.pipeline)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{:.1}" y1="{cy:.1}" x2="{:.1}" y2="{cy:.1}" stroke="black"/><rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{colour}" fill-opacity="0.6" stroke="black"/><line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
                x(b.min),
                x(b.max),
                x(b.q1),
                cy - 7.0,
                (x(b.q3) - x(b.q1)).max(1.0),
                14.0,
                x(b.median),
                cy - 7.0,
                x(b.median),
                cy + 7.0
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
