//! Report emission: delimited tables for the distribution summaries, the
//! per-(tau, p, k) mean-S heatmap, order effects, and benchmark
//! correlations, plus standalone SVG histograms of per-model S with the
//! classical bound marked. Every file is plain text, re-parseable, and
//! byte-deterministic for a given store.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chsh_core::analysis::{
    correlate_benchmarks, distribution_stats, BenchmarkTable, CorrelationReport,
    ModelDistributionSummary, OrderEffectReport,
};
use chsh_core::grid::GridResults;
use chsh_core::stats::CLASSICAL_BOUND;

use crate::store::StoreError;

/// What `report` wrote and why anything was left out.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ReportManifest {
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

fn storage_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Storage {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), StoreError> {
    std::fs::write(path, contents).map_err(|source| storage_err(path, source))
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "degenerate".to_string(), |v| format!("{v:.6}"))
}

/// Table of per-model distribution statistics, one row per model:
/// model, n, mean, sigma, skewness, excess kurtosis, IQR, violation %.
pub fn write_summary_table(
    summaries: &[ModelDistributionSummary],
    path: &Path,
) -> Result<(), StoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "model",
            "n",
            "mean",
            "sigma",
            "skewness",
            "excess_kurtosis",
            "iqr",
            "violation_pct",
        ])
        .and_then(|()| {
            for summary in summaries {
                writer.write_record([
                    summary.model_id.clone(),
                    summary.n.to_string(),
                    format!("{:.6}", summary.mean),
                    format!("{:.6}", summary.std_dev),
                    fmt_opt(summary.skewness),
                    fmt_opt(summary.excess_kurtosis),
                    format!("{:.6}", summary.iqr),
                    format!("{:.1}", summary.violation_rate * 100.0),
                ])?;
            }
            Ok(())
        })
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    write_file(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

/// One heatmap row: mean +- sigma of per-cell S for a (tau, p, k) triple,
/// pooled over word pairs and orders. `bold` marks |mean| above the
/// classical bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub model_id: String,
    pub sampling_key: String,
    pub temperature: Option<f64>,
    pub top_p: Option<f64>,
    pub top_k: Option<u32>,
    pub mean_s: f64,
    pub std_s: f64,
    pub n_cells: usize,
    pub bold: bool,
}

/// Pools each model's per-cell S values by sampling config.
pub fn heatmap_cells(per_model: &BTreeMap<String, GridResults>) -> Vec<HeatmapCell> {
    let mut rows = Vec::new();
    for (model_id, results) in per_model {
        let mut by_sampling: BTreeMap<String, (Vec<f64>, Option<_>)> = BTreeMap::new();
        for cell in results.cells.values() {
            let entry = by_sampling
                .entry(cell.point.sampling.key())
                .or_insert_with(|| (Vec::new(), None));
            if let Some(chsh) = &cell.chsh {
                entry.0.push(chsh.s_literal);
            }
            entry.1.get_or_insert_with(|| cell.point.sampling.clone());
        }
        for (sampling_key, (s_values, sampling)) in by_sampling {
            if s_values.is_empty() {
                continue;
            }
            let stats = distribution_stats(&s_values).expect("nonempty");
            let sampling = sampling.expect("sampling recorded");
            rows.push(HeatmapCell {
                model_id: model_id.clone(),
                sampling_key,
                temperature: sampling.temperature,
                top_p: sampling.top_p,
                top_k: sampling.top_k,
                mean_s: stats.mean,
                std_s: stats.std_dev,
                n_cells: stats.n,
                bold: stats.mean.abs() > CLASSICAL_BOUND,
            });
        }
    }
    rows
}

pub fn write_heatmap_table(cells: &[HeatmapCell], path: &Path) -> Result<(), StoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "model",
            "temperature",
            "top_p",
            "top_k",
            "mean_s",
            "std_s",
            "n_cells",
            "bold",
        ])
        .and_then(|()| {
            for cell in cells {
                writer.write_record([
                    cell.model_id.clone(),
                    cell.temperature.map_or_else(String::new, |v| v.to_string()),
                    cell.top_p.map_or_else(String::new, |v| v.to_string()),
                    cell.top_k.map_or_else(String::new, |v| v.to_string()),
                    format!("{:.6}", cell.mean_s),
                    format!("{:.6}", cell.std_s),
                    cell.n_cells.to_string(),
                    cell.bold.to_string(),
                ])?;
            }
            Ok(())
        })
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    write_file(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn write_order_effects_table(
    model_id: &str,
    report: &OrderEffectReport,
    path: &Path,
) -> Result<(), StoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "model",
            "word",
            "lens",
            "sampling",
            "p_original",
            "p_flipped",
            "delta_p",
            "n_original",
            "n_flipped",
        ])
        .and_then(|()| {
            for record in &report.records {
                writer.write_record([
                    model_id.to_string(),
                    record.word.clone(),
                    record.lens.to_string(),
                    record.sampling_key.clone(),
                    format!("{:.6}", record.p_original),
                    format!("{:.6}", record.p_flipped),
                    format!("{:.6}", record.delta_p),
                    record.n_original.to_string(),
                    record.n_flipped.to_string(),
                ])?;
            }
            Ok(())
        })
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    write_file(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn write_correlation_table(report: &CorrelationReport, path: &Path) -> Result<(), StoreError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "statistic",
            "benchmark",
            "rho_spearman",
            "p_spearman",
            "rho_pearson",
            "p_pearson",
            "n",
        ])
        .and_then(|()| {
            for record in &report.records {
                writer.write_record([
                    record.statistic.to_string(),
                    record.benchmark.to_string(),
                    format!("{:.6}", record.rho_spearman),
                    format!("{:.6}", record.p_spearman),
                    format!("{:.6}", record.rho_pearson),
                    format!("{:.6}", record.p_pearson),
                    record.n.to_string(),
                ])?;
            }
            Ok(())
        })
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    let bytes = writer
        .into_inner()
        .map_err(|e| storage_err(path, std::io::Error::other(e)))?;
    write_file(path, &String::from_utf8(bytes).expect("csv is utf-8"))
}

/// Standalone SVG histogram of one model's per-grid-point S values with the
/// |S| = 2 classical bound drawn as a dashed line.
pub fn histogram_svg(model_id: &str, s_values: &[f64]) -> String {
    const WIDTH: f64 = 640.0;
    const HEIGHT: f64 = 400.0;
    const MARGIN: f64 = 48.0;
    const BINS: usize = 24;

    let lo = s_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .min(0.0);
    let hi = s_values
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(CLASSICAL_BOUND + 0.5);
    let span = (hi - lo).max(1e-9);
    let mut counts = [0usize; BINS];
    for &s in s_values {
        let bin = (((s - lo) / span) * BINS as f64).floor() as usize;
        counts[bin.min(BINS - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1) as f64;

    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let x_of = |s: f64| MARGIN + (s - lo) / span * plot_w;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "  <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">S distribution: {} (n={})</text>",
        WIDTH / 2.0,
        model_id,
        s_values.len()
    );
    // Axes.
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        svg,
        "  <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    );
    // Bars.
    for (bin, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let x = MARGIN + bin as f64 / BINS as f64 * plot_w;
        let bar_w = plot_w / BINS as f64;
        let bar_h = count as f64 / peak * plot_h;
        let y = HEIGHT - MARGIN - bar_h;
        let _ = writeln!(
            svg,
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{h:.2}\" \
             fill=\"steelblue\" stroke=\"white\" stroke-width=\"0.5\"/>",
            w = bar_w,
            h = bar_h
        );
    }
    // Classical bound markers at S = +-2 when inside the plotted range.
    for bound in [CLASSICAL_BOUND, -CLASSICAL_BOUND] {
        if bound >= lo && bound <= hi {
            let x = x_of(bound);
            let _ = writeln!(
                svg,
                "  <line x1=\"{x:.2}\" y1=\"{t}\" x2=\"{x:.2}\" y2=\"{b}\" stroke=\"blue\" \
                 stroke-dasharray=\"6,4\"/>",
                t = MARGIN,
                b = HEIGHT - MARGIN
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{x:.2}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"12\" \
                 fill=\"blue\" text-anchor=\"middle\">|S|=2</text>",
                y = MARGIN - 6.0
            );
        }
    }
    // X-axis tick labels.
    for tick in 0..=4 {
        let s = lo + span * f64::from(tick) / 4.0;
        let x = x_of(s);
        let _ = writeln!(
            svg,
            "  <text x=\"{x:.2}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{s:.2}</text>",
            y = HEIGHT - MARGIN + 18.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Emits every report for the given per-model results. Reports with no data
/// are omitted and the omission is noted in the manifest.
pub fn export_reports(
    per_model: &BTreeMap<String, GridResults>,
    summaries: &[ModelDistributionSummary],
    order_reports: &BTreeMap<String, OrderEffectReport>,
    benchmarks: Option<&BenchmarkTable>,
    outdir: &Path,
) -> Result<ReportManifest, StoreError> {
    std::fs::create_dir_all(outdir).map_err(|source| storage_err(outdir, source))?;
    let mut manifest = ReportManifest::default();
    let add = |manifest: &mut ReportManifest, path: PathBuf| {
        manifest.files.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
    };

    if summaries.is_empty() {
        manifest
            .notes
            .push("no model summaries: summary table omitted".into());
    } else {
        let path = outdir.join("summary.csv");
        write_summary_table(summaries, &path)?;
        add(&mut manifest, path);
    }

    let cells = heatmap_cells(per_model);
    if cells.is_empty() {
        manifest
            .notes
            .push("no grid cells with results: heatmap omitted".into());
    } else {
        let path = outdir.join("heatmap.csv");
        write_heatmap_table(&cells, &path)?;
        add(&mut manifest, path);
    }

    for (model_id, report) in order_reports {
        if report.records.is_empty() {
            manifest.notes.push(format!(
                "model {model_id}: no order-effect cells with both orders ({} skipped)",
                report.skipped_cells
            ));
            continue;
        }
        let path = outdir.join(format!("order_effects_{}.csv", sanitize(model_id)));
        write_order_effects_table(model_id, report, &path)?;
        add(&mut manifest, path);
    }

    match benchmarks {
        Some(table) => {
            let correlations = correlate_benchmarks(summaries, table);
            if correlations.records.is_empty() {
                manifest.notes.push(format!(
                    "no benchmark covered >= 3 summarized models ({} skipped): correlation table omitted",
                    correlations.skipped.len()
                ));
            } else {
                let path = outdir.join("correlations.csv");
                write_correlation_table(&correlations, &path)?;
                add(&mut manifest, path);
                for skipped in &correlations.skipped {
                    manifest.notes.push(format!(
                        "benchmark {} covered only {} models: skipped",
                        skipped.benchmark, skipped.n
                    ));
                }
            }
        }
        None => manifest
            .notes
            .push("no benchmark table configured: correlation table omitted".into()),
    }

    for (model_id, results) in per_model {
        let s_values = results.s_values();
        if s_values.is_empty() {
            manifest
                .notes
                .push(format!("model {model_id}: no S values, histogram omitted"));
            continue;
        }
        let path = outdir.join(format!("hist_{}.svg", sanitize(model_id)));
        write_file(&path, &histogram_svg(model_id, &s_values))?;
        add(&mut manifest, path);
    }

    let manifest_path = outdir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    write_file(&manifest_path, &json)?;
    Ok(manifest)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
