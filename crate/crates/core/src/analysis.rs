//! Descriptive statistics over per-grid-point S values, word-order
//! commutativity probes, and correlation of S-distribution statistics
//! against external benchmark scores.
//!
//! Moments are population moments (no small-sample correction) and
//! quantiles interpolate linearly at fractional rank `q * (n - 1)`; both
//! conventions are stated here because the interquartile range is the
//! headline discriminator between models and quantile conventions differ.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::grid::GridResults;
use crate::model::{SettingLabel, TrialRecord};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("empty input")]
    Empty,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("insufficient data: need at least {need}, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("no valid (nonzero) outcomes for the requested word and lens")]
    NoValidOutcomes,
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
}

/// Population distribution statistics. `skewness` and `excess_kurtosis` are
/// `None` when the variance is zero (the degenerate-variance marker);
/// `std_dev` itself reports 0 in that case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats<F: Real> {
    pub n: usize,
    pub mean: F,
    pub std_dev: F,
    pub skewness: Option<F>,
    pub excess_kurtosis: Option<F>,
    pub iqr: F,
}

/// Population moments plus interpolated quartiles.
pub fn distribution_stats<F: Real>(values: &[F]) -> Result<DistributionStats<F>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = F::from_count(values.len());
    let mean = values.iter().copied().sum::<F>() / n;
    let mut m2 = F::zero();
    let mut m3 = F::zero();
    let mut m4 = F::zero();
    for &value in values {
        let d = value - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let (std_dev, skewness, excess_kurtosis) = if m2 > F::zero() {
        let sigma = m2.sqrt();
        let three = F::from_f64_exact(3.0);
        (sigma, Some(m3 / (m2 * sigma)), Some(m4 / (m2 * m2) - three))
    } else {
        (F::zero(), None, None)
    };

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let q1 = quantile_sorted(&sorted, F::from_f64_exact(0.25));
    let q3 = quantile_sorted(&sorted, F::from_f64_exact(0.75));

    Ok(DistributionStats {
        n: values.len(),
        mean,
        std_dev,
        skewness,
        excess_kurtosis,
        iqr: q3 - q1,
    })
}

/// Quantile by linear interpolation on sorted order statistics: quantile q
/// sits at fractional rank `q * (n - 1)`.
pub fn quantile_sorted<F: Real>(sorted: &[F], q: F) -> F {
    debug_assert!(!sorted.is_empty());
    let max_rank = F::from_count(sorted.len() - 1);
    let rank = (q * max_rank).max(F::zero()).min(max_rank);
    let lo = rank.floor();
    let hi = rank.ceil();
    let lo_idx = lo.to_usize().unwrap_or(0);
    let hi_idx = hi.to_usize().unwrap_or(sorted.len() - 1);
    if lo_idx == hi_idx {
        return sorted[lo_idx];
    }
    let frac = rank - lo;
    sorted[lo_idx] + (sorted[hi_idx] - sorted[lo_idx]) * frac
}

/// Fraction of values with |value| strictly greater than `bound`.
pub fn violation_rate<F: Real>(values: &[F], bound: F) -> Result<F, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let violations = values.iter().filter(|v| v.abs() > bound).count();
    Ok(F::from_count(violations) / F::from_count(values.len()))
}

/// A rank or linear correlation with its two-sided p-value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation<F: Real> {
    pub rho: F,
    pub p_value: F,
    pub n: usize,
}

/// Average ranks (1-based), ties sharing the mean of their rank span.
pub fn average_ranks<F: Real>(values: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![F::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Mean of 1-based ranks start+1 ..= end+1.
        let two = F::from_f64_exact(2.0);
        let mean_rank = (F::from_count(start + 1) + F::from_count(end + 1)) / two;
        for &index in &order[start..=end] {
            ranks[index] = mean_rank;
        }
        start = end + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. The two-sided
/// p-value comes from exact permutation enumeration for n <= 8 and from the
/// Student-t approximation otherwise.
pub fn spearman<F: Real>(x: &[F], y: &[F]) -> Result<Correlation<F>, AnalysisError> {
    check_paired(x, y)?;
    let rank_x = average_ranks(x);
    let rank_y = average_ranks(y);
    let rho = pearson_r(&rank_x, &rank_y)?;
    let n = x.len();
    let p_value = if n <= 8 {
        permutation_p_value(&rank_x, &rank_y, rho)
    } else {
        F::from_f64_exact(t_approx_p_value(
            rho.to_f64().expect("real converts to f64"),
            n,
        ))
    };
    Ok(Correlation { rho, p_value, n })
}

/// Pearson linear correlation with the Student-t two-sided p-value.
pub fn pearson<F: Real>(x: &[F], y: &[F]) -> Result<Correlation<F>, AnalysisError> {
    check_paired(x, y)?;
    let rho = pearson_r(x, y)?;
    let p_value = F::from_f64_exact(t_approx_p_value(
        rho.to_f64().expect("real converts to f64"),
        x.len(),
    ));
    Ok(Correlation {
        rho,
        p_value,
        n: x.len(),
    })
}

fn check_paired<F: Real>(x: &[F], y: &[F]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(AnalysisError::InsufficientData {
            need: 3,
            got: x.len(),
        });
    }
    Ok(())
}

fn pearson_r<F: Real>(x: &[F], y: &[F]) -> Result<F, AnalysisError> {
    let n = F::from_count(x.len());
    let mean_x = x.iter().copied().sum::<F>() / n;
    let mean_y = y.iter().copied().sum::<F>() / n;
    let mut cov = F::zero();
    let mut var_x = F::zero();
    let mut var_y = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == F::zero() || var_y == F::zero() {
        return Err(AnalysisError::DegenerateInput(
            "constant input has no defined correlation".into(),
        ));
    }
    // Clamp against rounding drift just past +-1.
    Ok((cov / (var_x * var_y).sqrt()).max(-F::one()).min(F::one()))
}

/// Exact two-sided permutation p-value: the fraction of permutations of one
/// rank vector whose |rho| reaches the observed |rho|.
fn permutation_p_value<F: Real>(rank_x: &[F], rank_y: &[F], observed: F) -> F {
    let slack = F::from_f64_exact(1e-12);
    let threshold = observed.abs() - slack;
    let mut permuted: Vec<F> = rank_y.to_vec();
    let mut at_least = 0usize;
    let mut total = 0usize;
    // Heap's algorithm, iterative form.
    let n = permuted.len();
    let mut counters = vec![0usize; n];
    let mut tally = |perm: &[F]| {
        total += 1;
        if let Ok(rho) = pearson_r(rank_x, perm) {
            if rho.abs() >= threshold {
                at_least += 1;
            }
        }
    };
    tally(&permuted);
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                permuted.swap(0, i);
            } else {
                permuted.swap(counters[i], i);
            }
            tally(&permuted);
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    F::from_count(at_least) / F::from_count(total)
}

/// Two-sided p-value from t = rho * sqrt((n-2) / (1 - rho^2)).
fn t_approx_p_value(rho: f64, n: usize) -> f64 {
    let dof = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= f64::EPSILON {
        return 0.0;
    }
    let t = rho.abs() * (dof / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
    2.0 * (1.0 - dist.cdf(t))
}

/// One summary-table row: the distribution of a model's per-grid-point S
/// values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDistributionSummary {
    pub model_id: String,
    /// Count of grid points with a valid CHSH result.
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
    pub iqr: f64,
    /// Fraction of grid points with |S| strictly above the classical bound.
    pub violation_rate: f64,
}

/// Distribution statistics plus violation rate over per-grid-point S values.
pub fn summarize_values(
    model_id: &str,
    s_values: &[f64],
) -> Result<ModelDistributionSummary, AnalysisError> {
    let stats = distribution_stats(s_values)?;
    let violation = violation_rate(s_values, crate::stats::CLASSICAL_BOUND)?;
    Ok(ModelDistributionSummary {
        model_id: model_id.to_string(),
        n: stats.n,
        mean: stats.mean,
        std_dev: stats.std_dev,
        skewness: stats.skewness,
        excess_kurtosis: stats.excess_kurtosis,
        iqr: stats.iqr,
        violation_rate: violation,
    })
}

/// [`summarize_values`] over grouped grid results.
pub fn summarize_model(
    model_id: &str,
    results: &GridResults,
) -> Result<ModelDistributionSummary, AnalysisError> {
    summarize_values(model_id, &results.s_values())
}

/// Fraction of +1 outcomes among nonzero outcomes for `word` under `lens`.
pub fn meaning_probability(
    trials: &[TrialRecord],
    word: &str,
    lens: SettingLabel,
) -> Result<f64, AnalysisError> {
    let mut plus = 0usize;
    let mut nonzero = 0usize;
    for trial in trials {
        if trial.pair.word_for(lens.party()) != word {
            continue;
        }
        match trial.outcome_value(lens) {
            1 => {
                plus += 1;
                nonzero += 1;
            }
            -1 => nonzero += 1,
            _ => {}
        }
    }
    if nonzero == 0 {
        return Err(AnalysisError::NoValidOutcomes);
    }
    Ok(plus as f64 / nonzero as f64)
}

/// P(meaning A) under both word orders for one (word, lens, sampling) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectRecord {
    pub word: String,
    pub lens: SettingLabel,
    pub sampling_key: String,
    pub p_original: f64,
    pub p_flipped: f64,
    pub delta_p: f64,
    pub n_original: usize,
    pub n_flipped: usize,
}

/// Order-effect records plus the skip and threshold counts.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OrderEffectReport {
    pub records: Vec<OrderEffectRecord>,
    /// Cells that had only one word order (or no usable outcomes) and were
    /// skipped rather than reported.
    pub skipped_cells: usize,
    /// Cells with |delta P| > 0.5.
    pub cells_above_half: usize,
}

/// Pairs P(meaning A) between original and flipped word order for every
/// (word, lens, sampling) cell that has usable outcomes under both orders.
pub fn order_effects(results: &GridResults) -> OrderEffectReport {
    // (word, lens, sampling key) -> per-order (plus, nonzero) tallies.
    type Tally = [(usize, usize); 2];
    let mut cells: BTreeMap<(String, SettingLabel, String), Tally> = BTreeMap::new();

    for cell in results.cells.values() {
        let order_slot = match cell.point.order {
            crate::model::WordOrder::Original => 0,
            crate::model::WordOrder::Flipped => 1,
        };
        for lens in SettingLabel::ALL {
            let word = cell.point.pair.word_for(lens.party()).to_string();
            let key = (word, lens, cell.point.sampling.key());
            let tally = cells.entry(key).or_insert([(0, 0); 2]);
            for trial in &cell.trials {
                match trial.outcome_value(lens) {
                    1 => {
                        tally[order_slot].0 += 1;
                        tally[order_slot].1 += 1;
                    }
                    -1 => tally[order_slot].1 += 1,
                    _ => {}
                }
            }
        }
    }

    let mut report = OrderEffectReport::default();
    for ((word, lens, sampling_key), tally) in cells {
        let [(plus_orig, n_orig), (plus_flip, n_flip)] = tally;
        if n_orig == 0 || n_flip == 0 {
            report.skipped_cells += 1;
            continue;
        }
        let p_original = plus_orig as f64 / n_orig as f64;
        let p_flipped = plus_flip as f64 / n_flip as f64;
        let delta_p = (p_original - p_flipped).abs();
        if delta_p > 0.5 {
            report.cells_above_half += 1;
        }
        report.records.push(OrderEffectRecord {
            word,
            lens,
            sampling_key,
            p_original,
            p_flipped,
            delta_p,
            n_original: n_orig,
            n_flipped: n_flip,
        });
    }
    report
}

/// External benchmark scores for one model; each is optional.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkScores {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmlu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hallucination: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pushback: Option<f64>,
}

impl BenchmarkScores {
    pub fn get(&self, benchmark: BenchmarkKind) -> Option<f64> {
        match benchmark {
            BenchmarkKind::Mmlu => self.mmlu,
            BenchmarkKind::Hallucination => self.hallucination,
            BenchmarkKind::Pushback => self.pushback,
        }
    }

    pub fn any_present(&self) -> bool {
        self.mmlu.is_some() || self.hallucination.is_some() || self.pushback.is_some()
    }
}

/// User-supplied benchmark scores keyed by model id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub models: BTreeMap<String, BenchmarkScores>,
}

/// Which S-distribution statistic a correlation record refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Iqr,
    ViolationRate,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 2] = [StatisticKind::Iqr, StatisticKind::ViolationRate];

    fn extract(self, summary: &ModelDistributionSummary) -> f64 {
        match self {
            StatisticKind::Iqr => summary.iqr,
            StatisticKind::ViolationRate => summary.violation_rate,
        }
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatisticKind::Iqr => write!(f, "iqr"),
            StatisticKind::ViolationRate => write!(f, "violation_rate"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Mmlu,
    Hallucination,
    Pushback,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 3] = [
        BenchmarkKind::Mmlu,
        BenchmarkKind::Hallucination,
        BenchmarkKind::Pushback,
    ];
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchmarkKind::Mmlu => write!(f, "mmlu"),
            BenchmarkKind::Hallucination => write!(f, "hallucination"),
            BenchmarkKind::Pushback => write!(f, "pushback"),
        }
    }
}

/// One (statistic, benchmark) correlation over the models covered by both.
/// Spearman is the primary estimator; Pearson rides along for comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    pub statistic: StatisticKind,
    pub benchmark: BenchmarkKind,
    pub rho_spearman: f64,
    pub p_spearman: f64,
    pub rho_pearson: f64,
    pub p_pearson: f64,
    pub n: usize,
}

/// Benchmarks skipped for lack of coverage, with the model count they had.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBenchmark {
    pub benchmark: BenchmarkKind,
    pub n: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub records: Vec<CorrelationRecord>,
    pub skipped: Vec<SkippedBenchmark>,
}

/// One record per (statistic in {IQR, violation rate}) x (benchmark in
/// {MMLU, hallucination, pushback}) over the intersection of models that
/// have both a summary and that benchmark value. Benchmarks covering fewer
/// than three models are skipped; the others are still computed.
pub fn correlate_benchmarks(
    summaries: &[ModelDistributionSummary],
    benchmarks: &BenchmarkTable,
) -> CorrelationReport {
    let mut report = CorrelationReport::default();
    let mut ordered: Vec<&ModelDistributionSummary> = summaries.iter().collect();
    ordered.sort_by(|a, b| a.model_id.cmp(&b.model_id));

    for benchmark in BenchmarkKind::ALL {
        let covered: Vec<(&ModelDistributionSummary, f64)> = ordered
            .iter()
            .filter_map(|summary| {
                benchmarks
                    .models
                    .get(&summary.model_id)
                    .and_then(|scores| scores.get(benchmark))
                    .map(|score| (*summary, score))
            })
            .collect();
        if covered.len() < 3 {
            report.skipped.push(SkippedBenchmark {
                benchmark,
                n: covered.len(),
            });
            continue;
        }
        let scores: Vec<f64> = covered.iter().map(|(_, score)| *score).collect();
        for statistic in StatisticKind::ALL {
            let stat_values: Vec<f64> = covered
                .iter()
                .map(|(summary, _)| statistic.extract(summary))
                .collect();
            let (rho_s, p_s) = match spearman(&stat_values, &scores) {
                Ok(c) => (c.rho, c.p_value),
                Err(_) => (0.0, 1.0),
            };
            let (rho_p, p_p) = match pearson(&stat_values, &scores) {
                Ok(c) => (c.rho, c.p_value),
                Err(_) => (0.0, 1.0),
            };
            report.records.push(CorrelationRecord {
                statistic,
                benchmark,
                rho_spearman: rho_s,
                p_spearman: p_s,
                rho_pearson: rho_p,
                p_pearson: p_p,
                n: covered.len(),
            });
        }
    }
    report
}
