//! Recomputes CHSH results and distribution summaries from a trial store.
//! The analysis is a pure function of the store contents: trials group into
//! cells, cells sort by key, each cell's trials sort by id, so the same
//! store bytes always produce byte-identical analysis output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use chsh_core::analysis::{
    order_effects, summarize_model, ModelDistributionSummary, OrderEffectReport,
};
use chsh_core::grid::{GridPoint, GridResults};
use chsh_core::model::TrialRecord;
use chsh_core::stats::ChshResult;

/// One analyzed grid cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellAnalysis {
    pub point: GridPoint,
    pub n_trials: usize,
    pub n_complete_trials: usize,
    /// `None` when every trial in the cell was discarded.
    pub chsh: Option<ChshResult<f64>>,
}

/// Everything `analyze` derives for one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelAnalysis {
    pub summary: Option<ModelDistributionSummary>,
    pub cells: BTreeMap<String, CellAnalysis>,
    pub order_effects: OrderEffectReport,
}

/// Estimator conventions baked into the numbers, stated in the output so
/// downstream consumers do not have to guess.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub moments: String,
    pub quantiles: String,
    pub violation_bound: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            moments: "population (no small-sample correction)".to_string(),
            quantiles: "linear interpolation at fractional rank q*(n-1)".to_string(),
            violation_bound: chsh_core::stats::CLASSICAL_BOUND,
        }
    }
}

/// The full analysis: per-model, keyed by model id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub conventions: Conventions,
    pub models: BTreeMap<String, ModelAnalysis>,
    pub n_trials: usize,
}

impl Analysis {
    /// Groups trials by model and cell and computes every derived quantity.
    /// Timestamps and call logs do not enter, so two stores holding the
    /// same trials in any order analyze identically.
    pub fn from_trials(trials: Vec<TrialRecord>) -> Self {
        let n_trials = trials.len();
        let mut by_model: BTreeMap<String, Vec<TrialRecord>> = BTreeMap::new();
        for trial in trials {
            by_model
                .entry(trial.model_id.clone())
                .or_default()
                .push(trial);
        }
        let mut models = BTreeMap::new();
        for (model_id, model_trials) in by_model {
            let results = GridResults::group(model_trials);
            let summary = summarize_model(&model_id, &results).ok();
            let order = order_effects(&results);
            let cells = results
                .cells
                .iter()
                .map(|(key, cell)| {
                    (
                        key.clone(),
                        CellAnalysis {
                            point: cell.point.clone(),
                            n_trials: cell.trials.len(),
                            n_complete_trials: cell
                                .trials
                                .iter()
                                .filter(|t| t.is_complete())
                                .count(),
                            chsh: cell.chsh,
                        },
                    )
                })
                .collect();
            models.insert(
                model_id,
                ModelAnalysis {
                    summary,
                    cells,
                    order_effects: order,
                },
            );
        }
        Self {
            conventions: Conventions::default(),
            models,
            n_trials,
        }
    }

    /// Canonical serialized form (stable key order, stable float text).
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("analysis serializes");
        out.push('\n');
        out
    }

    /// The grouped per-model grid results, rebuilt for report consumers.
    pub fn grid_results(trials: Vec<TrialRecord>) -> BTreeMap<String, GridResults> {
        let mut by_model: BTreeMap<String, Vec<TrialRecord>> = BTreeMap::new();
        for trial in trials {
            by_model
                .entry(trial.model_id.clone())
                .or_default()
                .push(trial);
        }
        by_model
            .into_iter()
            .map(|(model, trials)| (model, GridResults::group(trials)))
            .collect()
    }
}
