//! Sweep-cell vocabulary: a grid point is one (word pair, word order,
//! sampling config) cell, and grid results collect each cell's trials with
//! its CHSH measurement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{SamplingConfig, TrialRecord, WordOrder, WordPair};
use crate::stats::{chsh_literal, ChshResult};

/// Identifies one cell of the sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub pair: WordPair,
    pub order: WordOrder,
    pub sampling: SamplingConfig,
}

impl GridPoint {
    /// Canonical cell key; also the sort order of analysis output.
    pub fn key(&self) -> String {
        format!("{}|{}|{}", self.pair.key(), self.order, self.sampling.key())
    }

    pub fn matches(&self, trial: &TrialRecord) -> bool {
        trial.pair == self.pair && trial.order == self.order && trial.sampling == self.sampling
    }
}

/// One cell's trials plus its CHSH measurement. `chsh` is `None` when every
/// trial in the cell was discarded (all-zero product vectors).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub point: GridPoint,
    pub trials: Vec<TrialRecord>,
    pub chsh: Option<ChshResult<f64>>,
}

/// Map from grid point to its trials and CHSH result, keyed by
/// [`GridPoint::key`] so iteration order is deterministic.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridResults {
    pub cells: BTreeMap<String, CellResult>,
}

impl GridResults {
    /// Groups trials into cells, sorts each cell's trials by trial id (so
    /// floating-point accumulation order is reproducible regardless of the
    /// order trials were collected in), and computes each cell's CHSH
    /// result.
    pub fn group(trials: impl IntoIterator<Item = TrialRecord>) -> Self {
        let mut cells: BTreeMap<String, CellResult> = BTreeMap::new();
        for trial in trials {
            let point = GridPoint {
                pair: trial.pair.clone(),
                order: trial.order,
                sampling: trial.sampling.clone(),
            };
            cells
                .entry(point.key())
                .or_insert_with(|| CellResult {
                    point,
                    trials: Vec::new(),
                    chsh: None,
                })
                .trials
                .push(trial);
        }
        for cell in cells.values_mut() {
            cell.trials.sort_by(|a, b| a.trial_id.cmp(&b.trial_id));
            cell.chsh = chsh_literal(&cell.trials).ok();
        }
        Self { cells }
    }

    /// Per-grid-point `s_literal` values in cell-key order.
    pub fn s_values(&self) -> Vec<f64> {
        self.cells
            .values()
            .filter_map(|cell| cell.chsh.as_ref().map(|chsh| chsh.s_literal))
            .collect()
    }

    pub fn n_trials(&self) -> usize {
        self.cells.values().map(|cell| cell.trials.len()).sum()
    }
}
