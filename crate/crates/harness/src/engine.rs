//! The protocol engine: runs complete semantic Bell trials and grid sweeps.
//!
//! A trial dispatches four persona-framed agents concurrently, each with
//! the same rendered sentence and no shared conversation state, classifies
//! each interpretation (Alice settings against word1's senses, Bob settings
//! against word2's), encodes the +-1/0 outcomes, and persists the record
//! before returning. A sweep walks every (pair, order, sampling) cell in
//! deterministic order with bounded parallelism; per-trial seeds and ids
//! derive from a hash of (seed, cell, index), so any cell reproduces in
//! isolation and an interrupted sweep resumes by skipping the trial ids the
//! store already holds.

use std::collections::BTreeSet;
use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use chsh_agents::prompts::{interpretation_prompt, CLASSIFIER_PERSONA};
use chsh_agents::{AgentError, AgentHandle, Completion};
use chsh_core::grid::{GridPoint, GridResults};
use chsh_core::model::{
    render_sentence, AgentCall, Outcome, OutcomeValue, Personas, SamplingConfig, SentenceTemplate,
    SettingCalls, SettingLabel, TrialRecord, WordOrder, WordPair,
};

use crate::store::{load_store, AttemptLog, ParseMode, StoreError, TrialFilter, TrialStore};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("all four interpretation calls failed (trial {trial_id}): {last_error}")]
    TrialFailed {
        trial_id: String,
        last_error: String,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("sweep needs a nonempty grid")]
    EmptyGrid,
    #[error("sweep needs a nonempty lexicon")]
    EmptyLexicon,
    #[error("no templates configured")]
    NoTemplates,
}

/// Sweep-wide knobs; everything per-trial derives from these.
#[derive(Clone)]
pub struct EngineOptions {
    pub personas: Personas,
    pub templates: Vec<SentenceTemplate>,
    pub interpretation_template: Option<String>,
    pub trials_per_point: usize,
    pub seed: u64,
    pub concurrency: usize,
}

/// Line-oriented progress events; the CLI serializes them to stderr.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ProgressEvent {
    SweepStart {
        cells: usize,
        trials_per_point: usize,
        already_stored: usize,
    },
    TrialDone {
        trial_id: String,
        cell_key: String,
        complete: bool,
    },
    TrialFailed {
        trial_id: String,
        cell_key: String,
        error: String,
    },
    SweepDone {
        attempted: usize,
        persisted: usize,
        failed: usize,
        skipped_existing: usize,
    },
}

pub type ProgressSink = Arc<dyn Fn(&ProgressEvent) + Send + Sync>;

/// What a sweep did, with the grouped results reloaded from the store.
#[derive(Debug)]
pub struct SweepOutcome {
    pub attempted: usize,
    pub persisted: usize,
    pub failed: usize,
    pub skipped_existing: usize,
    pub results: GridResults,
}

/// Stable per-trial seed: hash of (sweep seed, cell, index).
pub fn trial_seed(sweep_seed: u64, cell_key: &str, index: usize) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"seed");
    hasher.update(sweep_seed.to_le_bytes());
    hasher.update(cell_key.as_bytes());
    hasher.update((index as u64).to_le_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Stable trial id: hash of (model, cell, index, sweep seed). Identical
/// across reruns, which is what makes resume idempotent.
pub fn trial_id(model_id: &str, cell_key: &str, index: usize, sweep_seed: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"trial");
    hasher.update(model_id.as_bytes());
    hasher.update([0x1f]);
    hasher.update(cell_key.as_bytes());
    hasher.update((index as u64).to_le_bytes());
    hasher.update(sweep_seed.to_le_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Seeded template choice for one trial.
pub fn pick_template(templates: &[SentenceTemplate], seed: u64) -> &SentenceTemplate {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    &templates[rng.gen_range(0..templates.len())]
}

/// Everything one trial needs.
#[derive(Clone)]
pub struct TrialSpec {
    pub trial_id: String,
    pub model_id: String,
    pub pair: WordPair,
    pub template: SentenceTemplate,
    pub order: WordOrder,
    pub sampling: SamplingConfig,
    pub seed: u64,
    pub personas: Personas,
    pub interpretation_template: Option<String>,
}

impl TrialSpec {
    pub fn cell_key(&self) -> String {
        GridPoint {
            pair: self.pair.clone(),
            order: self.order,
            sampling: self.sampling.clone(),
        }
        .key()
    }
}

fn call_from_completion(persona: &str, prompt: &str, completion: &Completion) -> AgentCall {
    AgentCall {
        persona: persona.to_string(),
        prompt: prompt.to_string(),
        response: completion.text.clone(),
        dropped_fields: completion.dropped_fields.clone(),
        attempts: completion.attempts,
        started_ms: completion.started_ms,
        finished_ms: completion.finished_ms,
        error: None,
    }
}

fn call_from_error(persona: &str, prompt: &str, error: &AgentError) -> AgentCall {
    let now = chsh_agents::complete::unix_ms();
    AgentCall {
        persona: persona.to_string(),
        prompt: prompt.to_string(),
        response: String::new(),
        dropped_fields: Vec::new(),
        attempts: match error {
            AgentError::BackendUnavailable { attempts, .. } => *attempts,
            _ => 1,
        },
        started_ms: now,
        finished_ms: now,
        error: Some(error.to_string()),
    }
}

fn null_outcome() -> Outcome {
    Outcome {
        value: OutcomeValue::Null,
        raw_interpretation: String::new(),
        classification_label: String::new(),
    }
}

/// Runs one four-agent trial and persists it before returning. Fails only
/// when every interpretation call failed; anything less becomes a partial
/// trial with 0 outcomes. The failed-trial attempt log is persisted too.
pub async fn run_trial(
    agent: &AgentHandle,
    store: &TrialStore,
    spec: TrialSpec,
) -> Result<TrialRecord, EngineError> {
    let sentence = render_sentence(&spec.pair, &spec.template, spec.order);
    let prompt = interpretation_prompt(spec.interpretation_template.as_deref(), &sentence);

    let setting_runs = SettingLabel::ALL.map(|label| {
        let persona = spec.personas.get(label).to_string();
        let prompt = prompt.clone();
        let word = spec.pair.word_for(label.party()).to_string();
        let senses = spec.pair.senses_for(label.party()).clone();
        let sampling = spec.sampling.clone();
        async move {
            let interpret = agent.complete(&persona, &prompt, &sampling).await;
            match interpret {
                Ok(completion) => {
                    let interpret_call = call_from_completion(&persona, &prompt, &completion);
                    let classify_prompt =
                        agent.classification_prompt(&word, &completion.text, &senses);
                    match agent.classify(&word, &completion.text, &senses).await {
                        Ok((outcome, classification)) => {
                            let classify_call = call_from_completion(
                                CLASSIFIER_PERSONA,
                                &classify_prompt,
                                &classification,
                            );
                            (
                                label,
                                outcome,
                                SettingCalls {
                                    interpret: interpret_call,
                                    classify: Some(classify_call),
                                },
                                true,
                            )
                        }
                        Err(err) => {
                            // Classification failure degrades the outcome to
                            // 0; the trial stays alive.
                            let classify_call =
                                call_from_error(CLASSIFIER_PERSONA, &classify_prompt, &err);
                            let outcome = Outcome {
                                value: OutcomeValue::Null,
                                raw_interpretation: completion.text.clone(),
                                classification_label: String::new(),
                            };
                            (
                                label,
                                outcome,
                                SettingCalls {
                                    interpret: interpret_call,
                                    classify: Some(classify_call),
                                },
                                true,
                            )
                        }
                    }
                }
                Err(err) => {
                    let interpret_call = call_from_error(&persona, &prompt, &err);
                    (
                        label,
                        null_outcome(),
                        SettingCalls {
                            interpret: interpret_call,
                            classify: None,
                        },
                        false,
                    )
                }
            }
        }
    });

    let settled = futures::future::join_all(setting_runs).await;
    let any_interpreted = settled.iter().any(|(_, _, _, ok)| *ok);
    if !any_interpreted {
        let last_error = settled
            .iter()
            .filter_map(|(_, _, calls, _)| calls.interpret.error.clone())
            .next_back()
            .unwrap_or_else(|| "unknown".into());
        store.append_attempt(&AttemptLog {
            trial_id: spec.trial_id.clone(),
            model_id: spec.model_id.clone(),
            cell_key: spec.cell_key(),
            error: last_error.clone(),
            timestamp_ms: chsh_agents::complete::unix_ms(),
        })?;
        return Err(EngineError::TrialFailed {
            trial_id: spec.trial_id,
            last_error,
        });
    }

    let mut outcomes = std::collections::BTreeMap::new();
    let mut calls = std::collections::BTreeMap::new();
    for (label, outcome, setting_calls, _) in settled {
        outcomes.insert(label, outcome);
        calls.insert(label, setting_calls);
    }
    let record = TrialRecord {
        trial_id: spec.trial_id.clone(),
        model_id: spec.model_id.clone(),
        pair: spec.pair.clone(),
        template: spec.template.clone(),
        order: spec.order,
        sampling: spec.sampling.clone(),
        seed: spec.seed,
        outcomes,
        calls,
    };
    store.append_trial(&record)?;
    Ok(record)
}

/// Sweeps every (pair, order, sampling) cell, attempting exactly
/// `trials_per_point` trials per cell. Trials already persisted (by id)
/// count toward a cell and are not rerun.
pub async fn run_grid(
    agent: Arc<AgentHandle>,
    store: Arc<TrialStore>,
    pairs: &[WordPair],
    orders: &[WordOrder],
    grid: &[SamplingConfig],
    options: &EngineOptions,
    progress: Option<ProgressSink>,
) -> Result<SweepOutcome, EngineError> {
    if grid.is_empty() {
        return Err(EngineError::EmptyGrid);
    }
    if pairs.is_empty() || orders.is_empty() {
        return Err(EngineError::EmptyLexicon);
    }
    if options.templates.is_empty() {
        return Err(EngineError::NoTemplates);
    }

    let model_id = agent.descriptor().model_id.clone();
    let existing: BTreeSet<String> = load_store(
        store.path(),
        ParseMode::Lenient,
        &TrialFilter {
            model_id: Some(model_id.clone()),
            ..Default::default()
        },
    )?
    .trials
    .into_iter()
    .map(|t| t.trial_id)
    .collect();

    let mut specs = Vec::new();
    let mut skipped_existing = 0usize;
    let mut cells = 0usize;
    for pair in pairs {
        for &order in orders {
            for sampling in grid {
                cells += 1;
                let cell_key = GridPoint {
                    pair: pair.clone(),
                    order,
                    sampling: sampling.clone(),
                }
                .key();
                for index in 0..options.trials_per_point {
                    let id = trial_id(&model_id, &cell_key, index, options.seed);
                    if existing.contains(&id) {
                        skipped_existing += 1;
                        continue;
                    }
                    let seed = trial_seed(options.seed, &cell_key, index);
                    let template = pick_template(&options.templates, seed).clone();
                    specs.push(TrialSpec {
                        trial_id: id,
                        model_id: model_id.clone(),
                        pair: pair.clone(),
                        template,
                        order,
                        sampling: sampling.clone(),
                        seed,
                        personas: options.personas.clone(),
                        interpretation_template: options.interpretation_template.clone(),
                    });
                }
            }
        }
    }

    if let Some(sink) = &progress {
        sink(&ProgressEvent::SweepStart {
            cells,
            trials_per_point: options.trials_per_point,
            already_stored: skipped_existing,
        });
    }

    let attempted = specs.len();
    let results: Vec<Result<bool, EngineError>> = stream::iter(specs)
        .map(|spec| {
            let agent = Arc::clone(&agent);
            let store = Arc::clone(&store);
            let progress = progress.clone();
            async move {
                let trial_id = spec.trial_id.clone();
                let cell_key = spec.cell_key();
                match run_trial(&agent, &store, spec).await {
                    Ok(record) => {
                        if let Some(sink) = &progress {
                            sink(&ProgressEvent::TrialDone {
                                trial_id,
                                cell_key,
                                complete: record.is_complete(),
                            });
                        }
                        Ok(true)
                    }
                    Err(EngineError::TrialFailed { last_error, .. }) => {
                        if let Some(sink) = &progress {
                            sink(&ProgressEvent::TrialFailed {
                                trial_id,
                                cell_key,
                                error: last_error,
                            });
                        }
                        Ok(false)
                    }
                    Err(fatal) => Err(fatal),
                }
            }
        })
        .buffer_unordered(options.concurrency.max(1))
        .collect()
        .await;

    let mut persisted = 0usize;
    let mut failed = 0usize;
    for result in results {
        if result? {
            persisted += 1;
        } else {
            failed += 1;
        }
    }

    if let Some(sink) = &progress {
        sink(&ProgressEvent::SweepDone {
            attempted,
            persisted,
            failed,
            skipped_existing,
        });
    }

    let stored = load_store(
        store.path(),
        ParseMode::Lenient,
        &TrialFilter {
            model_id: Some(model_id),
            ..Default::default()
        },
    )?;
    Ok(SweepOutcome {
        attempted,
        persisted,
        failed,
        skipped_existing,
        results: GridResults::group(stored.trials),
    })
}
