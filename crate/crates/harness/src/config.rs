//! Run configuration: one human-editable TOML tree holding the backend
//! descriptor, lexicon, templates, personas, sweep grid, and run knobs.
//! Everything except the backend has a default mirroring the standard
//! protocol constants, so a minimal config is just a `[backend]` block.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use chsh_agents::{BackendDescriptor, BackendKind, ReplayScript, SamplingField};
use chsh_core::analysis::BenchmarkTable;
use chsh_core::model::{
    default_grid, default_lexicon, default_personas, default_templates, validate_lexicon, Personas,
    SamplingConfig, SentenceTemplate, WordPair,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Backend block: the descriptor fields plus backend-local extras.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: String,
    pub model_id: String,
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Omitted: the kind's default capability set.
    #[serde(default)]
    pub capabilities: Option<BTreeSet<SamplingField>>,
    #[serde(default)]
    pub rate_limit_per_sec: Option<f64>,
    #[serde(default)]
    pub retry_budget: Option<u32>,
    /// Replay backends: path to a JSONL file of replay entries.
    #[serde(default)]
    pub script: Option<PathBuf>,
    /// Synthetic backends: response seed.
    #[serde(default)]
    pub synthetic_seed: Option<u64>,
}

impl BackendConfig {
    pub fn descriptor(&self) -> BackendDescriptor {
        let mut descriptor =
            BackendDescriptor::new(self.kind, self.endpoint.clone(), self.model_id.clone());
        descriptor.auth_env = self.auth_env.clone();
        if let Some(capabilities) = &self.capabilities {
            descriptor.capabilities = capabilities.clone();
        }
        descriptor.rate_limit_per_sec = self.rate_limit_per_sec;
        if let Some(budget) = self.retry_budget {
            descriptor.retry_budget = budget;
        }
        descriptor
    }

    /// Loads the replay script named by `script`, resolving relative paths
    /// against the config file's directory.
    pub fn load_script(&self, config_dir: &Path) -> Result<Option<ReplayScript>, ConfigError> {
        let Some(script_path) = &self.script else {
            return Ok(None);
        };
        let resolved = if script_path.is_absolute() {
            script_path.clone()
        } else {
            config_dir.join(script_path)
        };
        let text = std::fs::read_to_string(&resolved).map_err(|source| ConfigError::Io {
            path: resolved.clone(),
            source,
        })?;
        let mut entries = Vec::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry = serde_json::from_str(line).map_err(|e| {
                ConfigError::Invalid(format!(
                    "replay script {} line {}: {e}",
                    resolved.display(),
                    index + 1
                ))
            })?;
            entries.push(entry);
        }
        Ok(Some(ReplayScript::new(entries)))
    }
}

/// The sweep grid as axes (the usual case) or explicit points.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(default)]
    pub temperatures: Vec<f64>,
    #[serde(default)]
    pub top_p: Vec<f64>,
    #[serde(default)]
    pub top_k: Vec<u32>,
    /// Explicit grid points; when nonempty this wins over the axes.
    #[serde(default)]
    pub points: Vec<SamplingConfig>,
}

impl GridSpec {
    pub fn expand(&self) -> Result<Vec<SamplingConfig>, ConfigError> {
        if !self.points.is_empty() {
            for point in &self.points {
                point
                    .check()
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
            }
            return Ok(self.points.clone());
        }
        if self.temperatures.is_empty() && self.top_p.is_empty() && self.top_k.is_empty() {
            return Ok(default_grid());
        }
        let mut grid = Vec::new();
        for &temperature in &self.temperatures {
            for &top_p in &self.top_p {
                for &top_k in &self.top_k {
                    grid.push(
                        SamplingConfig::new(Some(temperature), Some(top_p), Some(top_k))
                            .map_err(|e| ConfigError::Invalid(e.to_string()))?,
                    );
                }
            }
        }
        if grid.is_empty() {
            return Err(ConfigError::Invalid(
                "grid axes given but their product is empty".into(),
            ));
        }
        Ok(grid)
    }
}

/// Prompt template overrides.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PromptConfig {
    #[serde(default)]
    pub interpretation: Option<String>,
    #[serde(default)]
    pub classifier: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub backend: BackendConfig,
    #[serde(default = "default_lexicon")]
    pub lexicon: Vec<WordPair>,
    #[serde(default = "default_templates")]
    pub templates: Vec<SentenceTemplate>,
    #[serde(default = "default_personas")]
    pub personas: Personas,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_trials_per_point")]
    pub trials_per_point: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_concurrency")]
    pub concurrency: usize,
    /// Path to the benchmark score table, resolved like `backend.script`.
    #[serde(default)]
    pub benchmarks: Option<PathBuf>,
    #[serde(default)]
    pub prompts: PromptConfig,
}

fn default_trials_per_point() -> usize {
    10
}

fn default_concurrency() -> usize {
    4
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        config.validate()?;
        let dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((config, dir))
    }

    /// Checks every cross-field invariant a run depends on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let report = validate_lexicon(&self.lexicon);
        if !report.is_ok() {
            let mut lines = Vec::new();
            for violation in &report.violations {
                lines.push(format!(
                    "lexicon[{}] ({}): {}",
                    violation.index, violation.pair, violation.reason
                ));
            }
            return Err(ConfigError::Invalid(lines.join("; ")));
        }
        if self.lexicon.is_empty() {
            return Err(ConfigError::Invalid("lexicon is empty".into()));
        }
        if self.templates.is_empty() {
            return Err(ConfigError::Invalid("templates is empty".into()));
        }
        for persona in [
            &self.personas.a,
            &self.personas.a_prime,
            &self.personas.b,
            &self.personas.b_prime,
        ] {
            if persona.trim().is_empty() {
                return Err(ConfigError::Invalid("empty persona text".into()));
            }
        }
        if self.trials_per_point == 0 {
            return Err(ConfigError::Invalid("trials_per_point must be >= 1".into()));
        }
        if self.concurrency == 0 {
            return Err(ConfigError::Invalid("concurrency must be >= 1".into()));
        }
        self.grid.expand().map(|_| ())
    }

    /// Loads the benchmark table if one is configured.
    pub fn load_benchmarks(
        &self,
        config_dir: &Path,
    ) -> Result<Option<BenchmarkTable>, ConfigError> {
        let Some(bench_path) = &self.benchmarks else {
            return Ok(None);
        };
        let resolved = if bench_path.is_absolute() {
            bench_path.clone()
        } else {
            config_dir.join(bench_path)
        };
        let text = std::fs::read_to_string(&resolved).map_err(|source| ConfigError::Io {
            path: resolved.clone(),
            source,
        })?;
        let table: BenchmarkTable = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: resolved.clone(),
            source,
        })?;
        for (model, scores) in &table.models {
            if !scores.any_present() {
                return Err(ConfigError::Invalid(format!(
                    "benchmark table entry {model} has no scores"
                )));
            }
        }
        Ok(Some(table))
    }
}
