//! Backend descriptors and sampling-capability gating.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use chsh_core::model::SamplingConfig;

/// What speaks on the other end of [`crate::complete`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// OpenAI-style `/v1/chat/completions` (also vLLM, LM Studio, ...).
    OpenaiCompatible,
    /// Ollama `/api/chat`.
    OllamaCompatible,
    /// Anthropic `/v1/messages`.
    AnthropicCompatible,
    /// Gemini `generateContent`.
    GeminiCompatible,
    /// Scripted responses consumed from a [`crate::replay::ReplayScript`].
    Replay,
    /// Deterministic offline responder seeded per request.
    Synthetic,
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BackendKind::OpenaiCompatible => "openai_compatible",
            BackendKind::OllamaCompatible => "ollama_compatible",
            BackendKind::AnthropicCompatible => "anthropic_compatible",
            BackendKind::GeminiCompatible => "gemini_compatible",
            BackendKind::Replay => "replay",
            BackendKind::Synthetic => "synthetic",
        };
        write!(f, "{name}")
    }
}

/// One optional sampling knob a backend may or may not accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingField {
    Temperature,
    TopP,
    TopK,
}

impl fmt::Display for SamplingField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SamplingField::Temperature => "temperature",
            SamplingField::TopP => "top_p",
            SamplingField::TopK => "top_k",
        };
        write!(f, "{name}")
    }
}

/// Everything needed to reach (or build) one backend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: String,
    pub model_id: String,
    /// Name of the environment variable holding the credential; the value
    /// itself is never persisted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    /// Sampling fields this backend accepts; anything else is dropped with
    /// a recorded warning.
    #[serde(default = "full_capabilities")]
    pub capabilities: BTreeSet<SamplingField>,
    /// Requests per second; `None` means unthrottled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_limit_per_sec: Option<f64>,
    /// Extra attempts after the first failed call.
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
}

fn full_capabilities() -> BTreeSet<SamplingField> {
    [
        SamplingField::Temperature,
        SamplingField::TopP,
        SamplingField::TopK,
    ]
    .into_iter()
    .collect()
}

fn default_retry_budget() -> u32 {
    2
}

impl BackendDescriptor {
    pub fn new(
        kind: BackendKind,
        endpoint: impl Into<String>,
        model_id: impl Into<String>,
    ) -> Self {
        Self {
            kind,
            endpoint: endpoint.into(),
            model_id: model_id.into(),
            auth_env: None,
            capabilities: Self::default_capabilities(kind),
            rate_limit_per_sec: None,
            retry_budget: default_retry_budget(),
        }
    }

    /// What each kind accepts out of the box. The Anthropic API restricts
    /// simultaneous sampling-parameter specification, so only temperature
    /// passes by default there; the OpenAI chat API has no top-k at all.
    pub fn default_capabilities(kind: BackendKind) -> BTreeSet<SamplingField> {
        match kind {
            BackendKind::AnthropicCompatible => [SamplingField::Temperature].into_iter().collect(),
            BackendKind::OpenaiCompatible => [SamplingField::Temperature, SamplingField::TopP]
                .into_iter()
                .collect(),
            _ => full_capabilities(),
        }
    }

    /// Drops requested sampling fields the backend does not support,
    /// returning the gated config and one warning per dropped field.
    pub fn gate_sampling(&self, requested: &SamplingConfig) -> (SamplingConfig, Vec<String>) {
        let mut gated = requested.clone();
        let mut dropped = Vec::new();
        if gated.temperature.is_some() && !self.capabilities.contains(&SamplingField::Temperature) {
            gated.temperature = None;
            dropped.push(format!(
                "temperature unsupported by {} backend, dropped",
                self.kind
            ));
        }
        if gated.top_p.is_some() && !self.capabilities.contains(&SamplingField::TopP) {
            gated.top_p = None;
            dropped.push(format!(
                "top_p unsupported by {} backend, dropped",
                self.kind
            ));
        }
        if gated.top_k.is_some() && !self.capabilities.contains(&SamplingField::TopK) {
            gated.top_k = None;
            dropped.push(format!(
                "top_k unsupported by {} backend, dropped",
                self.kind
            ));
        }
        (gated, dropped)
    }

    /// The most deterministic sampling config this backend supports: used
    /// for classification calls.
    pub fn deterministic_sampling(&self) -> SamplingConfig {
        let mut config = SamplingConfig::backend_default();
        if self.capabilities.contains(&SamplingField::Temperature) {
            config.temperature = Some(0.0);
        }
        config
    }
}
