//! The uniform completion surface over all backend kinds: capability
//! gating, rate limiting, retries with exponential backoff, and the
//! classification call that turns an interpretation into a +-1/0 outcome.

use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use async_trait::async_trait;
use tokio::sync::Mutex;
use tokio::time::Instant;

use chsh_core::model::{Outcome, OutcomeValue, SamplingConfig, WordSenses};

use crate::backend::BackendDescriptor;
use crate::error::AgentError;
use crate::prompts::classifier_prompt;

/// One completed exchange, with everything the trial record wants to keep.
#[derive(Clone, Debug, PartialEq)]
pub struct Completion {
    pub text: String,
    pub dropped_fields: Vec<String>,
    pub attempts: u32,
    pub started_ms: u64,
    pub finished_ms: u64,
}

/// A single raw completion attempt against one backend. Implementations do
/// not retry or gate sampling; [`AgentHandle`] owns that.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    fn descriptor(&self) -> &BackendDescriptor;

    async fn try_complete(
        &self,
        persona: &str,
        prompt: &str,
        sampling: &SamplingConfig,
    ) -> Result<String, AgentError>;
}

/// Spaces calls at least `1 / rate` apart.
struct RateLimiter {
    interval: Duration,
    next_slot: Mutex<Instant>,
}

impl RateLimiter {
    fn new(per_second: f64) -> Self {
        Self {
            interval: Duration::from_secs_f64(1.0 / per_second.max(1e-6)),
            next_slot: Mutex::new(Instant::now()),
        }
    }

    async fn acquire(&self) {
        let mut slot = self.next_slot.lock().await;
        let now = Instant::now();
        if *slot > now {
            tokio::time::sleep_until(*slot).await;
        }
        *slot = Instant::now().max(*slot) + self.interval;
    }
}

/// A shareable handle around one backend: enforces the descriptor's rate
/// limit and retry budget for every caller.
pub struct AgentHandle {
    backend: Box<dyn ChatBackend>,
    limiter: Option<RateLimiter>,
    backoff_base: Duration,
    classifier_template: Option<String>,
}

impl AgentHandle {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        let limiter = backend
            .descriptor()
            .rate_limit_per_sec
            .map(RateLimiter::new);
        Self {
            backend,
            limiter,
            backoff_base: Duration::from_millis(200),
            classifier_template: None,
        }
    }

    /// Shrinks the retry backoff; test-only knob.
    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    /// Overrides the classification prompt template.
    pub fn with_classifier_template(mut self, template: Option<String>) -> Self {
        self.classifier_template = template;
        self
    }

    pub fn descriptor(&self) -> &BackendDescriptor {
        self.backend.descriptor()
    }

    pub fn shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    /// The exact classification prompt [`Self::classify`] would send, for
    /// logging and for pinning replay entries.
    pub fn classification_prompt(
        &self,
        word: &str,
        interpretation: &str,
        senses: &WordSenses,
    ) -> String {
        classifier_prompt(
            self.classifier_template.as_deref(),
            word,
            interpretation,
            senses,
        )
    }

    /// Issues one persona-framed completion: gates the sampling config
    /// against the backend's capabilities (recording a warning per dropped
    /// field), respects the rate limit, and retries retryable failures up
    /// to the descriptor's retry budget with exponential backoff.
    pub async fn complete(
        &self,
        persona: &str,
        prompt: &str,
        sampling: &SamplingConfig,
    ) -> Result<Completion, AgentError> {
        let (gated, dropped_fields) = self.descriptor().gate_sampling(sampling);
        let started_ms = unix_ms();
        let max_attempts = self.descriptor().retry_budget + 1;
        let mut attempts = 0;
        loop {
            if let Some(limiter) = &self.limiter {
                limiter.acquire().await;
            }
            attempts += 1;
            match self.backend.try_complete(persona, prompt, &gated).await {
                Ok(text) => {
                    return Ok(Completion {
                        text,
                        dropped_fields,
                        attempts,
                        started_ms,
                        finished_ms: unix_ms(),
                    });
                }
                Err(err) if err.is_retryable() && attempts < max_attempts => {
                    let backoff = self.backoff_base * 2u32.saturating_pow(attempts - 1);
                    tokio::time::sleep(backoff).await;
                }
                Err(err) => {
                    return Err(match err {
                        AgentError::Transport(detail) => AgentError::BackendUnavailable {
                            attempts,
                            last_error: detail,
                        },
                        other => other,
                    });
                }
            }
        }
    }

    /// The second call: asks the same backend, at its most deterministic
    /// supported sampling, to classify an interpretation against the two
    /// predefined senses. The reply is matched case-insensitively against
    /// the two sense labels and "neither"; an unmatchable reply is retried
    /// within the same budget and finally degrades to outcome 0 instead of
    /// failing the trial.
    pub async fn classify(
        &self,
        word: &str,
        interpretation: &str,
        senses: &WordSenses,
    ) -> Result<(Outcome, Completion), AgentError> {
        let prompt = self.classification_prompt(word, interpretation, senses);
        let persona = crate::prompts::CLASSIFIER_PERSONA;
        let sampling = self.descriptor().deterministic_sampling();
        let max_rounds = self.descriptor().retry_budget + 1;
        let mut last: Option<Completion> = None;
        for _ in 0..max_rounds {
            let completion = self.complete(persona, &prompt, &sampling).await?;
            let matched = match_label(&completion.text, senses);
            let outcome_value = match matched {
                LabelMatch::Plus => Some(OutcomeValue::Plus),
                LabelMatch::Minus => Some(OutcomeValue::Minus),
                LabelMatch::Neither => Some(OutcomeValue::Null),
                LabelMatch::Unparseable => None,
            };
            if let Some(value) = outcome_value {
                let outcome = Outcome {
                    value,
                    raw_interpretation: interpretation.to_string(),
                    classification_label: matched.canonical_label(senses),
                };
                return Ok((outcome, completion));
            }
            last = Some(completion);
        }
        // Still unparseable after the budget: outcome 0, keep the raw reply.
        let completion = last.expect("at least one classification round ran");
        let outcome = Outcome {
            value: OutcomeValue::Null,
            raw_interpretation: interpretation.to_string(),
            classification_label: completion.text.clone(),
        };
        Ok((outcome, completion))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LabelMatch {
    Plus,
    Minus,
    Neither,
    Unparseable,
}

impl LabelMatch {
    fn canonical_label(self, senses: &WordSenses) -> String {
        match self {
            LabelMatch::Plus => senses.plus.clone(),
            LabelMatch::Minus => senses.minus.clone(),
            LabelMatch::Neither => "neither".to_string(),
            LabelMatch::Unparseable => String::new(),
        }
    }
}

fn normalize_reply(reply: &str) -> String {
    reply
        .trim()
        .trim_start_matches(['-', '*', '•'])
        .trim()
        .trim_matches(['"', '\'', '`', '.'])
        .to_lowercase()
}

/// Total over all reply texts: exact normalized match first, then a
/// containment scan that accepts a reply mentioning exactly one label.
fn match_label(reply: &str, senses: &WordSenses) -> LabelMatch {
    let normalized = normalize_reply(reply);
    let plus = senses.plus.to_lowercase();
    let minus = senses.minus.to_lowercase();
    if normalized == plus {
        return LabelMatch::Plus;
    }
    if normalized == minus {
        return LabelMatch::Minus;
    }
    if normalized == "neither" {
        return LabelMatch::Neither;
    }
    let candidates = [
        (LabelMatch::Plus, plus.as_str()),
        (LabelMatch::Minus, minus.as_str()),
        (LabelMatch::Neither, "neither"),
    ];
    let mut found = None;
    for (label, text) in candidates {
        if normalized.contains(text) {
            if found.is_some() {
                return LabelMatch::Unparseable;
            }
            found = Some(label);
        }
    }
    found.unwrap_or(LabelMatch::Unparseable)
}

/// Wall-clock milliseconds since the Unix epoch.
pub fn unix_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    use crate::backend::BackendKind;

    fn senses() -> WordSenses {
        WordSenses::new("financial institution", "river bank")
    }

    #[test]
    fn label_matching_covers_all_cases() {
        let s = senses();
        assert_eq!(match_label("financial institution", &s), LabelMatch::Plus);
        assert_eq!(match_label("  River Bank. ", &s), LabelMatch::Minus);
        assert_eq!(match_label("neither", &s), LabelMatch::Neither);
        assert_eq!(match_label("- Neither", &s), LabelMatch::Neither);
        assert_eq!(
            match_label("I think it is the river bank sense.", &s),
            LabelMatch::Minus
        );
        assert_eq!(
            match_label("a type of dance move", &s),
            LabelMatch::Unparseable
        );
        assert_eq!(match_label("", &s), LabelMatch::Unparseable);
        // Mentioning two labels is ambiguous, not a match.
        assert_eq!(
            match_label("financial institution or river bank", &s),
            LabelMatch::Unparseable
        );
    }

    struct FlakyBackend {
        descriptor: BackendDescriptor,
        calls: AtomicU32,
        fail_first: u32,
    }

    #[async_trait]
    impl ChatBackend for FlakyBackend {
        fn descriptor(&self) -> &BackendDescriptor {
            &self.descriptor
        }

        async fn try_complete(
            &self,
            _persona: &str,
            _prompt: &str,
            _sampling: &SamplingConfig,
        ) -> Result<String, AgentError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            if call < self.fail_first {
                Err(AgentError::Transport("connection refused".into()))
            } else {
                Ok("financial institution".into())
            }
        }
    }

    fn flaky(fail_first: u32, retry_budget: u32) -> AgentHandle {
        let mut descriptor =
            BackendDescriptor::new(BackendKind::OllamaCompatible, "http://nowhere", "m");
        descriptor.retry_budget = retry_budget;
        AgentHandle::new(Box::new(FlakyBackend {
            descriptor,
            calls: AtomicU32::new(0),
            fail_first,
        }))
        .with_backoff(Duration::from_millis(1))
    }

    struct CapturingBackend {
        descriptor: BackendDescriptor,
        seen: Arc<std::sync::Mutex<Vec<SamplingConfig>>>,
    }

    #[async_trait]
    impl ChatBackend for CapturingBackend {
        fn descriptor(&self) -> &BackendDescriptor {
            &self.descriptor
        }

        async fn try_complete(
            &self,
            _persona: &str,
            _prompt: &str,
            sampling: &SamplingConfig,
        ) -> Result<String, AgentError> {
            self.seen.lock().unwrap().push(sampling.clone());
            Ok("ok".into())
        }
    }

    #[tokio::test]
    async fn unsupported_fields_never_reach_the_backend() {
        let descriptor = BackendDescriptor::new(
            BackendKind::AnthropicCompatible,
            "https://api.example.com",
            "m",
        );
        let seen = Arc::new(std::sync::Mutex::new(Vec::new()));
        let handle = AgentHandle::new(Box::new(CapturingBackend {
            descriptor,
            seen: Arc::clone(&seen),
        }));
        let requested = SamplingConfig::new(Some(1.8), Some(1.0), Some(100)).unwrap();
        let completion = handle.complete("p", "q", &requested).await.unwrap();
        assert_eq!(completion.dropped_fields.len(), 2);

        // The backend saw only the supported field.
        let seen = seen.lock().unwrap();
        assert_eq!(seen.len(), 1);
        assert_eq!(seen[0].temperature, Some(1.8));
        assert_eq!(seen[0].top_p, None);
        assert_eq!(seen[0].top_k, None);
    }

    #[tokio::test]
    async fn unreachable_backend_fails_after_budget() {
        let handle = flaky(u32::MAX, 2);
        let err = handle
            .complete("p", "q", &SamplingConfig::backend_default())
            .await
            .unwrap_err();
        match err {
            AgentError::BackendUnavailable { attempts, .. } => assert_eq!(attempts, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[tokio::test]
    async fn transient_failures_are_retried() {
        let handle = flaky(2, 2);
        let completion = handle
            .complete("p", "q", &SamplingConfig::backend_default())
            .await
            .unwrap();
        assert_eq!(completion.attempts, 3);
        assert_eq!(completion.text, "financial institution");
    }

    #[tokio::test]
    async fn classify_resolves_plus() {
        let handle = flaky(0, 2);
        let (outcome, _) = handle
            .classify("bank", "a place that holds deposits", &senses())
            .await
            .unwrap();
        assert_eq!(outcome.value, OutcomeValue::Plus);
        assert_eq!(outcome.classification_label, "financial institution");
        assert_eq!(outcome.raw_interpretation, "a place that holds deposits");
    }

    struct BabbleBackend {
        descriptor: BackendDescriptor,
        calls: AtomicU32,
    }

    #[async_trait]
    impl ChatBackend for BabbleBackend {
        fn descriptor(&self) -> &BackendDescriptor {
            &self.descriptor
        }

        async fn try_complete(
            &self,
            _persona: &str,
            _prompt: &str,
            _sampling: &SamplingConfig,
        ) -> Result<String, AgentError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok("a type of dance move".into())
        }
    }

    #[tokio::test]
    async fn classify_degrades_to_null_after_retries() {
        let mut descriptor =
            BackendDescriptor::new(BackendKind::OllamaCompatible, "http://nowhere", "m");
        descriptor.retry_budget = 1;
        let backend = BabbleBackend {
            descriptor,
            calls: AtomicU32::new(0),
        };
        let handle = AgentHandle::new(Box::new(backend)).with_backoff(Duration::from_millis(1));
        let (outcome, _) = handle
            .classify("bank", "whatever", &senses())
            .await
            .unwrap();
        assert_eq!(outcome.value, OutcomeValue::Null);
        assert_eq!(outcome.classification_label, "a type of dance move");
    }

    #[tokio::test]
    async fn rate_limiter_spaces_calls() {
        let mut descriptor =
            BackendDescriptor::new(BackendKind::OllamaCompatible, "http://nowhere", "m");
        descriptor.rate_limit_per_sec = Some(50.0); // 20ms spacing
        let handle = AgentHandle::new(Box::new(FlakyBackend {
            descriptor,
            calls: AtomicU32::new(0),
            fail_first: 0,
        }));
        let start = std::time::Instant::now();
        for _ in 0..4 {
            handle
                .complete("p", "q", &SamplingConfig::backend_default())
                .await
                .unwrap();
        }
        assert!(
            start.elapsed() >= Duration::from_millis(55),
            "{:?}",
            start.elapsed()
        );
    }
}
