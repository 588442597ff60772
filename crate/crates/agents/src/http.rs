//! HTTP chat-completion backend covering the four wire dialects. Each
//! request carries the model id, a system message (the persona), one user
//! message (the prompt), and whatever sampling fields survived capability
//! gating. Credentials come from the environment variable the descriptor
//! names and are never persisted anywhere.

use async_trait::async_trait;
use reqwest::StatusCode;
use serde_json::{json, Value};

use chsh_core::model::SamplingConfig;

use crate::backend::{BackendDescriptor, BackendKind};
use crate::complete::ChatBackend;
use crate::error::AgentError;

pub struct HttpBackend {
    descriptor: BackendDescriptor,
    client: reqwest::Client,
    api_key: Option<String>,
}

impl HttpBackend {
    /// Resolves the credential (if the descriptor names one) and builds the
    /// client. A named but unset env var is an error up front.
    pub fn new(descriptor: BackendDescriptor) -> Result<Self, AgentError> {
        let api_key = match &descriptor.auth_env {
            Some(var) => {
                Some(std::env::var(var).map_err(|_| AgentError::MissingCredential(var.clone()))?)
            }
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(std::time::Duration::from_secs(120))
            .build()
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        Ok(Self {
            descriptor,
            client,
            api_key,
        })
    }

    fn url(&self) -> String {
        let base = self.descriptor.endpoint.trim_end_matches('/');
        match self.descriptor.kind {
            BackendKind::OpenaiCompatible => format!("{base}/v1/chat/completions"),
            BackendKind::OllamaCompatible => format!("{base}/api/chat"),
            BackendKind::AnthropicCompatible => format!("{base}/v1/messages"),
            BackendKind::GeminiCompatible => format!(
                "{base}/v1beta/models/{}:generateContent",
                self.descriptor.model_id
            ),
            other => unreachable!("HttpBackend does not serve {other}"),
        }
    }

    fn body(&self, persona: &str, prompt: &str, sampling: &SamplingConfig) -> Value {
        let model = &self.descriptor.model_id;
        match self.descriptor.kind {
            BackendKind::OpenaiCompatible => {
                let mut body = json!({
                    "model": model,
                    "messages": [
                        {"role": "system", "content": persona},
                        {"role": "user", "content": prompt},
                    ],
                    "max_tokens": 512,
                });
                set_if(&mut body, "temperature", sampling.temperature);
                set_if(&mut body, "top_p", sampling.top_p);
                set_if_int(&mut body, "top_k", sampling.top_k);
                body
            }
            BackendKind::OllamaCompatible => {
                let mut options = json!({});
                set_if(&mut options, "temperature", sampling.temperature);
                set_if(&mut options, "top_p", sampling.top_p);
                set_if_int(&mut options, "top_k", sampling.top_k);
                json!({
                    "model": model,
                    "messages": [
                        {"role": "system", "content": persona},
                        {"role": "user", "content": prompt},
                    ],
                    "options": options,
                    "stream": false,
                })
            }
            BackendKind::AnthropicCompatible => {
                let mut body = json!({
                    "model": model,
                    "system": persona,
                    "messages": [{"role": "user", "content": prompt}],
                    "max_tokens": 512,
                });
                set_if(&mut body, "temperature", sampling.temperature);
                set_if(&mut body, "top_p", sampling.top_p);
                set_if_int(&mut body, "top_k", sampling.top_k);
                body
            }
            BackendKind::GeminiCompatible => {
                let mut generation = json!({"maxOutputTokens": 512});
                set_if(&mut generation, "temperature", sampling.temperature);
                set_if(&mut generation, "topP", sampling.top_p);
                set_if_int(&mut generation, "topK", sampling.top_k);
                json!({
                    "system_instruction": {"parts": [{"text": persona}]},
                    "contents": [{"role": "user", "parts": [{"text": prompt}]}],
                    "generationConfig": generation,
                })
            }
            other => unreachable!("HttpBackend does not serve {other}"),
        }
    }

    fn extract_text(&self, body: &Value) -> Option<String> {
        let text = match self.descriptor.kind {
            BackendKind::OpenaiCompatible => {
                body.pointer("/choices/0/message/content")?.as_str()?
            }
            BackendKind::OllamaCompatible => body.pointer("/message/content")?.as_str()?,
            BackendKind::AnthropicCompatible => body.pointer("/content/0/text")?.as_str()?,
            BackendKind::GeminiCompatible => body
                .pointer("/candidates/0/content/parts/0/text")?
                .as_str()?,
            _ => return None,
        };
        Some(text.to_string())
    }
}

fn set_if(body: &mut Value, field: &str, value: Option<f64>) {
    if let (Some(value), Some(map)) = (value, body.as_object_mut()) {
        map.insert(field.to_string(), json!(value));
    }
}

fn set_if_int(body: &mut Value, field: &str, value: Option<u32>) {
    if let (Some(value), Some(map)) = (value, body.as_object_mut()) {
        map.insert(field.to_string(), json!(value));
    }
}

#[async_trait]
impl ChatBackend for HttpBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    async fn try_complete(
        &self,
        persona: &str,
        prompt: &str,
        sampling: &SamplingConfig,
    ) -> Result<String, AgentError> {
        let mut request = self
            .client
            .post(self.url())
            .json(&self.body(persona, prompt, sampling));
        if let Some(key) = &self.api_key {
            request = match self.descriptor.kind {
                BackendKind::AnthropicCompatible => request
                    .header("x-api-key", key)
                    .header("anthropic-version", "2023-06-01"),
                BackendKind::GeminiCompatible => request.header("x-goog-api-key", key),
                _ => request.bearer_auth(key),
            };
        }
        let response = request
            .send()
            .await
            .map_err(|e| AgentError::Transport(e.to_string()))?;
        let status = response.status();
        let body: Value = match response.json().await {
            Ok(body) => body,
            Err(e) if status.is_success() => {
                return Err(AgentError::MalformedResponse(e.to_string()))
            }
            Err(_) => Value::Null,
        };
        match status {
            StatusCode::UNAUTHORIZED | StatusCode::FORBIDDEN => {
                return Err(AgentError::Auth(format!("{status}: {body}")));
            }
            s if s.is_server_error() || s == StatusCode::TOO_MANY_REQUESTS => {
                return Err(AgentError::Transport(format!("{status}: {body}")));
            }
            s if !s.is_success() => {
                return Err(AgentError::Rejected(format!("{status}: {body}")));
            }
            _ => {}
        }
        self.extract_text(&body)
            .ok_or_else(|| AgentError::MalformedResponse(format!("no text in response: {body}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn backend(kind: BackendKind) -> HttpBackend {
        HttpBackend::new(BackendDescriptor::new(
            kind,
            "http://localhost:9",
            "model-x",
        ))
        .unwrap()
    }

    #[test]
    fn urls_per_dialect() {
        assert_eq!(
            backend(BackendKind::OpenaiCompatible).url(),
            "http://localhost:9/v1/chat/completions"
        );
        assert_eq!(
            backend(BackendKind::OllamaCompatible).url(),
            "http://localhost:9/api/chat"
        );
        assert_eq!(
            backend(BackendKind::AnthropicCompatible).url(),
            "http://localhost:9/v1/messages"
        );
        assert_eq!(
            backend(BackendKind::GeminiCompatible).url(),
            "http://localhost:9/v1beta/models/model-x:generateContent"
        );
    }

    #[test]
    fn body_carries_only_present_fields() {
        let sampling = SamplingConfig::new(Some(0.2), None, Some(10)).unwrap();
        let body = backend(BackendKind::OllamaCompatible).body("persona", "prompt", &sampling);
        assert_eq!(body["options"]["temperature"], json!(0.2));
        assert!(body["options"].get("top_p").is_none());
        assert_eq!(body["options"]["top_k"], json!(10));
        assert_eq!(body["messages"][0]["content"], json!("persona"));
        assert_eq!(body["messages"][1]["content"], json!("prompt"));
    }

    #[test]
    fn anthropic_body_has_system_and_max_tokens() {
        let sampling = SamplingConfig::new(Some(1.0), None, None).unwrap();
        let body = backend(BackendKind::AnthropicCompatible).body("persona", "prompt", &sampling);
        assert_eq!(body["system"], json!("persona"));
        assert_eq!(body["max_tokens"], json!(512));
        assert_eq!(body["temperature"], json!(1.0));
    }

    #[test]
    fn response_extraction_per_dialect() {
        let cases = [
            (
                BackendKind::OpenaiCompatible,
                json!({"choices": [{"message": {"content": "hi"}}]}),
            ),
            (
                BackendKind::OllamaCompatible,
                json!({"message": {"content": "hi"}}),
            ),
            (
                BackendKind::AnthropicCompatible,
                json!({"content": [{"type": "text", "text": "hi"}]}),
            ),
            (
                BackendKind::GeminiCompatible,
                json!({"candidates": [{"content": {"parts": [{"text": "hi"}]}}]}),
            ),
        ];
        for (kind, body) in cases {
            assert_eq!(
                backend(kind).extract_text(&body).as_deref(),
                Some("hi"),
                "{kind}"
            );
        }
        assert_eq!(
            backend(BackendKind::OpenaiCompatible).extract_text(&json!({"oops": true})),
            None
        );
    }

    #[test]
    fn missing_credential_rejected_up_front() {
        let mut descriptor =
            BackendDescriptor::new(BackendKind::OpenaiCompatible, "http://localhost:9", "m");
        descriptor.auth_env = Some("CHSH_TEST_SURELY_UNSET_VAR".into());
        match HttpBackend::new(descriptor) {
            Err(AgentError::MissingCredential(var)) => {
                assert_eq!(var, "CHSH_TEST_SURELY_UNSET_VAR");
            }
            Err(other) => panic!("unexpected error {other:?}"),
            Ok(_) => panic!("expected missing-credential error"),
        }
    }
}
