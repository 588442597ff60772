use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("backend unavailable after {attempts} attempts: {last_error}")]
    BackendUnavailable { attempts: u32, last_error: String },
    #[error("credentials rejected: {0}")]
    Auth(String),
    #[error("credential env var {0} is not set")]
    MissingCredential(String),
    #[error("replay script exhausted (no entry for request digest {digest})")]
    ScriptExhausted { digest: String },
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend rejected the request: {0}")]
    Rejected(String),
}

impl AgentError {
    /// Whether another attempt could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            AgentError::Transport(_) | AgentError::MalformedResponse(_)
        )
    }
}
