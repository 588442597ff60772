//! Scripted replay backend. A script is an ordered list of entries, each
//! optionally pinned to the digest of the request it answers; a request
//! consumes the first unconsumed entry whose pin matches (unpinned entries
//! match anything). Running out of matching entries is an error, which is
//! what makes replay fixtures verify call counts for free.

use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use chsh_core::model::SamplingConfig;

use crate::backend::{BackendDescriptor, BackendKind};
use crate::complete::ChatBackend;
use crate::error::AgentError;

/// Digest identifying one (persona, prompt) request for script pinning.
pub fn prompt_digest(persona: &str, prompt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(persona.as_bytes());
    hasher.update([0x1f]);
    hasher.update(prompt.as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    /// Expected request digest; `None` answers any request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub response: String,
}

impl ReplayEntry {
    pub fn any(response: impl Into<String>) -> Self {
        Self {
            digest: None,
            response: response.into(),
        }
    }

    pub fn pinned(digest: impl Into<String>, response: impl Into<String>) -> Self {
        Self {
            digest: Some(digest.into()),
            response: response.into(),
        }
    }

    /// Entry pinned to the given (persona, prompt) request.
    pub fn for_request(persona: &str, prompt: &str, response: impl Into<String>) -> Self {
        Self::pinned(prompt_digest(persona, prompt), response)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayScript {
    pub entries: Vec<ReplayEntry>,
}

impl ReplayScript {
    pub fn new(entries: Vec<ReplayEntry>) -> Self {
        Self { entries }
    }

    /// `count` unpinned copies of one response.
    pub fn uniform(response: impl Into<String>, count: usize) -> Self {
        let response = response.into();
        Self {
            entries: (0..count)
                .map(|_| ReplayEntry::any(response.clone()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub struct ReplayBackend {
    descriptor: BackendDescriptor,
    // None marks a consumed entry; matching scans front to back.
    entries: Mutex<Vec<Option<ReplayEntry>>>,
}

impl ReplayBackend {
    pub fn new(mut descriptor: BackendDescriptor, script: ReplayScript) -> Self {
        descriptor.kind = BackendKind::Replay;
        Self {
            descriptor,
            entries: Mutex::new(script.entries.into_iter().map(Some).collect()),
        }
    }

    /// Entries not yet consumed.
    pub fn remaining(&self) -> usize {
        self.entries
            .lock()
            .expect("replay mutex")
            .iter()
            .filter(|entry| entry.is_some())
            .count()
    }
}

#[async_trait]
impl ChatBackend for ReplayBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    async fn try_complete(
        &self,
        persona: &str,
        prompt: &str,
        _sampling: &SamplingConfig,
    ) -> Result<String, AgentError> {
        let digest = prompt_digest(persona, prompt);
        let mut entries = self.entries.lock().expect("replay mutex");
        for slot in entries.iter_mut() {
            let matches = slot
                .as_ref()
                .is_some_and(|entry| entry.digest.as_deref().is_none_or(|d| d == digest));
            if matches {
                let entry = slot.take().expect("matched entry present");
                return Ok(entry.response);
            }
        }
        Err(AgentError::ScriptExhausted { digest })
    }
}
