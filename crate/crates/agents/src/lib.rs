//! Uniform agent abstraction over remote chat-completion backends and local
//! synthetic agents: HTTP dialects behind one trait, a digest-pinned replay
//! backend for scripted runs, deterministic synthetic correlation sources,
//! and the capability-gated completion/classification surface.

pub mod backend;
pub mod complete;
pub mod error;
pub mod http;
pub mod prompts;
pub mod replay;
pub mod synthetic;

pub use backend::{BackendDescriptor, BackendKind, SamplingField};
pub use complete::{AgentHandle, ChatBackend, Completion};
pub use error::AgentError;
pub use replay::{prompt_digest, ReplayBackend, ReplayEntry, ReplayScript};
pub use synthetic::{
    canonical_singlet_angle, hidden_variable_outcomes, pr_box_sample, singlet_sample,
    LocalStrategy, SyntheticBackend,
};

use crate::http::HttpBackend;

/// Builds the right [`ChatBackend`] for a descriptor and wraps it in an
/// [`AgentHandle`]. Replay descriptors need a script; synthetic ones take
/// the seed that makes their responses reproducible.
pub fn build_agent(
    descriptor: BackendDescriptor,
    replay_script: Option<ReplayScript>,
    synthetic_seed: u64,
) -> Result<AgentHandle, AgentError> {
    let backend: Box<dyn ChatBackend> = match descriptor.kind {
        BackendKind::Replay => {
            let script = replay_script.unwrap_or_default();
            Box::new(ReplayBackend::new(descriptor, script))
        }
        BackendKind::Synthetic => Box::new(SyntheticBackend::new(descriptor, synthetic_seed)),
        _ => Box::new(HttpBackend::new(descriptor)?),
    };
    Ok(AgentHandle::new(backend))
}
