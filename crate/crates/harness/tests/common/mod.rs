//! Replay fixtures shared by the integration and acceptance tests.
#![allow(dead_code)] // each test crate uses a different subset

use std::sync::Arc;

use chsh_agents::prompts::{classifier_prompt, interpretation_prompt, CLASSIFIER_PERSONA};
use chsh_agents::{
    AgentHandle, BackendDescriptor, BackendKind, ReplayBackend, ReplayEntry, ReplayScript,
};
use chsh_core::model::{
    default_personas, render_sentence, Personas, SentenceTemplate, SettingLabel, WordOrder,
    WordPair, WordSenses,
};
use chsh_harness::engine::EngineOptions;

pub const REPLAY_MODEL: &str = "replay-model";

/// Word pair whose two words share the same sense labels. With it, a
/// uniform replay script (every entry answering the plus label) classifies
/// every setting to +1 no matter how concurrent calls interleave.
pub fn shared_sense_pair() -> WordPair {
    WordPair::new(
        "bank",
        "bat",
        WordSenses::new("sense alpha", "sense beta"),
        WordSenses::new("sense alpha", "sense beta"),
    )
}

/// Word pair with distinct senses per word, for digest-pinned fixtures.
pub fn distinct_sense_pair() -> WordPair {
    WordPair::new(
        "bank",
        "bat",
        WordSenses::new("financial institution", "river bank"),
        WordSenses::new("sports equipment", "flying mammal"),
    )
}

pub fn one_template() -> SentenceTemplate {
    SentenceTemplate::new("The {word1} was settled near the {word2}").unwrap()
}

pub fn replay_agent(script: ReplayScript) -> Arc<AgentHandle> {
    let descriptor = BackendDescriptor::new(BackendKind::Replay, "", REPLAY_MODEL);
    AgentHandle::new(Box::new(ReplayBackend::new(descriptor, script))).shared()
}

pub fn engine_options(
    trials_per_point: usize,
    seed: u64,
    templates: Vec<SentenceTemplate>,
) -> EngineOptions {
    EngineOptions {
        personas: default_personas(),
        templates,
        interpretation_template: None,
        trials_per_point,
        seed,
        concurrency: 4,
    }
}

/// Uniform script: `calls` unpinned entries all answering `response`.
pub fn uniform_script(response: &str, calls: usize) -> ReplayScript {
    ReplayScript::uniform(response, calls)
}

/// Digest-pinned script for the order-effect fixture: interpretations
/// depend on word order, Alice classifications follow the order (plus on
/// original, minus on flipped), Bob classifications are always plus.
/// Deterministic under any call interleaving because every entry is pinned.
pub fn asymmetric_order_script(
    pair: &WordPair,
    template: &SentenceTemplate,
    personas: &Personas,
    copies_per_request: usize,
) -> ReplayScript {
    let mut entries = Vec::new();
    for order in WordOrder::ALL {
        let sentence = render_sentence(pair, template, order);
        let prompt = interpretation_prompt(None, &sentence);
        let interp_text = match order {
            WordOrder::Original => "the canonical-order reading",
            WordOrder::Flipped => "the flipped-order reading",
        };
        for label in SettingLabel::ALL {
            for _ in 0..copies_per_request {
                entries.push(ReplayEntry::for_request(
                    personas.get(label),
                    &prompt,
                    interp_text,
                ));
            }
        }
        // Alice classifies word1: plus on original, minus on flipped.
        let alice_reply = match order {
            WordOrder::Original => pair.senses1.plus.clone(),
            WordOrder::Flipped => pair.senses1.minus.clone(),
        };
        let alice_prompt = classifier_prompt(None, &pair.word1, interp_text, &pair.senses1);
        // Bob classifies word2: always plus.
        let bob_prompt = classifier_prompt(None, &pair.word2, interp_text, &pair.senses2);
        // Two Alice settings and two Bob settings per trial share a digest.
        for _ in 0..(2 * copies_per_request) {
            entries.push(ReplayEntry::for_request(
                CLASSIFIER_PERSONA,
                &alice_prompt,
                alice_reply.clone(),
            ));
            entries.push(ReplayEntry::for_request(
                CLASSIFIER_PERSONA,
                &bob_prompt,
                pair.senses2.plus.clone(),
            ));
        }
    }
    ReplayScript::new(entries)
}
