//! Prompt templates for the two calls an agent receives per trial. Both are
//! config-overridable; the defaults below are what the harness ships with.

use chsh_core::model::WordSenses;

/// System message for classification calls. Classification is not a
/// measurement, so it runs under a neutral frame rather than a persona lens.
pub const CLASSIFIER_PERSONA: &str = "You are a careful annotator.";

/// Slot-bearing template for the interpretation request. `{sentence}` is
/// the rendered ambiguous sentence. The request deliberately names neither
/// word so the only ordering cue is the sentence itself.
pub const DEFAULT_INTERPRETATION_TEMPLATE: &str = "Consider the sentence: \"{sentence}\"\n\n\
In one or two short sentences, say what each ambiguous word in the sentence means in your reading.";

/// Slot-bearing template for the classification request. Slots: `{word}`,
/// `{interpretation}`, `{plus}`, `{minus}`.
pub const DEFAULT_CLASSIFIER_TEMPLATE: &str = "An assistant read a sentence containing the word \
\"{word}\" and interpreted it as follows:\n{interpretation}\n\n\
Which sense of \"{word}\" does that interpretation express? \
Reply with exactly one of the following labels and nothing else:\n\
- {plus}\n- {minus}\n- neither";

pub fn interpretation_prompt(template: Option<&str>, sentence: &str) -> String {
    template
        .unwrap_or(DEFAULT_INTERPRETATION_TEMPLATE)
        .replace("{sentence}", sentence)
}

pub fn classifier_prompt(
    template: Option<&str>,
    word: &str,
    interpretation: &str,
    senses: &WordSenses,
) -> String {
    template
        .unwrap_or(DEFAULT_CLASSIFIER_TEMPLATE)
        .replace("{word}", word)
        .replace("{interpretation}", interpretation)
        .replace("{plus}", &senses.plus)
        .replace("{minus}", &senses.minus)
}
