//! Domain vocabulary shared by every part of the harness: ambiguous word
//! pairs with their two predefined senses, sentence templates, measurement
//! settings (persona lenses), sampling configurations, trial outcomes and
//! complete trial records.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const WORD1_SLOT: &str = "{word1}";
const WORD2_SLOT: &str = "{word2}";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed template {pattern:?}: {reason}")]
    MalformedTemplate { pattern: String, reason: String },
    #[error("invalid sampling config: {0}")]
    InvalidSampling(String),
}

/// The two predefined senses of one ambiguous word. `plus` maps to outcome
/// +1 ("meaning A"), `minus` to outcome -1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordSenses {
    pub plus: String,
    pub minus: String,
}

impl WordSenses {
    pub fn new(plus: impl Into<String>, minus: impl Into<String>) -> Self {
        Self {
            plus: plus.into(),
            minus: minus.into(),
        }
    }
}

/// An ambiguous word pair. Alice's outcomes derive from `word1`, Bob's from
/// `word2`; each word carries its own pair of predefined senses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordPair {
    pub word1: String,
    pub word2: String,
    pub senses1: WordSenses,
    pub senses2: WordSenses,
}

impl WordPair {
    pub fn new(
        word1: impl Into<String>,
        word2: impl Into<String>,
        senses1: WordSenses,
        senses2: WordSenses,
    ) -> Self {
        Self {
            word1: word1.into(),
            word2: word2.into(),
            senses1,
            senses2,
        }
    }

    /// Stable identity used for grouping and for store filters.
    pub fn key(&self) -> String {
        format!("{}/{}", self.word1, self.word2)
    }

    pub fn word_for(&self, party: Party) -> &str {
        match party {
            Party::Alice => &self.word1,
            Party::Bob => &self.word2,
        }
    }

    pub fn senses_for(&self, party: Party) -> &WordSenses {
        match party {
            Party::Alice => &self.senses1,
            Party::Bob => &self.senses2,
        }
    }

    /// Checks the pair invariants, collecting every violation.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.word1 == self.word2 {
            out.push("word1 and word2 must differ".to_string());
        }
        for (word, senses) in [("word1", &self.senses1), ("word2", &self.senses2)] {
            if senses.plus.trim().is_empty() || senses.minus.trim().is_empty() {
                out.push(format!("{word}: empty sense label"));
            }
            if senses.plus == senses.minus {
                out.push(format!("{word}: duplicate senses"));
            }
        }
        out
    }
}

/// A sentence pattern with exactly one `{word1}` slot and one `{word2}` slot.
///
/// Validation happens at construction (and during deserialization), so a
/// value of this type always renders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SentenceTemplate {
    pattern: String,
}

impl SentenceTemplate {
    pub fn new(pattern: impl Into<String>) -> Result<Self, ModelError> {
        let pattern = pattern.into();
        for slot in [WORD1_SLOT, WORD2_SLOT] {
            match pattern.matches(slot).count() {
                1 => {}
                0 => {
                    return Err(ModelError::MalformedTemplate {
                        pattern,
                        reason: format!("missing {slot} slot"),
                    })
                }
                n => {
                    return Err(ModelError::MalformedTemplate {
                        pattern,
                        reason: format!("{slot} slot appears {n} times"),
                    })
                }
            }
        }
        Ok(Self { pattern })
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }
}

impl TryFrom<String> for SentenceTemplate {
    type Error = ModelError;

    fn try_from(pattern: String) -> Result<Self, Self::Error> {
        Self::new(pattern)
    }
}

impl From<SentenceTemplate> for String {
    fn from(template: SentenceTemplate) -> String {
        template.pattern
    }
}

/// Which word fills which template slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordOrder {
    Original,
    Flipped,
}

impl WordOrder {
    pub const ALL: [WordOrder; 2] = [WordOrder::Original, WordOrder::Flipped];

    pub fn flipped(self) -> Self {
        match self {
            WordOrder::Original => WordOrder::Flipped,
            WordOrder::Flipped => WordOrder::Original,
        }
    }
}

impl fmt::Display for WordOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordOrder::Original => write!(f, "original"),
            WordOrder::Flipped => write!(f, "flipped"),
        }
    }
}

/// The measuring party. Alice's outcomes come from `word1`, Bob's from
/// `word2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// One of the four measurement settings. A and A' belong to Alice, B and B'
/// to Bob; the four together form the complete set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SettingLabel {
    A,
    #[serde(rename = "A'")]
    APrime,
    B,
    #[serde(rename = "B'")]
    BPrime,
}

impl SettingLabel {
    pub const ALL: [SettingLabel; 4] = [
        SettingLabel::A,
        SettingLabel::APrime,
        SettingLabel::B,
        SettingLabel::BPrime,
    ];

    pub fn party(self) -> Party {
        match self {
            SettingLabel::A | SettingLabel::APrime => Party::Alice,
            SettingLabel::B | SettingLabel::BPrime => Party::Bob,
        }
    }
}

impl fmt::Display for SettingLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingLabel::A => write!(f, "A"),
            SettingLabel::APrime => write!(f, "A'"),
            SettingLabel::B => write!(f, "B"),
            SettingLabel::BPrime => write!(f, "B'"),
        }
    }
}

/// A measurement setting: one label plus the persona text that realizes it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub label: SettingLabel,
    pub persona: String,
}

impl MeasurementSetting {
    pub fn party(&self) -> Party {
        self.label.party()
    }
}

/// The four persona texts, one per setting label. Constructing the set this
/// way guarantees A/A' sit with Alice, B/B' with Bob, and that all four
/// settings are present.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Personas {
    pub a: String,
    pub a_prime: String,
    pub b: String,
    pub b_prime: String,
}

impl Personas {
    pub fn get(&self, label: SettingLabel) -> &str {
        match label {
            SettingLabel::A => &self.a,
            SettingLabel::APrime => &self.a_prime,
            SettingLabel::B => &self.b,
            SettingLabel::BPrime => &self.b_prime,
        }
    }

    pub fn settings(&self) -> [MeasurementSetting; 4] {
        SettingLabel::ALL.map(|label| MeasurementSetting {
            label,
            persona: self.get(label).to_string(),
        })
    }
}

/// One ordered pair of co-measured settings, i.e. one component of the
/// product 4-vector. The component order is fixed: (A,B), (A,B'), (A',B),
/// (A',B').
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SettingPair {
    #[serde(rename = "AB")]
    AB,
    #[serde(rename = "AB'")]
    ABPrime,
    #[serde(rename = "A'B")]
    APrimeB,
    #[serde(rename = "A'B'")]
    APrimeBPrime,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] = [
        SettingPair::AB,
        SettingPair::ABPrime,
        SettingPair::APrimeB,
        SettingPair::APrimeBPrime,
    ];

    /// Index of this component in the product 4-vector.
    pub fn index(self) -> usize {
        match self {
            SettingPair::AB => 0,
            SettingPair::ABPrime => 1,
            SettingPair::APrimeB => 2,
            SettingPair::APrimeBPrime => 3,
        }
    }

    pub fn alice(self) -> SettingLabel {
        match self {
            SettingPair::AB | SettingPair::ABPrime => SettingLabel::A,
            SettingPair::APrimeB | SettingPair::APrimeBPrime => SettingLabel::APrime,
        }
    }

    pub fn bob(self) -> SettingLabel {
        match self {
            SettingPair::AB | SettingPair::APrimeB => SettingLabel::B,
            SettingPair::ABPrime | SettingPair::APrimeBPrime => SettingLabel::BPrime,
        }
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.alice(), self.bob())
    }
}

/// Inference sampling knobs. Absent fields mean "backend default"; present
/// fields are still subject to per-backend capability gating.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct SamplingConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top_k: Option<u32>,
}

impl SamplingConfig {
    pub fn new(
        temperature: Option<f64>,
        top_p: Option<f64>,
        top_k: Option<u32>,
    ) -> Result<Self, ModelError> {
        let config = Self {
            temperature,
            top_p,
            top_k,
        };
        config.check()?;
        Ok(config)
    }

    /// All fields absent: the backend decides.
    pub fn backend_default() -> Self {
        Self::default()
    }

    pub fn check(&self) -> Result<(), ModelError> {
        if let Some(t) = self.temperature {
            if !t.is_finite() || t < 0.0 {
                return Err(ModelError::InvalidSampling(format!(
                    "temperature must be a finite value >= 0, got {t}"
                )));
            }
        }
        if let Some(p) = self.top_p {
            if !p.is_finite() || p <= 0.0 || p > 1.0 {
                return Err(ModelError::InvalidSampling(format!(
                    "top_p must lie in (0, 1], got {p}"
                )));
            }
        }
        if let Some(k) = self.top_k {
            if k < 1 {
                return Err(ModelError::InvalidSampling("top_k must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Canonical key used for grouping trials into grid cells. Float fields
    /// format via the shortest round-trip representation, so the key is
    /// stable across runs.
    pub fn key(&self) -> String {
        fn opt<T: fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
        }
        format!(
            "t{},p{},k{}",
            opt(&self.temperature),
            opt(&self.top_p),
            opt(&self.top_k)
        )
    }
}

impl fmt::Display for SamplingConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

/// The +1 / -1 / 0 outcome alphabet. `Null` covers interpretations that
/// classified to neither sense or could not be parsed at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum OutcomeValue {
    Plus,
    Minus,
    Null,
}

impl OutcomeValue {
    pub fn as_i8(self) -> i8 {
        match self {
            OutcomeValue::Plus => 1,
            OutcomeValue::Minus => -1,
            OutcomeValue::Null => 0,
        }
    }
}

impl From<OutcomeValue> for i8 {
    fn from(value: OutcomeValue) -> i8 {
        value.as_i8()
    }
}

impl TryFrom<i8> for OutcomeValue {
    type Error = String;

    fn try_from(value: i8) -> Result<Self, Self::Error> {
        match value {
            1 => Ok(OutcomeValue::Plus),
            -1 => Ok(OutcomeValue::Minus),
            0 => Ok(OutcomeValue::Null),
            other => Err(format!(
                "outcome value must be one of -1, 0, +1; got {other}"
            )),
        }
    }
}

/// One agent's classified outcome: the encoded value plus the raw material
/// it was derived from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub value: OutcomeValue,
    pub raw_interpretation: String,
    pub classification_label: String,
}

/// One request/response exchange with an agent, kept verbatim for audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentCall {
    pub persona: String,
    pub prompt: String,
    pub response: String,
    /// Sampling fields dropped by capability gating, with the reason.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped_fields: Vec<String>,
    pub attempts: u32,
    pub started_ms: u64,
    pub finished_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// The interpretation call and, when it happened, the classification call
/// for one setting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingCalls {
    pub interpret: AgentCall,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify: Option<AgentCall>,
}

/// One complete four-agent trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: String,
    pub model_id: String,
    pub pair: WordPair,
    pub template: SentenceTemplate,
    pub order: WordOrder,
    pub sampling: SamplingConfig,
    pub seed: u64,
    /// Exactly the four labels A, A', B, B'.
    pub outcomes: BTreeMap<SettingLabel, Outcome>,
    /// Verbatim request/response log per setting.
    pub calls: BTreeMap<SettingLabel, SettingCalls>,
}

impl TrialRecord {
    /// Complete means all four outcomes are nonzero.
    pub fn is_complete(&self) -> bool {
        SettingLabel::ALL
            .iter()
            .all(|label| self.outcome_value(*label) != 0)
    }

    pub fn outcome_value(&self, label: SettingLabel) -> i8 {
        self.outcomes
            .get(&label)
            .map_or(0, |outcome| outcome.value.as_i8())
    }

    /// The raw 4-vector of setting products (a*b, a*b', a'*b, a'*b'),
    /// components in {-1, 0, +1} with 0 wherever either factor is 0.
    pub fn product_vector(&self) -> [i8; 4] {
        SettingPair::ALL
            .map(|pair| self.outcome_value(pair.alice()) * self.outcome_value(pair.bob()))
    }

    /// Whether the trial contributes to the ensemble, i.e. its product
    /// vector has at least one nonzero component.
    pub fn has_signal(&self) -> bool {
        self.product_vector().iter().any(|p| *p != 0)
    }
}

/// Substitutes the pair into the template. `Flipped` swaps which word fills
/// which slot.
pub fn render_sentence(pair: &WordPair, template: &SentenceTemplate, order: WordOrder) -> String {
    let (first, second) = match order {
        WordOrder::Original => (&pair.word1, &pair.word2),
        WordOrder::Flipped => (&pair.word2, &pair.word1),
    };
    template
        .pattern()
        .replacen(WORD1_SLOT, first, 1)
        .replacen(WORD2_SLOT, second, 1)
}

/// One violation found while validating a lexicon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconViolation {
    pub index: usize,
    pub pair: String,
    pub reason: String,
}

/// Result of [`validate_lexicon`].
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconReport {
    pub violations: Vec<LexiconViolation>,
}

impl LexiconReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every pair's invariants and that pair identities are unique.
pub fn validate_lexicon(lexicon: &[WordPair]) -> LexiconReport {
    let mut report = LexiconReport::default();
    let mut seen = BTreeMap::new();
    for (index, pair) in lexicon.iter().enumerate() {
        for reason in pair.violations() {
            report.violations.push(LexiconViolation {
                index,
                pair: pair.key(),
                reason,
            });
        }
        if let Some(first) = seen.insert(pair.key(), index) {
            report.violations.push(LexiconViolation {
                index,
                pair: pair.key(),
                reason: format!("duplicate pair (first at index {first})"),
            });
        }
    }
    report
}

/// The default 3 x 3 x 3 sampling sweep: temperatures {0.2, 1.0, 1.8},
/// nucleus thresholds {0.7, 0.9, 1.0}, top-k {10, 50, 100}, in
/// temperature-major order. 27 configurations from near-deterministic to
/// maximally stochastic, with the conventional default at the center.
pub fn default_grid() -> Vec<SamplingConfig> {
    let mut grid = Vec::with_capacity(27);
    for &temperature in &[0.2, 1.0, 1.8] {
        for &top_p in &[0.7, 0.9, 1.0] {
            for &top_k in &[10u32, 50, 100] {
                grid.push(SamplingConfig {
                    temperature: Some(temperature),
                    top_p: Some(top_p),
                    top_k: Some(top_k),
                });
            }
        }
    }
    grid
}

/// The four default persona texts.
pub fn default_personas() -> Personas {
    Personas {
        a: "You are a foreign surgeon".to_string(),
        a_prime: "You are a bus driver".to_string(),
        b: "You are haunted by past mistakes".to_string(),
        b_prime: "You are a sales rep".to_string(),
    }
}

/// The five default ambiguous word pairs. Only bank's senses are canonical;
/// the rest are common dictionary senses and can be overridden in config.
pub fn default_lexicon() -> Vec<WordPair> {
    vec![
        WordPair::new(
            "bank",
            "bat",
            WordSenses::new("financial institution", "river bank"),
            WordSenses::new("sports equipment", "flying mammal"),
        ),
        WordPair::new(
            "crane",
            "pen",
            WordSenses::new("lifting machine", "long-necked bird"),
            WordSenses::new("writing instrument", "animal enclosure"),
        ),
        WordPair::new(
            "nail",
            "mouse",
            WordSenses::new("metal fastener", "fingernail"),
            WordSenses::new("computer pointing device", "small rodent"),
        ),
        WordPair::new(
            "bulb",
            "plant",
            WordSenses::new("light bulb", "flower bulb"),
            WordSenses::new("industrial facility", "living vegetation"),
        ),
        WordPair::new(
            "palm",
            "iris",
            WordSenses::new("palm of the hand", "palm tree"),
            WordSenses::new("part of the eye", "flowering plant"),
        ),
    ]
}

/// Three default sentence templates.
pub fn default_templates() -> Vec<SentenceTemplate> {
    [
        "The {word1} was settled near the {word2}",
        "She pointed at the {word1} beside the {word2}",
        "Everyone noticed the {word1} next to the {word2}",
    ]
    .into_iter()
    .map(|pattern| SentenceTemplate::new(pattern).expect("default templates are well-formed"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bank_bat() -> WordPair {
        WordPair::new(
            "bank",
            "bat",
            WordSenses::new("financial institution", "river bank"),
            WordSenses::new("sports equipment", "flying mammal"),
        )
    }

    #[test]
    fn render_original_and_flipped() {
        let pair = bank_bat();
        let template = SentenceTemplate::new("The {word1} was settled near the {word2}").unwrap();
        assert_eq!(
            render_sentence(&pair, &template, WordOrder::Original),
            "The bank was settled near the bat"
        );
        assert_eq!(
            render_sentence(&pair, &template, WordOrder::Flipped),
            "The bat was settled near the bank"
        );
    }

    #[test]
    fn render_output_contains_both_words_once() {
        let pair = bank_bat();
        let template = SentenceTemplate::new("A {word2} rests on the {word1}").unwrap();
        for order in WordOrder::ALL {
            let sentence = render_sentence(&pair, &template, order);
            assert_eq!(sentence.matches("bank").count(), 1, "{sentence}");
            assert_eq!(sentence.matches("bat").count(), 1, "{sentence}");
        }
    }

    #[test]
    fn template_missing_slot_rejected() {
        let err = SentenceTemplate::new("The {word1} flew.").unwrap_err();
        assert!(matches!(err, ModelError::MalformedTemplate { .. }));
    }

    #[test]
    fn template_duplicate_slot_rejected() {
        let err = SentenceTemplate::new("{word1} {word1} {word2}").unwrap_err();
        assert!(matches!(err, ModelError::MalformedTemplate { .. }));
    }

    #[test]
    fn template_deserialization_validates() {
        let ok: Result<SentenceTemplate, _> =
            serde_json::from_str("\"The {word1} and the {word2}\"");
        assert!(ok.is_ok());
        let bad: Result<SentenceTemplate, _> = serde_json::from_str("\"no slots here\"");
        assert!(bad.is_err());
    }

    #[test]
    fn default_lexicon_validates() {
        let report = validate_lexicon(&default_lexicon());
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn duplicate_senses_reported() {
        let mut pair = bank_bat();
        pair.senses1.minus = pair.senses1.plus.clone();
        let report = validate_lexicon(&[pair]);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].reason.contains("duplicate senses"));
    }

    #[test]
    fn duplicate_pair_reported() {
        let report = validate_lexicon(&[bank_bat(), bank_bat()]);
        assert_eq!(report.violations.len(), 1);
        assert!(report.violations[0].reason.contains("duplicate pair"));
        assert_eq!(report.violations[0].index, 1);
    }

    #[test]
    fn default_grid_shape() {
        let grid = default_grid();
        assert_eq!(grid.len(), 27);
        assert_eq!(
            grid[0],
            SamplingConfig::new(Some(0.2), Some(0.7), Some(10)).unwrap()
        );
        assert_eq!(
            grid[26],
            SamplingConfig::new(Some(1.8), Some(1.0), Some(100)).unwrap()
        );
        let center = SamplingConfig::new(Some(1.0), Some(0.9), Some(50)).unwrap();
        assert!(grid.contains(&center));
        let mut keys: Vec<String> = grid.iter().map(SamplingConfig::key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 27, "grid entries must be distinct");
    }

    #[test]
    fn sampling_invariants_enforced() {
        assert!(SamplingConfig::new(Some(-0.1), None, None).is_err());
        assert!(SamplingConfig::new(None, Some(0.0), None).is_err());
        assert!(SamplingConfig::new(None, Some(1.2), None).is_err());
        assert!(SamplingConfig::new(None, None, Some(0)).is_err());
        assert!(SamplingConfig::new(None, None, None).is_ok());
    }

    #[test]
    fn setting_labels_partition_by_party() {
        assert_eq!(SettingLabel::A.party(), Party::Alice);
        assert_eq!(SettingLabel::APrime.party(), Party::Alice);
        assert_eq!(SettingLabel::B.party(), Party::Bob);
        assert_eq!(SettingLabel::BPrime.party(), Party::Bob);
    }

    #[test]
    fn setting_pair_components() {
        assert_eq!(SettingPair::AB.index(), 0);
        assert_eq!(SettingPair::ABPrime.index(), 1);
        assert_eq!(SettingPair::APrimeB.index(), 2);
        assert_eq!(SettingPair::APrimeBPrime.index(), 3);
        assert_eq!(SettingPair::ABPrime.alice(), SettingLabel::A);
        assert_eq!(SettingPair::ABPrime.bob(), SettingLabel::BPrime);
    }

    fn trial_with(values: [i8; 4]) -> TrialRecord {
        let pair = bank_bat();
        let outcomes = SettingLabel::ALL
            .iter()
            .zip(values)
            .map(|(label, value)| {
                (
                    *label,
                    Outcome {
                        value: OutcomeValue::try_from(value).unwrap(),
                        raw_interpretation: "text".into(),
                        classification_label: "label".into(),
                    },
                )
            })
            .collect();
        TrialRecord {
            trial_id: "t0".into(),
            model_id: "m".into(),
            pair,
            template: SentenceTemplate::new("{word1} and {word2}").unwrap(),
            order: WordOrder::Original,
            sampling: SamplingConfig::backend_default(),
            seed: 7,
            outcomes,
            calls: BTreeMap::new(),
        }
    }

    #[test]
    fn product_vector_identity() {
        assert_eq!(trial_with([1, 1, 1, 1]).product_vector(), [1, 1, 1, 1]);
    }

    #[test]
    fn product_vector_with_zero_factor() {
        // a=+1, a'=+1, b=-1, b'=0
        assert_eq!(trial_with([1, 1, -1, 0]).product_vector(), [-1, 0, -1, 0]);
    }

    #[test]
    fn product_vector_all_zero() {
        let trial = trial_with([0, 0, 0, 0]);
        assert_eq!(trial.product_vector(), [0, 0, 0, 0]);
        assert!(!trial.has_signal());
        assert!(!trial.is_complete());
    }

    #[test]
    fn trial_record_roundtrip() {
        let trial = trial_with([1, -1, 0, 1]);
        let line = serde_json::to_string(&trial).unwrap();
        let back: TrialRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(trial, back);
    }
}
