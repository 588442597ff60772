//! Synthetic correlation sources with known CHSH behaviour, used to
//! validate the estimators: deterministic local hidden-variable strategies
//! (|S| <= 2), the no-signaling box that reaches the algebraic maximum
//! (S = 4), and singlet-statistics sampling that approaches 2*sqrt(2) at
//! the canonical angles. Plus a deterministic offline chat backend for
//! end-to-end runs without a model.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use async_trait::async_trait;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use chsh_core::model::{SamplingConfig, SettingLabel, SettingPair};

use crate::backend::{BackendDescriptor, BackendKind};
use crate::complete::ChatBackend;
use crate::error::AgentError;

/// A deterministic pre-assignment of all four outcomes, independent of
/// which setting is co-measured. There are exactly 16 of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalStrategy {
    pub a: i8,
    pub a_prime: i8,
    pub b: i8,
    pub b_prime: i8,
}

impl LocalStrategy {
    pub fn new(a: i8, a_prime: i8, b: i8, b_prime: i8) -> Self {
        for v in [a, a_prime, b, b_prime] {
            assert!(v == 1 || v == -1, "strategy outcomes are +-1");
        }
        Self {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// All 16 deterministic strategies.
    pub fn all() -> Vec<LocalStrategy> {
        let mut out = Vec::with_capacity(16);
        for bits in 0..16u8 {
            let sign = |bit: u8| if bits & (1 << bit) == 0 { 1i8 } else { -1 };
            out.push(LocalStrategy::new(sign(0), sign(1), sign(2), sign(3)));
        }
        out
    }

    pub fn outcome(&self, label: SettingLabel) -> i8 {
        match label {
            SettingLabel::A => self.a,
            SettingLabel::APrime => self.a_prime,
            SettingLabel::B => self.b,
            SettingLabel::BPrime => self.b_prime,
        }
    }

    /// The four setting products (ab, ab', a'b, a'b').
    pub fn products(&self) -> [i8; 4] {
        SettingPair::ALL.map(|pair| self.outcome(pair.alice()) * self.outcome(pair.bob()))
    }

    /// ab - ab' + a'b + a'b'; equals +-2 for every strategy.
    pub fn signed_combination(&self) -> i32 {
        let p = self.products().map(i32::from);
        p[0] - p[1] + p[2] + p[3]
    }
}

/// The pre-assigned outcomes (a, a', b, b') of a strategy, independent of
/// the co-measured setting.
pub fn hidden_variable_outcomes(strategy: &LocalStrategy) -> (i8, i8, i8, i8) {
    (strategy.a, strategy.a_prime, strategy.b, strategy.b_prime)
}

/// One sample from the no-signaling box: Alice's outcome is a fair coin and
/// Bob's copies it except on the (A, B') pair, where it flips. Marginals
/// stay uniform for every pair while the pairwise signed S reaches 4.
pub fn pr_box_sample(pair: SettingPair, rng: &mut impl Rng) -> (i8, i8) {
    let alice: i8 = if rng.gen::<bool>() { 1 } else { -1 };
    let bob = if pair == SettingPair::ABPrime {
        -alice
    } else {
        alice
    };
    (alice, bob)
}

/// Measurement angle per setting that maximizes the pairwise signed S at
/// 2*sqrt(2): A = 0, A' = pi/2, B = pi/4, B' = 3*pi/4.
pub fn canonical_singlet_angle(label: SettingLabel) -> f64 {
    match label {
        SettingLabel::A => 0.0,
        SettingLabel::APrime => FRAC_PI_2,
        SettingLabel::B => FRAC_PI_4,
        SettingLabel::BPrime => 3.0 * FRAC_PI_4,
    }
}

/// One sample with singlet statistics: Alice's outcome is a fair coin and
/// Bob agrees with probability (1 + cos(angle_x - angle_y)) / 2, so
/// `E[ab] = cos(angle_x - angle_y)`.
pub fn singlet_sample(angle_alice: f64, angle_bob: f64, rng: &mut impl Rng) -> (i8, i8) {
    let alice: i8 = if rng.gen::<bool>() { 1 } else { -1 };
    let p_agree = (1.0 + (angle_alice - angle_bob).cos()) / 2.0;
    let bob = if rng.gen_bool(p_agree.clamp(0.0, 1.0)) {
        alice
    } else {
        -alice
    };
    (alice, bob)
}

/// Deterministic offline chat agent. Every reply is a pure function of
/// (seed, persona, prompt, sampling), so runs reproduce exactly. It answers
/// classification prompts (recognized by the built-in label-list wording)
/// by hashing onto one of the listed options, and everything else with a
/// short canned interpretation.
pub struct SyntheticBackend {
    descriptor: BackendDescriptor,
    seed: u64,
}

impl SyntheticBackend {
    pub fn new(mut descriptor: BackendDescriptor, seed: u64) -> Self {
        descriptor.kind = BackendKind::Synthetic;
        Self { descriptor, seed }
    }

    fn request_hash(&self, persona: &str, prompt: &str, sampling: &SamplingConfig) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(persona.as_bytes());
        hasher.update([0x1f]);
        hasher.update(prompt.as_bytes());
        hasher.update([0x1f]);
        hasher.update(sampling.key().as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

const LABEL_LIST_MARKER: &str = "Reply with exactly one of the following labels";

fn listed_labels(prompt: &str) -> Option<Vec<&str>> {
    let (_, tail) = prompt.split_once(LABEL_LIST_MARKER)?;
    let labels: Vec<&str> = tail
        .lines()
        .filter_map(|line| line.trim().strip_prefix("- "))
        .map(str::trim)
        .collect();
    (!labels.is_empty()).then_some(labels)
}

#[async_trait]
impl ChatBackend for SyntheticBackend {
    fn descriptor(&self) -> &BackendDescriptor {
        &self.descriptor
    }

    async fn try_complete(
        &self,
        persona: &str,
        prompt: &str,
        sampling: &SamplingConfig,
    ) -> Result<String, AgentError> {
        let hash = self.request_hash(persona, prompt, sampling);
        if let Some(labels) = listed_labels(prompt) {
            // 45% / 45% / 10% across (first, second, neither-or-last).
            let roll = hash % 20;
            let index = if roll < 9 {
                0
            } else if roll < 18 {
                1.min(labels.len() - 1)
            } else {
                labels.len() - 1
            };
            return Ok(labels[index].to_string());
        }
        let flavors = [
            "Read plainly, each word takes its most common everyday sense.",
            "In this context both words lean toward their less common senses.",
            "The first word reads literally; the second feels figurative here.",
        ];
        Ok(flavors[(hash % flavors.len() as u64) as usize].to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn all_sixteen_strategies_enumerate() {
        let strategies = LocalStrategy::all();
        assert_eq!(strategies.len(), 16);
        let mut distinct: Vec<_> = strategies
            .iter()
            .map(|s| (s.a, s.a_prime, s.b, s.b_prime))
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 16);
    }

    #[test]
    fn identity_strategy_combination_is_two() {
        let all_plus = LocalStrategy::new(1, 1, 1, 1);
        assert_eq!(hidden_variable_outcomes(&all_plus), (1, 1, 1, 1));
        assert_eq!(all_plus.signed_combination(), 2);
        // a=+1, a'=+1, b=+1, b'=-1 -> 1 - (-1) + 1 + (-1) = 2.
        assert_eq!(LocalStrategy::new(1, 1, 1, -1).signed_combination(), 2);
    }

    #[test]
    fn brute_force_maximum_over_strategies_is_two() {
        let max = LocalStrategy::all()
            .iter()
            .map(|s| s.signed_combination().abs())
            .max()
            .unwrap();
        assert_eq!(max, 2);
        for strategy in LocalStrategy::all() {
            assert!(matches!(strategy.signed_combination(), -2 | 2));
        }
    }

    #[test]
    fn pr_box_products_by_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, b) = pr_box_sample(SettingPair::AB, &mut rng);
            assert_eq!(a * b, 1);
            let (a, b) = pr_box_sample(SettingPair::ABPrime, &mut rng);
            assert_eq!(a * b, -1);
            let (a, b) = pr_box_sample(SettingPair::APrimeB, &mut rng);
            assert_eq!(a * b, 1);
            let (a, b) = pr_box_sample(SettingPair::APrimeBPrime, &mut rng);
            assert_eq!(a * b, 1);
        }
    }

    #[test]
    fn pr_box_marginals_stay_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for pair in SettingPair::ALL {
            let n = 10_000;
            let mut alice_plus = 0;
            for _ in 0..n {
                let (a, _) = pr_box_sample(pair, &mut rng);
                if a == 1 {
                    alice_plus += 1;
                }
            }
            let p = f64::from(alice_plus) / f64::from(n);
            assert!((p - 0.5).abs() <= 0.02, "pair {pair}: P(a=+1) = {p}");
        }
    }

    #[test]
    fn singlet_correlation_tracks_cosine() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for delta in [0.0, FRAC_PI_4, FRAC_PI_2, PI] {
            let n = 20_000;
            let mut sum = 0i64;
            for _ in 0..n {
                let (a, b) = singlet_sample(delta, 0.0, &mut rng);
                sum += i64::from(a) * i64::from(b);
            }
            let estimate = sum as f64 / f64::from(n);
            let expected = delta.cos();
            assert!(
                (estimate - expected).abs() <= 3.0 / f64::from(n).sqrt(),
                "delta {delta}: {estimate} vs {expected}"
            );
        }
    }

    #[tokio::test]
    async fn synthetic_backend_is_deterministic() {
        let descriptor = BackendDescriptor::new(BackendKind::Synthetic, "", "coin");
        let backend = SyntheticBackend::new(descriptor.clone(), 42);
        let sampling = SamplingConfig::backend_default();
        let first = backend.try_complete("p", "q", &sampling).await.unwrap();
        let second = backend.try_complete("p", "q", &sampling).await.unwrap();
        assert_eq!(first, second);

        let again = SyntheticBackend::new(descriptor, 42);
        assert_eq!(
            again.try_complete("p", "q", &sampling).await.unwrap(),
            first
        );
    }

    #[tokio::test]
    async fn synthetic_backend_answers_label_lists_with_a_label() {
        let descriptor = BackendDescriptor::new(BackendKind::Synthetic, "", "coin");
        let backend = SyntheticBackend::new(descriptor, 1);
        let prompt = format!(
            "{LABEL_LIST_MARKER} and nothing else:\n- financial institution\n- river bank\n- neither"
        );
        for seed_extra in 0..20u64 {
            let sampling = SamplingConfig::new(Some(seed_extra as f64), None, None).unwrap();
            let reply = backend.try_complete("p", &prompt, &sampling).await.unwrap();
            assert!(
                ["financial institution", "river bank", "neither"].contains(&reply.as_str()),
                "{reply}"
            );
        }
    }
}
