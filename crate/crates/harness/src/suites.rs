//! Synthetic validation suites: correlation sources with known CHSH values
//! run through both estimators. Local hidden-variable strategies must stay
//! at |S| <= 2 under the signed estimator (and collapse to exactly 2 under
//! the density-matrix one, as any complete data does), the no-signaling box
//! must hit the algebraic maximum 4, and singlet sampling at the canonical
//! angles must land near 2*sqrt(2).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use chsh_agents::canonical_singlet_angle;
use chsh_agents::synthetic::{pr_box_sample, singlet_sample, LocalStrategy};
use chsh_core::model::SettingPair;
use chsh_core::stats::{chsh_from_products, chsh_signed_pairwise, PairSample, TSIRELSON_BOUND};

#[derive(Clone, Debug, Serialize)]
pub struct HiddenVariableReport {
    /// max over the 16 strategies of |ab - ab' + a'b + a'b'|.
    pub max_abs_per_strategy: f64,
    /// max |signed S| over the random mixtures.
    pub max_abs_mixture: f64,
    pub mixtures: usize,
    /// The density-matrix S on mixture data (complete trials collapse to 2).
    pub literal_on_mixture: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairwiseReport {
    pub signed_s: f64,
    pub samples_per_pair: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SyntheticSuiteReport {
    pub hidden_variable: HiddenVariableReport,
    pub pr_box: PairwiseReport,
    pub singlet: PairwiseReport,
    pub singlet_expected: f64,
}

/// Signed S for one mixture of deterministic strategies, drawn as actual
/// trial product vectors. The support is a random subset of the 16
/// strategies (singletons included), so across many mixtures the classical
/// bound is not just respected but attained.
fn mixture_signed(rng: &mut ChaCha8Rng, strategies: &[LocalStrategy], draws: usize) -> (f64, f64) {
    let support_size = rng.gen_range(1..=strategies.len());
    let support: Vec<&LocalStrategy> = (0..support_size)
        .map(|_| &strategies[rng.gen_range(0..strategies.len())])
        .collect();
    let products: Vec<[i8; 4]> = (0..draws)
        .map(|_| support[rng.gen_range(0..support.len())].products())
        .collect();
    let result = chsh_from_products::<f64>(products).expect("complete trials");
    (result.s_signed.expect("complete trials"), result.s_literal)
}

pub fn run_hidden_variable_suite(seed: u64, mixtures: usize) -> HiddenVariableReport {
    let strategies = LocalStrategy::all();
    let max_abs_per_strategy = strategies
        .iter()
        .map(|s| f64::from(s.signed_combination().abs()))
        .fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_mixture = 0.0f64;
    let mut literal_on_mixture = 0.0;
    for _ in 0..mixtures {
        let (signed, literal) = mixture_signed(&mut rng, &strategies, 64);
        max_abs_mixture = max_abs_mixture.max(signed.abs());
        literal_on_mixture = literal;
    }
    HiddenVariableReport {
        max_abs_per_strategy,
        max_abs_mixture,
        mixtures,
        literal_on_mixture,
    }
}

pub fn run_pr_box_suite(seed: u64, samples_per_pair: usize) -> PairwiseReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(samples_per_pair * 4);
    for pair in SettingPair::ALL {
        for _ in 0..samples_per_pair {
            let (alice, bob) = pr_box_sample(pair, &mut rng);
            samples.push(PairSample::new(pair, alice, bob));
        }
    }
    PairwiseReport {
        signed_s: chsh_signed_pairwise(&samples).expect("all pairs sampled"),
        samples_per_pair,
    }
}

pub fn run_singlet_suite(seed: u64, samples_per_pair: usize) -> PairwiseReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(samples_per_pair * 4);
    for pair in SettingPair::ALL {
        let angle_alice = canonical_singlet_angle(pair.alice());
        let angle_bob = canonical_singlet_angle(pair.bob());
        for _ in 0..samples_per_pair {
            let (alice, bob) = singlet_sample(angle_alice, angle_bob, &mut rng);
            samples.push(PairSample::new(pair, alice, bob));
        }
    }
    PairwiseReport {
        signed_s: chsh_signed_pairwise(&samples).expect("all pairs sampled"),
        samples_per_pair,
    }
}

pub fn run_synthetic_suites(seed: u64, samples_per_pair: usize) -> SyntheticSuiteReport {
    SyntheticSuiteReport {
        hidden_variable: run_hidden_variable_suite(seed, 1000),
        pr_box: run_pr_box_suite(seed.wrapping_add(1), samples_per_pair),
        singlet: run_singlet_suite(seed.wrapping_add(2), samples_per_pair),
        singlet_expected: TSIRELSON_BOUND,
    }
}
