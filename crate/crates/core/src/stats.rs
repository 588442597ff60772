//! The measurement mathematics: product-vector normalization, density
//! matrix construction, projector expectations, the density-matrix CHSH
//! estimator, and the standard signed estimator kept alongside it as a
//! diagnostic.
//!
//! The pipeline is: each trial's product 4-vector is normalized to unit
//! length, the ensemble density matrix is the average of the outer products
//! rho = (1/N) sum |v><v|, each expectation is E(XY) = 4 Tr(rho P_XY) with
//! P_XY the rank-1 diagonal projector onto that component, and
//! S = E(A,B) - E(A,B') + E(A',B) + E(A',B').
//!
//! Because Tr(rho) = 1 and the projector reads a nonnegative diagonal entry,
//! this estimator obeys S = 4 - 2 E(A,B') identically, collapses to exactly
//! 2 on ensembles whose trials all have +-1 products, and ranges over
//! [-4, 4]. The signed estimator (plain means of signed products) is the
//! conventional CHSH quantity and is bounded by 2 on complete-trial
//! ensembles; both are reported so the difference is visible in the output
//! rather than hidden in the estimator choice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{SettingPair, TrialRecord};
use crate::scalar::Real;

/// |S| bound attainable by local hidden-variable models.
pub const CLASSICAL_BOUND: f64 = 2.0;
/// |S| bound attainable by quantum correlations in the standard pairwise
/// experiment: 2 * sqrt(2).
pub const TSIRELSON_BOUND: f64 = 2.828_427_124_746_190_3;
/// Algebraic maximum of |S|.
pub const ALGEBRAIC_MAX: f64 = 4.0;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("zero-norm vector has no direction")]
    ZeroNorm,
    #[error("ensemble is empty after discarding zero-norm trials")]
    EmptyEnsemble,
    #[error("pairwise ensemble has no usable samples for setting pair {0}")]
    MissingPair(SettingPair),
    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),
}

/// Which estimator a signed-S value came from. `Joint` draws all four
/// products from each trial (the harness protocol); `Pairwise` gives each
/// sample one setting pair (the standard CHSH experiment, used by the
/// synthetic suites).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    Joint,
    Pairwise,
}

/// A 4-vector of unit Euclidean norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedVector<F: Real> {
    components: [F; 4],
}

impl<F: Real> NormalizedVector<F> {
    pub fn components(&self) -> [F; 4] {
        self.components
    }
}

/// Normalizes a raw product 4-vector to unit length.
pub fn normalize<F: Real>(raw: [F; 4]) -> Result<NormalizedVector<F>, StatsError> {
    let norm_sq: F = raw.iter().map(|c| *c * *c).sum();
    if norm_sq == F::zero() {
        return Err(StatsError::ZeroNorm);
    }
    let norm = norm_sq.sqrt();
    Ok(NormalizedVector {
        components: raw.map(|c| c / norm),
    })
}

/// Convenience for integer product vectors as produced by
/// [`TrialRecord::product_vector`].
pub fn normalize_products<F: Real>(products: [i8; 4]) -> Result<NormalizedVector<F>, StatsError> {
    normalize(products.map(|p| F::from_f64_exact(f64::from(p))))
}

/// A 4x4 real symmetric, trace-one, positive-semidefinite matrix.
///
/// The constructor checks all three properties (symmetry and trace to
/// [`Real::strict_tol`], minimum eigenvalue above `-`[`Real::psd_tol`] via a
/// Jacobi eigensolver), so a value of this type is always a valid state.
/// Deliberately not deserializable: the only way in is through validation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<F: Real> {
    entries: [[F; 4]; 4],
}

impl<F: Real> DensityMatrix<F> {
    #[allow(clippy::needless_range_loop)] // index pairs read both triangles
    pub fn new(entries: [[F; 4]; 4]) -> Result<Self, StatsError> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                let gap = (entries[i][j] - entries[j][i]).abs();
                if gap > F::strict_tol() {
                    return Err(StatsError::InvalidDensityMatrix(format!(
                        "asymmetric at ({i},{j}): gap {gap}"
                    )));
                }
            }
        }
        let trace: F = (0..4).map(|i| entries[i][i]).sum();
        if (trace - F::one()).abs() > F::strict_tol() {
            return Err(StatsError::InvalidDensityMatrix(format!(
                "trace {trace} is not 1"
            )));
        }
        let min_eig = symmetric_eigenvalues(&entries)
            .into_iter()
            .fold(F::infinity(), F::min);
        if min_eig < -F::psd_tol() {
            return Err(StatsError::InvalidDensityMatrix(format!(
                "not positive semidefinite: min eigenvalue {min_eig}"
            )));
        }
        Ok(Self { entries })
    }

    pub fn entry(&self, row: usize, col: usize) -> F {
        self.entries[row][col]
    }

    pub fn entries(&self) -> [[F; 4]; 4] {
        self.entries
    }

    pub fn trace(&self) -> F {
        (0..4).map(|i| self.entries[i][i]).sum()
    }

    pub fn eigenvalues(&self) -> [F; 4] {
        symmetric_eigenvalues(&self.entries)
    }
}

/// rho = (1/N) sum |v><v| over an ensemble of normalized vectors.
pub fn density_matrix<F: Real>(
    vectors: &[NormalizedVector<F>],
) -> Result<DensityMatrix<F>, StatsError> {
    if vectors.is_empty() {
        return Err(StatsError::EmptyEnsemble);
    }
    let count = F::from_count(vectors.len());
    let mut entries = [[F::zero(); 4]; 4];
    for vector in vectors {
        let v = vector.components();
        for i in 0..4 {
            for j in 0..4 {
                entries[i][j] += v[i] * v[j];
            }
        }
    }
    for row in entries.iter_mut() {
        for entry in row.iter_mut() {
            *entry /= count;
        }
    }
    DensityMatrix::new(entries)
}

/// E(XY) = 4 Tr(rho P_XY) with P_XY the rank-1 diagonal projector onto the
/// component's axis, i.e. four times the corresponding diagonal entry.
pub fn expectation<F: Real>(rho: &DensityMatrix<F>, component: SettingPair) -> F {
    let i = component.index();
    F::from_f64_exact(4.0) * rho.entry(i, i)
}

/// The CHSH measurement for one ensemble, under both estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult<F: Real> {
    pub e_ab: F,
    pub e_ab_prime: F,
    pub e_a_prime_b: F,
    pub e_a_prime_b_prime: F,
    /// S from the density-matrix pipeline.
    pub s_literal: F,
    /// S from plain signed product means (zeros excluded per component);
    /// `None` when some component has no nonzero products at all.
    pub s_signed: Option<F>,
    /// Trials whose product vector had at least one nonzero component.
    pub n_complete: usize,
    /// Trials discarded because their product vector was all zero.
    pub n_discarded: usize,
}

impl<F: Real> ChshResult<F> {
    pub fn expectation(&self, component: SettingPair) -> F {
        match component {
            SettingPair::AB => self.e_ab,
            SettingPair::ABPrime => self.e_ab_prime,
            SettingPair::APrimeB => self.e_a_prime_b,
            SettingPair::APrimeBPrime => self.e_a_prime_b_prime,
        }
    }
}

/// Runs the density-matrix pipeline over raw product vectors: discard
/// zero-norm vectors (counting them), normalize, average outer products,
/// read the four projector expectations, and form
/// S = E(A,B) - E(A,B') + E(A',B) + E(A',B').
pub fn chsh_from_products<F: Real>(
    products: impl IntoIterator<Item = [i8; 4]>,
) -> Result<ChshResult<F>, StatsError> {
    let mut vectors = Vec::new();
    let mut n_discarded = 0usize;
    let mut signed_sums = [0i64; 4];
    let mut signed_counts = [0u64; 4];
    for product in products {
        for (component, value) in product.iter().enumerate() {
            if *value != 0 {
                signed_sums[component] += i64::from(*value);
                signed_counts[component] += 1;
            }
        }
        match normalize_products::<F>(product) {
            Ok(vector) => vectors.push(vector),
            Err(StatsError::ZeroNorm) => n_discarded += 1,
            Err(other) => return Err(other),
        }
    }
    let rho = density_matrix(&vectors)?;
    let e = SettingPair::ALL.map(|component| expectation(&rho, component));
    let s_signed =
        signed_means::<F>(&signed_sums, &signed_counts).map(|m| m[0] - m[1] + m[2] + m[3]);
    Ok(ChshResult {
        e_ab: e[0],
        e_ab_prime: e[1],
        e_a_prime_b: e[2],
        e_a_prime_b_prime: e[3],
        s_literal: e[0] - e[1] + e[2] + e[3],
        s_signed,
        n_complete: vectors.len(),
        n_discarded,
    })
}

/// [`chsh_from_products`] over trial records.
pub fn chsh_literal(trials: &[TrialRecord]) -> Result<ChshResult<f64>, StatsError> {
    chsh_from_products(trials.iter().map(TrialRecord::product_vector))
}

/// The signed estimator alone, joint mode: per-component means of signed
/// products across trials, zeros excluded per component. `None` when some
/// component has no nonzero products.
pub fn chsh_signed_joint<F: Real>(trials: &[TrialRecord]) -> Option<F> {
    let mut sums = [0i64; 4];
    let mut counts = [0u64; 4];
    for trial in trials {
        for (component, value) in trial.product_vector().iter().enumerate() {
            if *value != 0 {
                sums[component] += i64::from(*value);
                counts[component] += 1;
            }
        }
    }
    signed_means::<F>(&sums, &counts).map(|m| m[0] - m[1] + m[2] + m[3])
}

/// One sample of the standard pairwise CHSH experiment: a single co-measured
/// setting pair with both parties' outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSample {
    pub pair: SettingPair,
    pub alice: i8,
    pub bob: i8,
}

impl PairSample {
    pub fn new(pair: SettingPair, alice: i8, bob: i8) -> Self {
        Self { pair, alice, bob }
    }
}

/// The signed estimator, pairwise mode. Every setting pair must contribute
/// at least one sample with a nonzero product.
pub fn chsh_signed_pairwise<F: Real>(samples: &[PairSample]) -> Result<F, StatsError> {
    let mut sums = [0i64; 4];
    let mut counts = [0u64; 4];
    for sample in samples {
        let product = i64::from(sample.alice) * i64::from(sample.bob);
        if product != 0 {
            sums[sample.pair.index()] += product;
            counts[sample.pair.index()] += 1;
        }
    }
    for component in SettingPair::ALL {
        if counts[component.index()] == 0 {
            return Err(StatsError::MissingPair(component));
        }
    }
    let m = signed_means::<F>(&sums, &counts).expect("all components counted");
    Ok(m[0] - m[1] + m[2] + m[3])
}

fn signed_means<F: Real>(sums: &[i64; 4], counts: &[u64; 4]) -> Option<[F; 4]> {
    let mut means = [F::zero(); 4];
    for component in 0..4 {
        if counts[component] == 0 {
            return None;
        }
        means[component] =
            F::from_f64_exact(sums[component] as f64) / F::from_f64_exact(counts[component] as f64);
    }
    Some(means)
}

/// Eigenvalues of a 4x4 symmetric matrix via the cyclic Jacobi rotation
/// method. Converges quadratically; a handful of sweeps suffices at this
/// size.
#[allow(clippy::needless_range_loop)] // rotations touch rows and columns by index
pub fn symmetric_eigenvalues<F: Real>(matrix: &[[F; 4]; 4]) -> [F; 4] {
    let mut a = *matrix;
    let eps = F::epsilon() * F::from_f64_exact(16.0);
    for _sweep in 0..64 {
        let mut off = F::zero();
        for i in 0..4 {
            for j in (i + 1)..4 {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= eps {
            break;
        }
        for p in 0..4 {
            for q in (p + 1)..4 {
                if a[p][q].abs() <= F::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (F::from_f64_exact(2.0) * a[p][q]);
                // Stable tangent of the rotation angle.
                let t = {
                    let sign = if theta >= F::zero() {
                        F::one()
                    } else {
                        -F::one()
                    };
                    sign / (theta.abs() + (theta * theta + F::one()).sqrt())
                };
                let c = F::one() / (t * t + F::one()).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    [a[0][0], a[1][1], a[2][2], a[3][3]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Outcome, OutcomeValue, SamplingConfig, SentenceTemplate, SettingLabel, TrialRecord,
        WordOrder, WordPair, WordSenses,
    };
    use std::collections::BTreeMap;

    pub(crate) fn trial_from_outcomes(values: [i8; 4]) -> TrialRecord {
        let outcomes = SettingLabel::ALL
            .iter()
            .zip(values)
            .map(|(label, value)| {
                (
                    *label,
                    Outcome {
                        value: OutcomeValue::try_from(value).unwrap(),
                        raw_interpretation: String::new(),
                        classification_label: String::new(),
                    },
                )
            })
            .collect::<BTreeMap<_, _>>();
        TrialRecord {
            trial_id: "t".into(),
            model_id: "m".into(),
            pair: WordPair::new(
                "bank",
                "bat",
                WordSenses::new("financial institution", "river bank"),
                WordSenses::new("sports equipment", "flying mammal"),
            ),
            template: SentenceTemplate::new("{word1} {word2}").unwrap(),
            order: WordOrder::Original,
            sampling: SamplingConfig::backend_default(),
            seed: 0,
            outcomes,
            calls: BTreeMap::new(),
        }
    }

    #[test]
    fn normalize_unit_cases() {
        let v = normalize([1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(v.components(), [0.5, 0.5, 0.5, 0.5]);

        let v = normalize([-1.0, 0.0, -1.0, 0.0]).unwrap();
        let r = 1.0 / 2.0_f64.sqrt();
        for (got, want) in v.components().iter().zip([-r, 0.0, -r, 0.0]) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_zero_rejected() {
        assert_eq!(
            normalize([0.0, 0.0, 0.0, 0.0]).unwrap_err(),
            StatsError::ZeroNorm
        );
    }

    #[test]
    fn density_matrix_rank_one() {
        let v = normalize([1.0_f64, 1.0, 1.0, 1.0]).unwrap();
        let rho = density_matrix(&[v]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(rho.entry(i, j), 0.25);
            }
        }
        // N copies of the same vector average to the same outer product.
        let repeated = density_matrix(&vec![v; 17]).unwrap();
        assert_eq!(repeated.entries(), rho.entries());
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_equal_mixture_eigenvalues() {
        let e1 = normalize([1.0_f64, 0.0, 0.0, 0.0]).unwrap();
        let e2 = normalize([0.0_f64, 1.0, 0.0, 0.0]).unwrap();
        let rho = density_matrix(&[e1, e2]).unwrap();
        assert_eq!(rho.entry(0, 0), 0.5);
        assert_eq!(rho.entry(1, 1), 0.5);
        assert_eq!(rho.entry(2, 2), 0.0);
        let mut eigs = rho.eigenvalues();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in eigs.iter().zip([0.0, 0.0, 0.5, 0.5]) {
            assert!((got - want).abs() < 1e-12, "eigs {eigs:?}");
        }
    }

    #[test]
    fn density_matrix_empty_rejected() {
        let empty: Vec<NormalizedVector<f64>> = Vec::new();
        assert_eq!(
            density_matrix(&empty).unwrap_err(),
            StatsError::EmptyEnsemble
        );
    }

    #[test]
    fn expectation_reads_diagonal() {
        let v = normalize([1.0, 1.0, 1.0, 1.0]).unwrap();
        let rho = density_matrix(&[v]).unwrap();
        for component in SettingPair::ALL {
            assert_eq!(expectation(&rho, component), 1.0);
        }
        let e1 = normalize([1.0, 0.0, 0.0, 0.0]).unwrap();
        let e3 = normalize([0.0, 0.0, 1.0, 0.0]).unwrap();
        let rho = density_matrix(&[e1, e3]).unwrap();
        assert_eq!(expectation(&rho, SettingPair::AB), 2.0);
        assert_eq!(expectation(&rho, SettingPair::ABPrime), 0.0);
    }

    #[test]
    fn expectations_sum_to_four() {
        let vs = [
            normalize([1.0, -1.0, 0.0, 1.0]).unwrap(),
            normalize([0.0, 1.0, 1.0, 0.0]).unwrap(),
            normalize([-1.0, -1.0, -1.0, -1.0]).unwrap(),
        ];
        let rho = density_matrix(&vs).unwrap();
        let total: f64 = SettingPair::ALL.iter().map(|c| expectation(&rho, *c)).sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn literal_collapses_to_two_on_complete_trials() {
        let trials: Vec<TrialRecord> = [
            [1, 1, 1, 1],
            [1, -1, -1, 1],
            [-1, -1, -1, -1],
            [1, 1, -1, -1],
        ]
        .into_iter()
        .map(trial_from_outcomes)
        .collect();
        let result = chsh_literal(&trials).unwrap();
        assert_eq!(result.s_literal, 2.0);
        assert_eq!(result.n_complete, 4);
        assert_eq!(result.n_discarded, 0);
    }

    #[test]
    fn literal_reaches_algebraic_maximum() {
        // Outcomes a=1, a'=1, b=-1, b'=0 give products (-1, 0, -1, 0), which
        // normalize onto the AB/A'B plane and drive S to the maximum.
        let trials: Vec<TrialRecord> = std::iter::repeat_n([1, 1, -1, 0], 9)
            .map(trial_from_outcomes)
            .collect();
        let result = chsh_literal(&trials).unwrap();
        assert!((result.s_literal - 4.0).abs() < 1e-12);
        assert!((result.e_ab - 2.0).abs() < 1e-12);
        assert!((result.e_ab_prime).abs() < 1e-12);
    }

    #[test]
    fn literal_minimum_via_engineered_mixture() {
        // 17 trials whose product vector is (0,1,0,0) plus 43 all-ones
        // trials put E(A,B') at 1.85, so S = 4 - 2*1.85 = 0.30.
        let mut trials = Vec::new();
        for _ in 0..17 {
            trials.push(trial_from_outcomes([1, 0, 0, 1])); // products (0,1,0,0)
        }
        for _ in 0..43 {
            trials.push(trial_from_outcomes([1, 1, 1, 1]));
        }
        assert_eq!(trials[0].product_vector(), [0, 1, 0, 0]);
        let result = chsh_literal(&trials).unwrap();
        assert!((result.e_ab_prime - 1.85).abs() < 1e-12);
        assert!((result.s_literal - 0.30).abs() < 1e-12);
    }

    #[test]
    fn literal_identity_s_equals_four_minus_twice_e_ab_prime() {
        let trials: Vec<TrialRecord> = [
            [1, 0, -1, 1],
            [0, 1, 0, 0],
            [1, 1, 1, 1],
            [-1, 1, 0, -1],
            [0, 0, 1, 0],
        ]
        .into_iter()
        .map(trial_from_outcomes)
        .collect();
        let result = chsh_literal(&trials).unwrap();
        assert!((result.s_literal - (4.0 - 2.0 * result.e_ab_prime)).abs() < 1e-9);
    }

    #[test]
    fn literal_discards_and_counts_zero_vectors() {
        let trials = vec![
            trial_from_outcomes([0, 0, 0, 0]),
            trial_from_outcomes([1, 1, 1, 1]),
            trial_from_outcomes([0, 0, 0, 0]),
        ];
        let result = chsh_literal(&trials).unwrap();
        assert_eq!(result.n_complete, 1);
        assert_eq!(result.n_discarded, 2);
    }

    #[test]
    fn literal_empty_ensemble_rejected() {
        let trials = vec![trial_from_outcomes([0, 0, 0, 0])];
        assert_eq!(
            chsh_literal(&trials).unwrap_err(),
            StatsError::EmptyEnsemble
        );
    }

    #[test]
    fn signed_joint_all_plus() {
        let trials = vec![trial_from_outcomes([1, 1, 1, 1])];
        assert_eq!(chsh_signed_joint::<f64>(&trials), Some(2.0));
    }

    #[test]
    fn signed_joint_bounded_for_complete_trials() {
        // All 16 sign patterns, each alone and in a few mixtures.
        let mut patterns = Vec::new();
        for bits in 0..16u8 {
            let sign = |bit: u8| if bits & (1 << bit) == 0 { 1i8 } else { -1 };
            patterns.push([sign(0), sign(1), sign(2), sign(3)]);
        }
        for pattern in &patterns {
            let trials = vec![trial_from_outcomes(*pattern)];
            let s = chsh_signed_joint::<f64>(&trials).unwrap();
            assert!(s.abs() <= 2.0 + 1e-12, "pattern {pattern:?} gave {s}");
            assert!((s.abs() - 2.0).abs() < 1e-12, "per-trial |S| is exactly 2");
        }
        let trials: Vec<TrialRecord> = patterns.iter().map(|p| trial_from_outcomes(*p)).collect();
        let s = chsh_signed_joint::<f64>(&trials).unwrap();
        assert!(s.abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn signed_joint_none_when_component_missing() {
        // b' = 0 everywhere: components 1 and 3 have no nonzero products.
        let trials = vec![trial_from_outcomes([1, 1, 1, 0])];
        assert_eq!(chsh_signed_joint::<f64>(&trials), None);
    }

    #[test]
    fn signed_pairwise_exact() {
        let mut samples = Vec::new();
        for pair in SettingPair::ALL {
            for _ in 0..250 {
                let alice = 1;
                let bob = if pair == SettingPair::ABPrime { -1 } else { 1 };
                samples.push(PairSample::new(pair, alice, bob));
            }
        }
        let s: f64 = chsh_signed_pairwise(&samples).unwrap();
        assert_eq!(s, 4.0);
    }

    #[test]
    fn signed_pairwise_missing_pair_rejected() {
        let samples = vec![PairSample::new(SettingPair::AB, 1, 1)];
        assert_eq!(
            chsh_signed_pairwise::<f64>(&samples).unwrap_err(),
            StatsError::MissingPair(SettingPair::ABPrime)
        );
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // diag(3, 1, 1, 1) rotated by a permutation-free symmetric update:
        // check a hand-verifiable case [[2,1,0,0],[1,2,0,0],[0,0,1,0],[0,0,0,5]]
        // with eigenvalues {1, 3, 1, 5}.
        let m = [
            [2.0_f64, 1.0, 0.0, 0.0],
            [1.0, 2.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 5.0],
        ];
        let mut eigs = symmetric_eigenvalues(&m);
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in eigs.iter().zip([1.0, 1.0, 3.0, 5.0]) {
            assert!((got - want).abs() < 1e-12, "{eigs:?}");
        }
    }

    #[test]
    fn density_matrix_invariants_rejected_when_violated() {
        let asym = [
            [0.5, 0.1, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        assert!(matches!(
            DensityMatrix::new(asym),
            Err(StatsError::InvalidDensityMatrix(_))
        ));

        let bad_trace = [
            [0.9, 0.0, 0.0, 0.0],
            [0.0, 0.9, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        assert!(DensityMatrix::new(bad_trace).is_err());

        let indefinite = [
            [1.5, 0.0, 0.0, 0.0],
            [0.0, -0.5, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        assert!(DensityMatrix::new(indefinite).is_err());
    }

    #[test]
    fn generic_math_agrees_across_scalars() {
        let products = [[1i8, 0, -1, 1], [0, 1, 0, 0], [1, 1, 1, 1]];
        let fine: ChshResult<f64> = chsh_from_products(products).unwrap();
        let coarse: ChshResult<f32> = chsh_from_products(products).unwrap();
        assert!((fine.s_literal - f64::from(coarse.s_literal)).abs() < 1e-5);
    }
}
