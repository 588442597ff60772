//! Domain model and measurement mathematics for semantic CHSH Bell tests.
//!
//! [`model`] holds the shared vocabulary (word pairs, templates, settings,
//! sampling configurations, trials), [`stats`] the density-matrix CHSH
//! machinery, [`grid`] the sweep-cell grouping, and [`analysis`] the
//! descriptive statistics and benchmark correlations. The numerical core is
//! generic over the [`scalar::Real`] scalar; the `f64` aliases below are
//! what the harness uses.

pub mod analysis;
pub mod grid;
pub mod model;
pub mod scalar;
pub mod stats;

pub use scalar::Real;

pub type NormalizedVector64 = stats::NormalizedVector<f64>;
pub type DensityMatrix64 = stats::DensityMatrix<f64>;
pub type ChshResult64 = stats::ChshResult<f64>;
pub type DistributionStats64 = analysis::DistributionStats<f64>;
pub type Correlation64 = analysis::Correlation<f64>;
