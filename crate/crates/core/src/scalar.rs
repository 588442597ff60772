//! Scalar abstraction for the numerical core.
//!
//! The measurement mathematics ([`crate::stats`]) and the descriptive
//! statistics ([`crate::analysis`]) are generic over [`Real`] so they can run
//! in `f32` or `f64`. The harness itself works in `f64`; concrete aliases
//! live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the numerical core is generic over.
pub trait Real:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Tolerance for identities that should hold to rounding error
    /// (trace and symmetry of a density matrix).
    fn strict_tol() -> Self;

    /// Tolerance for the positive-semidefiniteness eigenvalue check.
    fn psd_tol() -> Self;

    fn from_f64_exact(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts into any Real")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts into any Real")
    }
}

impl Real for f64 {
    fn strict_tol() -> Self {
        1e-12
    }

    fn psd_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn strict_tol() -> Self {
        1e-5
    }

    fn psd_tol() -> Self {
        1e-4
    }
}
