//! Analysis of finite-level bilinear quantum control systems.
//!
//! A control system `H = H0 + Σ f_m(t) H_m` is described by a [`ControlSystem`].
//! From it the crate computes the dynamical Lie algebra generated by the
//! skew-Hermitian generators `iH_m` ([`closure`]), identifies orthogonal and
//! symplectic algebras through invariant bilinear forms ([`classify`]),
//! decides reachability of density matrices ([`reachability`]), simulates
//! piecewise-constant controls ([`dynamics`]) and compares dynamically
//! achievable expectation values against their kinematical bound
//! ([`optimizer`]).
//!
//! Units are chosen with ħ = 1.

#![forbid(unsafe_code)]

pub mod classify;
pub mod closure;
pub mod descent;
pub mod dynamics;
pub mod linalg;
pub mod models;
pub mod optimizer;
pub mod reachability;

pub use classify::{
    classify_algebra, controllability_verdict, find_invariant_form, verify_real_structure,
    AlgebraClass, AlgebraTag, ControllabilityVerdict, FormSymmetry, InvariantForm,
};
pub use closure::{algebra_dimension, generate_dynamical_algebra, ClosureOptions, LieAlgebraBasis};
pub use dynamics::{evolve_density, expectation, propagate, ControlPulse, PropagationResult};
pub use linalg::{CMatrix, Hermitian, SkewHermitian};
pub use models::{ControlSystem, OscillatorSpec};
pub use optimizer::{kinematical_bound, maximize_expectation, orbit_bound, OptimizationReport};
pub use reachability::{reachable_verdict, DensityMatrix, ReachabilityVerdict, SearchOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("{what} is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { what: String, deviation: f64 },

    #[error("matrix is not skew-Hermitian (deviation {0:.3e})")]
    NotSkewHermitian(f64),

    #[error("matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors that come from the numerics rather than from bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
