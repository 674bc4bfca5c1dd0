//! Error type shared by all library modules.

use thiserror::Error;

/// Everything that can go wrong while building states, geometry, observables,
/// or evaluating the witness. Variants carry enough context to name the
/// offending quantity in user-facing messages.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("site index {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("level index {level} out of range 1..={local_dim}")]
    LevelOutOfRange { level: usize, local_dim: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("state vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("matrix is not Hermitian: max |M - M^dag| element = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix trace is not 1: |tr - 1| = {deviation:.3e}")]
    TraceNotOne { deviation: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue = {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("noise fraction {p} outside [0, 1]")]
    InvalidNoise { p: f64 },

    #[error("invalid state parameters: {context}")]
    InvalidState { context: String },

    #[error("direction vector is not unit length: |norm - 1| = {deviation:.3e}")]
    NonUnitDirection { deviation: f64 },

    #[error("vector must have unit norm: |norm - 1| = {deviation:.3e}")]
    NonUnitVector { deviation: f64 },

    #[error("positions must be finite")]
    NonFinitePosition,

    #[error("emitter array must contain at least one site")]
    EmptyArray,

    #[error("transition pair ({alpha},{beta}) is invalid: {context}")]
    InvalidPair {
        alpha: usize,
        beta: usize,
        context: String,
    },

    #[error("transition ({alpha},{beta}) is forbidden; no dipole/polarization is defined for it")]
    ForbiddenTransition { alpha: usize, beta: usize },

    #[error("projected dipole vanishes along this direction; its transverse phase is undefined")]
    ZeroProjectedDipole,

    #[error("dipole phase is only defined for real dipole vectors (transverse part had imaginary norm {imaginary_norm:.3e})")]
    ComplexDipolePhase { imaginary_norm: f64 },

    #[error("angular grid invalid: {context}")]
    InvalidGrid { context: String },

    #[error("witness fields do not share a grid: {context}")]
    GridMismatch { context: String },

    #[error("mirror check requires real dipoles on every allowed transition")]
    MirrorRequiresRealDipoles,

    #[error("invalid parameter: {context}")]
    InvalidParameter { context: String },
}

impl Error {
    /// Shorthand for dimension-mismatch errors.
    pub fn dim(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }
}
