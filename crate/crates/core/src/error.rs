//! Error types for every subsystem.
//!
//! Each module has its own error enum so callers can match on exactly the
//! failures that operation can produce; [`Error`] is the catch-all for code
//! that mixes subsystems (the CLI, mainly).

use thiserror::Error;

/// Errors from multiplier/box validation and chain decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    /// A multiplier entry was zero (entries must be >= 1).
    #[error("multiplier entry at position {index} is zero; entries must be >= 1")]
    NonPositiveEntry { index: usize },

    /// Every multiplier entry was 1, so no direction ever leaves the box.
    #[error("all multiplier entries are 1; at least one entry must be >= 2")]
    AllOnes,

    /// Two entries share a common factor, which breaks chain disjointness.
    #[error(
        "multiplier entries at positions {first} and {second} share the factor {gcd}; \
         entries must be pairwise coprime (pass the override to proceed anyway)"
    )]
    NotPairwiseCoprime {
        first: usize,
        second: usize,
        gcd: u64,
    },

    /// A box side was zero (sides must be >= 1).
    #[error("box side at position {index} is zero; sides must be >= 1")]
    NonPositiveSide { index: usize },

    /// The product of the box sides does not fit in a u64.
    #[error("box volume overflows u64")]
    VolumeOverflow,

    /// A site coordinate overflowed u64 while following a chain.
    #[error("site coordinate overflows u64 while applying the multiplier map")]
    CoordinateOverflow,

    /// Box and multiplier vector have different dimensions.
    #[error(
        "dimension mismatch: box has {box_dim} coordinates, multiplier vector has {multiplier_dim}"
    )]
    DimensionMismatch {
        box_dim: usize,
        multiplier_dim: usize,
    },

    /// The box has too many sites to enumerate.
    #[error("box volume {volume} exceeds the enumeration guard of {limit} sites")]
    BoxTooLarge { volume: u64, limit: u64 },
}

/// Errors from the transfer-matrix quantities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IsingError {
    /// The spin bias r must lie strictly inside (0, 1).
    #[error("spin bias r = {r} is outside the open interval (0, 1)")]
    BiasOutOfRange { r: f64 },

    /// A non-finite parameter reached a spectral computation.
    #[error("non-finite input: {name} = {value}")]
    NonFiniteInput { name: &'static str, value: f64 },
}

/// Errors from the free-energy evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    /// A weight profile failed validation.
    #[error("invalid weight profile: {0}")]
    InvalidProfile(String),

    /// Series truncation must keep at least one term.
    #[error("series truncation must keep at least one term")]
    EmptyTruncation,

    /// The requested boundary condition is only derived for d = 2.
    #[error(
        "boundary condition {kind} requires a 2-dimensional multiplier vector, got dimension {dim}"
    )]
    UnsupportedDimension { kind: &'static str, dim: usize },

    /// Weighted evaluators exist only at r = 1/2: for biased spins the
    /// per-site transfer matrices stop commuting and no product formula holds.
    #[error(
        "weighted free energy is only defined at r = 1/2 (got r = {r}); for biased spins the \
         site-dependent transfer matrices do not commute, so the factorized formula is unavailable"
    )]
    BiasedWeightsUnsupported { r: f64 },

    #[error(transparent)]
    Lattice(#[from] LatticeError),

    #[error(transparent)]
    Ising(#[from] IsingError),
}

/// Errors from the Legendre-transform solvers and dimension spectra.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RateError {
    /// Bisection did not reach the requested tolerance.
    #[error("root bisection did not converge: bracket [{lo}, {hi}] after {iterations} iterations")]
    NonConvergence { lo: f64, hi: f64, iterations: u32 },

    /// Solver controls failed validation.
    #[error("invalid solver control: {0}")]
    InvalidControl(String),

    #[error(transparent)]
    Energy(#[from] EnergyError),

    /// The level parameter lies outside the spectrum's open domain.
    #[error("level {alpha} is outside the spectrum domain (-{bound}, {bound})")]
    OutOfSpectrumDomain { alpha: f64, bound: f64 },
}

/// Errors from the brute-force / Monte Carlo verification paths.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    /// A spin assignment does not cover the extended support.
    #[error("spin assignment has {got} entries but the extended support has {expected} sites")]
    MissingSite { expected: usize, got: usize },

    /// A rate query had a malformed target or window.
    #[error("invalid rate query: {0}")]
    InvalidQuery(String),

    /// A spin value other than +1/-1 was supplied.
    #[error("spin at support index {index} is {value}; spins must be +1 or -1")]
    InvalidSpin { index: usize, value: i8 },

    /// The extended support is too large for exhaustive enumeration.
    #[error("extended support has {size} sites; exhaustive enumeration is capped at {limit}")]
    SupportTooLarge { size: usize, limit: usize },

    /// The exact distribution helper is capped to moderate volumes.
    #[error("volume {volume} exceeds the exact-distribution cap of {limit}")]
    VolumeTooLarge { volume: u64, limit: u64 },

    /// Monte Carlo estimates need a minimal sample count.
    #[error("{samples} samples requested; Monte Carlo estimates need at least {minimum}")]
    TooFewSamples { samples: u64, minimum: u64 },

    /// Too few samples landed in the target window to report a rate.
    #[error("only {hits} samples hit the target window (at least {minimum} required); widen the window or draw more samples")]
    InsufficientHits { hits: u64, minimum: u64 },

    #[error(transparent)]
    Lattice(#[from] LatticeError),

    #[error(transparent)]
    Ising(#[from] IsingError),
}

/// Errors from parsing the CSV/JSON interchange formats.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Catch-all error for callers that mix subsystems.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Format(#[from] FormatError),
}
