//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A continuum integral does not converge for the requested parameters,
    /// e.g. the propagator at coincident points with delta <= 2N.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    /// An inverse transform produced an imaginary residue too large to discard.
    #[error("input is not Hermitian-symmetric: imaginary residue {residual:e} exceeds {limit:e}")]
    NotHermitian { residual: f64, limit: f64 },

    /// The linear system of the free source problem has no unique solution.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A constructor argument violates a documented invariant.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// An operation requiring a zero-mean field received one with nonzero mean.
    #[error("field is not in the Lizorkin subspace: coefficient sum {sum:e}")]
    NotLizorkin { sum: f64 },

    /// A combinatorial enumeration would exceed its documented cap.
    #[error("{what} ({requested}) exceeds the cap of {cap}")]
    TooLarge {
        what: String,
        requested: u64,
        cap: u64,
    },

    /// The lattice would exceed the configured point budget.
    #[error("capacity guard: {points} lattice points exceed the maximum of {max}")]
    CapacityExceeded { points: u128, max: u64 },
}
