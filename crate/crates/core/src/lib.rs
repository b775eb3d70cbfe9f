//! Invariant distributions of finite Markov chains, entrywise sensitivities
//! `Q_ij(S)` and global relative-error perturbation bounds.
//!
//! States are 0-based throughout the library. The `mcsense` binary reads and
//! prints 1-based states.

pub mod bounds;
pub mod cli;
pub mod derivatives;
pub mod error;
pub mod hilly;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod mc_verify;
pub mod sensitivities;
pub mod stationary;

pub use error::{Error, Result};
pub use matrix::{
    validate_stochastic, validate_substochastic, DenseMatrix, StochasticMatrix,
    SubstochasticMatrix, DEFAULT_ROW_SUM_TOL,
};
pub use sensitivities::{q_all_fast, q_all_oracle, q_single, q_vector, SensitivityMatrix};
pub use stationary::{stationary_distribution, InvariantDistribution};
