//! Partial and logarithmic derivatives of `π` with respect to an off-diagonal
//! entry `F_ij`, taken along the stochastic-preserving direction
//! `e_i e_jᵀ − e_i e_iᵀ`.
//!
//! With `N = (I − F_i)⁻¹`,
//!
//! ```text
//! ∂π_m/∂F_ij = π_i (N[j][m] − π_m E_j[τ_i])
//! ```
//!
//! and the logarithmic derivative is minimized at `m = i` (value `−π_i E_j[τ_i]`)
//! and maximized at `m = j` (value `1/P_i[τ_j<τ_i] − π_i E_j[τ_i]`).

use crate::error::Result;
use crate::matrix::StochasticMatrix;
use crate::sensitivities::solve_hitting;
use crate::stationary::{occupation_matrix, stationary_distribution, InvariantDistribution};

#[derive(Debug, Clone)]
pub struct DerivativeSlice {
    pub i: usize,
    pub j: usize,
    /// `∂π_m/∂F_ij`
    pub dpi: Vec<f64>,
    /// `∂ log π_m/∂F_ij`
    pub dlogpi: Vec<f64>,
    pub min_val: f64,
    pub argmin: usize,
    pub max_val: f64,
    pub argmax: usize,
    /// `P_i[τ_j < τ_i]`
    pub hit_probability: f64,
    /// `E_j[τ_i]`
    pub expected_hit: f64,
}

impl DerivativeSlice {
    /// `max_m |∂ log π_m/∂F_ij|` over the computed vector.
    pub fn max_abs_log(&self) -> f64 {
        self.dlogpi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn derivative_slice(f: &StochasticMatrix, i: usize, j: usize) -> Result<DerivativeSlice> {
    f.check_pair(i, j)?;
    let pi = stationary_distribution(f)?;
    derivative_slice_with(f, &pi, i, j)
}

/// As [`derivative_slice`], reusing a precomputed invariant distribution.
pub fn derivative_slice_with(
    f: &StochasticMatrix,
    pi: &InvariantDistribution,
    i: usize,
    j: usize,
) -> Result<DerivativeSlice> {
    f.check_pair(i, j)?;
    let occ = occupation_matrix(f, i)?;
    let expected_hit = occ.row_sum(j).expect("j differs from target");
    let pi_i = pi.get(i);
    let dpi: Vec<f64> = (0..f.dim())
        .map(|m| pi_i * (occ.get(j, m).expect("j differs from target") - pi.get(m) * expected_hit))
        .collect();
    let dlogpi: Vec<f64> = dpi.iter().zip(pi.values()).map(|(d, p)| d / p).collect();

    let (q, _) = solve_hitting(f.matrix(), i, j)?;
    let hit_probability = q[i];
    let min_val = -pi_i * expected_hit;
    let max_val = 1.0 / hit_probability + min_val;
    Ok(DerivativeSlice {
        i,
        j,
        dpi,
        dlogpi,
        min_val,
        argmin: i,
        max_val,
        argmax: j,
        hit_probability,
        expected_hit,
    })
}

/// `(½ / P_i[τ_j<τ_i], 1 / P_i[τ_j<τ_i])`, the sandwich for `max_m |∂ log π_m/∂F_ij|`.
pub fn logderiv_bounds(f: &StochasticMatrix, i: usize, j: usize) -> Result<(f64, f64)> {
    f.check_pair(i, j)?;
    let (q, _) = solve_hitting(f.matrix(), i, j)?;
    let upper = 1.0 / q[i];
    Ok((0.5 * upper, upper))
}
