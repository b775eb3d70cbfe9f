//! Invariant distributions, first-passage quantities and occupation-time matrices.
//!
//! For a target state `i`, the occupation matrix `N = (I − F_i)⁻¹` counts the
//! expected visits to `m` before the first hit of `i` when started from `j`. Its
//! row sums are the mean hitting times `E_j[τ_i]`, and first-step analysis then
//! yields the mean return time `E_i[τ_i] = 1/π_i`.

use crate::error::{Error, Result};
use crate::linalg::{determinant, invert, solve_linear};
use crate::matrix::{DenseMatrix, PrincipalSubmatrixView, StochasticMatrix};
use crate::sensitivities::solve_hitting;

/// Strictly positive probability vector with `πᵀF = πᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantDistribution {
    pi: Vec<f64>,
    residual: f64,
}

impl InvariantDistribution {
    /// Wraps a probability vector, normalizing it and recording `‖πᵀF − πᵀ‖_∞`.
    pub fn from_vector(f: &StochasticMatrix, mut pi: Vec<f64>) -> Result<Self> {
        if pi.len() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: pi.len(),
            });
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        let residual = stationarity_residual(f.matrix(), &pi);
        Ok(InvariantDistribution { pi, residual })
    }

    pub fn values(&self) -> &[f64] {
        &self.pi
    }

    pub fn get(&self, state: usize) -> f64 {
        self.pi[state]
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.pi
    }
}

/// `‖πᵀF − πᵀ‖_∞`
pub fn stationarity_residual(f: &DenseMatrix, pi: &[f64]) -> f64 {
    f.vec_mul(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Solves `(I − Fᵀ)π = 0`, `eᵀπ = 1` with the last balance equation replaced by
/// the normalization row.
pub fn stationary_distribution(f: &StochasticMatrix) -> Result<InvariantDistribution> {
    let n = f.dim();
    let mut a = f.matrix().identity_minus().transpose();
    a.row_mut(n - 1).iter_mut().for_each(|v| *v = 1.0);
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    let sol = solve_linear(&a, &rhs)?;
    InvariantDistribution::from_vector(f, sol.x)
}

/// `π_i ∝ det(I − F_i)`, one LU determinant per principal submatrix.
///
/// O(L⁴); kept as an independent cross-check of [`stationary_distribution`].
pub fn stationary_via_minors(f: &StochasticMatrix) -> Result<InvariantDistribution> {
    let n = f.dim();
    if n == 1 {
        return InvariantDistribution::from_vector(f, vec![1.0]);
    }
    let minors = (0..n)
        .map(|i| determinant(&f.matrix().principal_submatrix(i).identity_minus()))
        .collect::<Result<Vec<_>>>()?;
    InvariantDistribution::from_vector(f, minors)
}

/// `N = (I − F_i)⁻¹` on the states other than `target`.
#[derive(Debug, Clone)]
pub struct OccupationMatrix {
    target: usize,
    dim: usize,
    // (dim-1) x (dim-1), reduced indices
    values: Vec<f64>,
    residual: f64,
}

impl OccupationMatrix {
    pub fn target(&self) -> usize {
        self.target
    }

    /// Number of states of the full chain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn reduced(&self, state: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match state.cmp(&self.target) {
            Less => Some(state),
            Equal => None,
            Greater => Some(state - 1),
        }
    }

    /// `E_j[Σ_{s<τ_i} 1_m(X_s)]` for `j ≠ i`; zero when `m = i`.
    ///
    /// Returns `None` when `start` is the target state.
    pub fn get(&self, start: usize, count: usize) -> Option<f64> {
        let r = self.reduced(start)?;
        Some(match self.reduced(count) {
            Some(c) => self.values[r * (self.dim - 1) + c],
            None => 0.0,
        })
    }

    /// Row sum for `start`, i.e. `E_start[τ_target]`.
    pub fn row_sum(&self, start: usize) -> Option<f64> {
        let r = self.reduced(start)?;
        let w = self.dim - 1;
        Some(self.values[r * w..(r + 1) * w].iter().sum())
    }

    /// Maximum absolute row sum, `‖(I − F_i)⁻¹‖_∞`.
    pub fn inf_norm(&self) -> f64 {
        let w = self.dim - 1;
        if w == 0 {
            return 0.0;
        }
        self.values
            .chunks_exact(w)
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖(I − F_i) N − I‖_∞` from the inversion.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn occupation_matrix(f: &StochasticMatrix, target: usize) -> Result<OccupationMatrix> {
    f.check_state(target)?;
    let n = f.dim();
    if n == 1 {
        return Ok(OccupationMatrix {
            target,
            dim: 1,
            values: Vec::new(),
            residual: 0.0,
        });
    }
    let reduced = PrincipalSubmatrixView::new(f.matrix(), target)
        .to_dense()
        .identity_minus();
    let inv = invert(&reduced)?;
    Ok(OccupationMatrix {
        target,
        dim: n,
        values: inv.inverse.into_vec(),
        residual: inv.residual,
    })
}

/// First-passage summary for one target state `i`.
#[derive(Debug, Clone)]
pub struct PassageStats {
    target: usize,
    expected_hit: Vec<f64>,
    hit_before_return: Vec<Option<f64>>,
}

impl PassageStats {
    pub fn target(&self) -> usize {
        self.target
    }

    /// Entry `j` is `E_j[τ_i]`; entry `i` is the mean return time `E_i[τ_i]`.
    pub fn expected_hit(&self) -> &[f64] {
        &self.expected_hit
    }

    pub fn mean_return_time(&self) -> f64 {
        self.expected_hit[self.target]
    }

    /// `P_i[τ_j < τ_i]`, `None` for `j = i`.
    pub fn hit_before_return(&self, j: usize) -> Option<f64> {
        self.hit_before_return[j]
    }
}

/// Mean hitting times `E_j[τ_i]` for all `j`, with `E_i[τ_i]` by first-step analysis.
pub fn expected_hitting_times(f: &StochasticMatrix, target: usize) -> Result<Vec<f64>> {
    let occ = occupation_matrix(f, target)?;
    Ok(hitting_times_from_occupation(f, &occ))
}

pub(crate) fn hitting_times_from_occupation(
    f: &StochasticMatrix,
    occ: &OccupationMatrix,
) -> Vec<f64> {
    let target = occ.target();
    let mut hit: Vec<f64> = (0..f.dim())
        .map(|j| occ.row_sum(j).unwrap_or(0.0))
        .collect();
    let ret = 1.0
        + f.matrix()
            .row(target)
            .iter()
            .zip(&hit)
            .enumerate()
            .filter(|(j, _)| *j != target)
            .map(|(_, (p, h))| p * h)
            .sum::<f64>();
    hit[target] = ret;
    hit
}

pub fn passage_stats(f: &StochasticMatrix, target: usize) -> Result<PassageStats> {
    let expected_hit = expected_hitting_times(f, target)?;
    let hit_before_return = (0..f.dim())
        .map(|j| {
            if j == target {
                Ok(None)
            } else {
                let (q, _) = solve_hitting(f.matrix(), target, j)?;
                Ok(Some(q[target]))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PassageStats {
        target,
        expected_hit,
        hit_before_return,
    })
}
