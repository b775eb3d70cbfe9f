//! Sensitivities `Q_ij(S)`: the probability, for the chain `S` augmented by an
//! absorbing state ω that collects the missing row mass, of reaching `j` from `i`
//! before returning to `i` or being absorbed.
//!
//! Two routes are provided:
//!
//! * [`q_vector`] / [`q_single`] solve the first-step linear system
//!   `(I − S_j + S_j e_i e_iᵀ) q = S_{j⊥,j}` for one pair. O(L³) per pair; this
//!   is the oracle.
//! * [`q_all_fast`] inverts `A(1) = I − S + e_1 e_1ᵀ S` once and derives every
//!   `A(j)⁻¹` column it needs through a rank-two Woodbury update with a 2×2
//!   capacitance matrix `C(j)`, giving `Q_ij = A(j)⁻¹_ij / A(j)⁻¹_ii` for all
//!   pairs in one inversion plus O(L²).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{invert, solve_linear};
use crate::matrix::{DenseMatrix, SubstochasticMatrix};

/// Round-off below zero (or above one) that is clamped rather than rejected.
pub const CLAMP_SLACK: f64 = 1e-12;

/// `|det C(j)|` below this multiple of `max(1, max|C(j)|)²` triggers a direct solve for column `j`.
pub const CAPACITANCE_DET_THRESHOLD: f64 = 1e-12;

/// Slack used by [`monotonicity_check`].
pub const MONOTONICITY_SLACK: f64 = 1e-12;

fn certify_probability(state: usize, value: f64, clamped: &mut usize) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if value >= -CLAMP_SLACK && value < 0.0 {
        *clamped += 1;
        Ok(0.0)
    } else if value > 1.0 && value <= 1.0 + CLAMP_SLACK {
        *clamped += 1;
        Ok(1.0)
    } else {
        Err(Error::ProbabilityOutOfRange { state, value })
    }
}

/// Solves the hitting system for `(i, j)` on raw storage; entry `j` of the result is NaN.
///
/// The caller is responsible for irreducibility; the solve itself fails with
/// `SingularMatrix` when the system degenerates.
pub(crate) fn solve_hitting(s: &DenseMatrix, i: usize, j: usize) -> Result<(Vec<f64>, usize)> {
    let n = s.dim();
    let red = |k: usize| if k < j { k } else { k - 1 };
    let full = |r: usize| if r < j { r } else { r + 1 };
    let ri = red(i);
    let m = n - 1;
    let mut a = DenseMatrix::zeros(m);
    let mut rhs = vec![0.0; m];
    for r in 0..m {
        let k = full(r);
        let row = s.row(k);
        let out = a.row_mut(r);
        for (c, o) in out.iter_mut().enumerate() {
            // column i of S_j is removed: paths that return to i stop there
            let sv = if c == ri { 0.0 } else { row[full(c)] };
            *o = if r == c { 1.0 - sv } else { -sv };
        }
        rhs[r] = row[j];
    }
    let sol = solve_linear(&a, &rhs)?;
    let mut clamped = 0;
    let mut q = vec![f64::NAN; n];
    for (r, v) in sol.x.into_iter().enumerate() {
        let k = full(r);
        q[k] = certify_probability(k, v, &mut clamped)?;
    }
    Ok((q, clamped))
}

/// `q_k = P_k[τ_j < min{τ_i, τ_ω}]` for every `k ≠ j`.
#[derive(Debug, Clone)]
pub struct HittingVector {
    i: usize,
    j: usize,
    q: Vec<f64>,
    clamped: usize,
}

impl HittingVector {
    pub fn pair(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    /// `None` for `k = j`.
    pub fn get(&self, k: usize) -> Option<f64> {
        if k == self.j {
            None
        } else {
            Some(self.q[k])
        }
    }

    /// `Q_ij(S)`, the entry at the start state.
    pub fn at_start(&self) -> f64 {
        self.q[self.i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let j = self.j;
        self.q
            .iter()
            .enumerate()
            .filter(move |(k, _)| *k != j)
            .map(|(k, &v)| (k, v))
    }

    /// Number of entries clamped from round-off into `[0, 1]`.
    pub fn clamped(&self) -> usize {
        self.clamped
    }
}

pub fn q_vector(s: &SubstochasticMatrix, i: usize, j: usize) -> Result<HittingVector> {
    s.check_pair(i, j)?;
    s.require_irreducible()?;
    let (q, clamped) = solve_hitting(s.matrix(), i, j)?;
    Ok(HittingVector { i, j, q, clamped })
}

/// Per-pair oracle for `Q_ij(S)`.
pub fn q_single(s: &SubstochasticMatrix, i: usize, j: usize) -> Result<f64> {
    Ok(q_vector(s, i, j)?.at_start())
}

/// Which route produced a [`SensitivityMatrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivitySource {
    Oracle,
    Fast,
}

impl SensitivitySource {
    pub fn as_str(self) -> &'static str {
        match self {
            SensitivitySource::Oracle => "oracle",
            SensitivitySource::Fast => "fast",
        }
    }
}

/// All `Q_ij(S)` for `i ≠ j`. The diagonal is unset.
#[derive(Debug, Clone)]
pub struct SensitivityMatrix {
    dim: usize,
    values: Vec<f64>,
    source: SensitivitySource,
    base: SubstochasticMatrix,
    fallback_columns: Vec<usize>,
    clamped: usize,
}

impl SensitivityMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Q_ij`, `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            None
        } else {
            Some(self.values[i * self.dim + j])
        }
    }

    /// `Q_ij⁻¹`, `None` on the diagonal.
    pub fn inverse_sensitivity(&self, i: usize, j: usize) -> Option<f64> {
        self.get(i, j).map(|q| 1.0 / q)
    }

    /// Off-diagonal `(i, j, Q_ij)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.dim;
        (0..n)
            .flat_map(move |i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(move |(i, j)| (i, j, self.values[i * n + j]))
    }

    pub fn source(&self) -> SensitivitySource {
        self.source
    }

    /// The lower envelope `S` these sensitivities belong to.
    pub fn base(&self) -> &SubstochasticMatrix {
        &self.base
    }

    /// Columns `j` where `C(j)` was too ill-conditioned and a direct solve was used.
    pub fn fallback_columns(&self) -> &[usize] {
        &self.fallback_columns
    }

    pub fn clamped(&self) -> usize {
        self.clamped
    }

    /// Largest relative difference over off-diagonal entries.
    pub fn max_relative_difference(&self, other: &SensitivityMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.iter()
            .zip(other.iter())
            .map(|((_, _, a), (_, _, b))| {
                let scale = a.abs().max(b.abs());
                if scale == 0.0 {
                    0.0
                } else {
                    (a - b).abs() / scale
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Runs the oracle on every pair.
pub fn q_all_oracle(s: &SubstochasticMatrix) -> Result<SensitivityMatrix> {
    s.require_irreducible()?;
    let n = s.dim();
    let columns = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut col = vec![f64::NAN; n];
            let mut clamped = 0;
            for (i, slot) in col.iter_mut().enumerate() {
                if i != j {
                    let (q, c) = solve_hitting(s.matrix(), i, j)?;
                    *slot = q[i];
                    clamped += c;
                }
            }
            Ok((col, clamped))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(s, columns, SensitivitySource::Oracle, Vec::new()))
}

fn assemble(
    s: &SubstochasticMatrix,
    columns: Vec<(Vec<f64>, usize)>,
    source: SensitivitySource,
    fallback_columns: Vec<usize>,
) -> SensitivityMatrix {
    let n = s.dim();
    let mut values = vec![f64::NAN; n * n];
    let mut clamped = 0;
    for (j, (col, c)) in columns.into_iter().enumerate() {
        clamped += c;
        for (i, v) in col.into_iter().enumerate() {
            values[i * n + j] = v;
        }
    }
    SensitivityMatrix {
        dim: n,
        values,
        source,
        base: s.clone(),
        fallback_columns,
        clamped,
    }
}

/// Shared state of the fast algorithm: `A(1)⁻¹` and `S A(1)⁻¹`, with state 0 as
/// the reference column.
#[derive(Debug, Clone)]
pub struct AlgorithmWorkspace {
    a1_inv: DenseMatrix,
    s_a1_inv: DenseMatrix,
    residual: f64,
}

impl AlgorithmWorkspace {
    pub fn new(s: &SubstochasticMatrix) -> Result<Self> {
        s.require_irreducible()?;
        let sm = s.matrix();
        let n = sm.dim();
        // A(1) = I − S + e_1 e_1ᵀ S: row 0 becomes e_0ᵀ
        let mut a1 = sm.identity_minus();
        a1.row_mut(0).iter_mut().enumerate().for_each(|(c, v)| {
            *v = if c == 0 { 1.0 } else { 0.0 };
        });
        let inv = invert(&a1)?;
        let a1_inv = inv.inverse;

        // S A(1)⁻¹ in O(L²): rows k ≠ 0 equal A(1)⁻¹ minus the identity,
        // row 0 is S_{0,·} A(1)⁻¹.
        let mut s_a1_inv = a1_inv.clone();
        for k in 1..n {
            s_a1_inv.set(k, k, s_a1_inv.get(k, k) - 1.0);
        }
        let row0 = a1_inv.vec_mul(sm.row(0));
        s_a1_inv.row_mut(0).copy_from_slice(&row0);

        Ok(AlgorithmWorkspace {
            a1_inv,
            s_a1_inv,
            residual: inv.residual,
        })
    }

    pub fn a1_inverse(&self) -> &DenseMatrix {
        &self.a1_inv
    }

    pub fn s_times_a1_inverse(&self) -> &DenseMatrix {
        &self.s_a1_inv
    }

    /// `‖A(1) A(1)⁻¹ − I‖_∞`
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `C(j) = I + (e_jᵀ; e_1ᵀ) S A(1)⁻¹ (e_j, −e_1)`, for `j ≠ 0`.
    pub fn capacitance(&self, j: usize) -> [[f64; 2]; 2] {
        let m = &self.s_a1_inv;
        [
            [1.0 + m.get(j, j), -m.get(j, 0)],
            [m.get(0, j), 1.0 - m.get(0, 0)],
        ]
    }

    /// Column `j` of `Q`, or `None` when `C(j)` is too ill-conditioned.
    fn column(&self, j: usize) -> Option<Vec<f64>> {
        let n = self.a1_inv.dim();
        let ainv = &self.a1_inv;
        let m = &self.s_a1_inv;
        let mut col = vec![f64::NAN; n];
        if j == 0 {
            for (i, slot) in col.iter_mut().enumerate().skip(1) {
                *slot = ainv.get(i, 0) / ainv.get(i, i);
            }
            return Some(col);
        }

        let c = self.capacitance(j);
        let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
        let scale = c
            .iter()
            .flatten()
            .fold(1.0_f64, |acc, v| acc.max(v.abs()));
        if !(det.abs() >= CAPACITANCE_DET_THRESHOLD * scale * scale) {
            return None;
        }
        let cinv = [
            [c[1][1] / det, -c[0][1] / det],
            [-c[1][0] / det, c[0][0] / det],
        ];
        let apply = |x: f64, y: f64| {
            (
                cinv[0][0] * x + cinv[0][1] * y,
                cinv[1][0] * x + cinv[1][1] * y,
            )
        };

        // A(j)⁻¹ e_j = A(1)⁻¹ e_j − (A(1)⁻¹e_j, −A(1)⁻¹e_1) C⁻¹ (M_jj, M_1j)
        let (wj, w1) = apply(m.get(j, j), m.get(0, j));
        for (i, slot) in col.iter_mut().enumerate() {
            if i == j {
                continue;
            }
            let aij = ainv.get(i, j);
            let ai1 = ainv.get(i, 0);
            let off = aij - (aij * wj - ai1 * w1);
            // A(j)⁻¹_ii = A(1)⁻¹_ii − (A(1)⁻¹_ij, −A(1)⁻¹_i1) C⁻¹ (M_ji, M_1i)
            let (vj, v1) = apply(m.get(j, i), m.get(0, i));
            let diag = ainv.get(i, i) - (aij * vj - ai1 * v1);
            *slot = off / diag;
        }
        Some(col)
    }
}

/// Direct route for one column: `Q_ij = A(j)⁻¹_ij / A(j)⁻¹_ii`.
fn column_direct(s: &DenseMatrix, j: usize) -> Result<Vec<f64>> {
    let n = s.dim();
    let mut aj = s.identity_minus();
    aj.row_mut(j).iter_mut().enumerate().for_each(|(c, v)| {
        *v = if c == j { 1.0 } else { 0.0 };
    });
    let inv = invert(&aj)?.inverse;
    Ok((0..n)
        .map(|i| {
            if i == j {
                f64::NAN
            } else {
                inv.get(i, j) / inv.get(i, i)
            }
        })
        .collect())
}

/// All sensitivities from a single L×L inversion plus O(L²) work.
pub fn q_all_fast(s: &SubstochasticMatrix) -> Result<SensitivityMatrix> {
    s.require_irreducible()?;
    let n = s.dim();
    if n == 1 {
        return Ok(assemble(s, vec![(vec![f64::NAN], 0)], SensitivitySource::Fast, Vec::new()));
    }
    let ws = AlgorithmWorkspace::new(s)?;
    let results = (0..n)
        .into_par_iter()
        .map(|j| {
            let (raw, fell_back) = match ws.column(j) {
                Some(col) => (col, false),
                None => (column_direct(s.matrix(), j)?, true),
            };
            let mut clamped = 0;
            let mut col = raw;
            for (i, v) in col.iter_mut().enumerate() {
                if i != j {
                    *v = certify_probability(i, *v, &mut clamped)?;
                }
            }
            Ok(((col, clamped), fell_back))
        })
        .collect::<Result<Vec<_>>>()?;
    let fallback_columns = results
        .iter()
        .enumerate()
        .filter(|(_, (_, f))| *f)
        .map(|(j, _)| j)
        .collect();
    let columns = results.into_iter().map(|(c, _)| c).collect();
    Ok(assemble(s, columns, SensitivitySource::Fast, fallback_columns))
}

/// Checks `Q(S_big) ≥ Q(S_small)` entrywise.
pub fn monotonicity_check(
    small: &SubstochasticMatrix,
    big: &SubstochasticMatrix,
) -> Result<bool> {
    if small.dim() != big.dim() {
        return Err(Error::DimensionMismatch {
            expected: small.dim(),
            found: big.dim(),
        });
    }
    if let Some((row, col)) = big.matrix().first_below(small.matrix()) {
        return Err(Error::NotDominated { row, col });
    }
    small.require_irreducible()?;
    let q_small = q_all_fast(small)?;
    // S_big ≥ S_small inherits irreducibility
    let q_big = q_all_fast(big)?;
    let holds = q_small
        .iter()
        .zip(q_big.iter())
        .all(|((_, _, a), (_, _, b))| b >= a - MONOTONICITY_SLACK);
    Ok(holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::validate_substochastic;

    fn sub(rows: &[&[f64]]) -> SubstochasticMatrix {
        validate_substochastic(DenseMatrix::from_rows(rows).unwrap(), 1e-12).unwrap()
    }

    fn ring(scale: f64) -> SubstochasticMatrix {
        let v = scale / 3.0;
        sub(&[&[v, v, v], &[v, v, v], &[v, v, v]])
    }

    #[test]
    fn two_state_half() {
        let s = sub(&[&[0.4, 0.1], &[0.15, 0.35]]);
        let q = q_vector(&s, 0, 1).unwrap();
        assert!((q.at_start() - 0.1).abs() < 1e-16);
        assert_eq!(q.get(1), None);
    }

    #[test]
    fn ring_two_thirds() {
        let s = ring(2.0 / 3.0);
        let q = q_vector(&s, 0, 1).unwrap();
        assert!((q.get(0).unwrap() - 2.0 / 7.0).abs() < 1e-15);
        assert!((q.get(2).unwrap() - 2.0 / 7.0).abs() < 1e-15);
        assert!((q_single(&s, 0, 1).unwrap() - 2.0 / 7.0).abs() < 1e-15);
        let fast = q_all_fast(&s).unwrap();
        for (_, _, v) in fast.iter() {
            assert!((v - 2.0 / 7.0).abs() < 1e-15);
        }
        assert_eq!(fast.get(1, 1), None);
        assert_eq!(fast.source(), SensitivitySource::Fast);
    }

    #[test]
    fn stochastic_two_state() {
        let s = sub(&[&[0.8, 0.2], &[0.3, 0.7]]);
        assert!((q_single(&s, 0, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!((q_single(&s, 1, 0).unwrap() - 0.3).abs() < 1e-15);
        let fast = q_all_fast(&s).unwrap();
        assert!((fast.get(0, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!((fast.get(1, 0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unreachable_without_return_is_zero() {
        // from 0 the only way to 2 passes through 1 ... and 1 only returns to 0
        let s = sub(&[&[0.0, 0.5, 0.0], &[0.5, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert!(!s.is_irreducible());
        assert!(matches!(q_single(&s, 0, 2), Err(Error::Reducible { .. })));
        assert!(matches!(q_all_fast(&s), Err(Error::Reducible { .. })));
    }

    #[test]
    fn same_index_rejected() {
        assert!(matches!(q_single(&ring(0.5), 1, 1), Err(Error::SameIndex(1))));
    }

    #[test]
    fn workspace_product_matches_direct() {
        let s = sub(&[
            &[0.1, 0.3, 0.0, 0.2],
            &[0.0, 0.2, 0.5, 0.1],
            &[0.3, 0.0, 0.1, 0.4],
            &[0.25, 0.25, 0.25, 0.0],
        ]);
        let ws = AlgorithmWorkspace::new(&s).unwrap();
        let direct = s.matrix().matmul(ws.a1_inverse());
        for r in 0..4 {
            for c in 0..4 {
                assert!((direct.get(r, c) - ws.s_times_a1_inverse().get(r, c)).abs() < 1e-14);
            }
        }
        assert!(ws.residual() < 1e-13);
        let oracle = q_all_oracle(&s).unwrap();
        let fast = q_all_fast(&s).unwrap();
        assert!(fast.max_relative_difference(&oracle) < 1e-12);
    }

    #[test]
    fn single_state_is_empty() {
        let s = sub(&[&[0.5]]);
        let q = q_all_fast(&s).unwrap();
        assert_eq!(q.iter().count(), 0);
    }

    #[test]
    fn monotonicity_examples() {
        let s = ring(0.6);
        assert!(monotonicity_check(&s, &s).unwrap());
        assert!(monotonicity_check(&ring(0.5), &ring(0.9)).unwrap());
        assert!(matches!(
            monotonicity_check(&ring(0.9), &ring(0.5)),
            Err(Error::NotDominated { .. })
        ));
    }

    #[test]
    fn direct_column_matches_update() {
        let s = ring(0.8);
        let col = column_direct(s.matrix(), 2).unwrap();
        let ws = AlgorithmWorkspace::new(&s).unwrap();
        let upd = ws.column(2).unwrap();
        for i in 0..2 {
            assert!((col[i] - upd[i]).abs() < 1e-15);
        }
    }
}
