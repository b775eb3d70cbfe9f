//! Dense square matrices and the certified stochastic / substochastic wrappers
//! every other module works with.

use std::fmt;

use crate::error::{Error, Result};

/// Default slack allowed on row sums before a matrix is rejected.
pub const DEFAULT_ROW_SUM_TOL: f64 = 1e-12;

/// Square row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

impl DenseMatrix {
    /// Builds a matrix from row-major data of length `dim * dim`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty);
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    row: r,
                    cols: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        DenseMatrix::new(dim, data)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        DenseMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = DenseMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.dim + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    #[inline]
    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        let d = self.dim;
        &mut self.data[row * d..(row + 1) * d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|r| r.iter().sum()).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let n = self.dim;
        let mut t = DenseMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                t.data[c * n + r] = self.data[r * n + c];
            }
        }
        t
    }

    pub fn scaled(&self, alpha: f64) -> DenseMatrix {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for r in 0..n {
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        self.rows()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᵀ * self`
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut out = vec![0.0; self.dim];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(r)) {
                *o += xr * a;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// The matrix with row and column `removed` deleted.
    pub fn principal_submatrix(&self, removed: usize) -> DenseMatrix {
        PrincipalSubmatrixView::new(self, removed).to_dense()
    }

    /// `I - self`
    pub fn identity_minus(&self) -> DenseMatrix {
        let n = self.dim;
        let mut out = self.scaled(-1.0);
        for i in 0..n {
            out.data[i * n + i] += 1.0;
        }
        out
    }

    /// True when every entry of `self` is at least the corresponding entry of `other`.
    pub fn dominates(&self, other: &DenseMatrix) -> bool {
        self.first_below(other).is_none()
    }

    /// First position where `self < other`, row-major.
    pub fn first_below(&self, other: &DenseMatrix) -> Option<(usize, usize)> {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .position(|(a, b)| a < b)
            .map(|p| (p / self.dim, p % self.dim))
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.dim {
            Err(Error::IndexOutOfRange {
                index,
                dim: self.dim,
            })
        } else {
            Ok(())
        }
    }
}

/// The operator `S_j`: the parent matrix with row and column `j` removed.
///
/// Reduced index `r` maps to parent index `r` when `r < j` and `r + 1` otherwise.
#[derive(Debug, Clone, Copy)]
pub struct PrincipalSubmatrixView<'a> {
    parent: &'a DenseMatrix,
    removed: usize,
}

impl<'a> PrincipalSubmatrixView<'a> {
    pub fn new(parent: &'a DenseMatrix, removed: usize) -> Self {
        assert!(removed < parent.dim(), "removed index out of range");
        PrincipalSubmatrixView { parent, removed }
    }

    pub fn dim(&self) -> usize {
        self.parent.dim() - 1
    }

    pub fn removed(&self) -> usize {
        self.removed
    }

    #[inline]
    pub fn parent_index(&self, reduced: usize) -> usize {
        if reduced < self.removed {
            reduced
        } else {
            reduced + 1
        }
    }

    /// Reduced index of a parent state, `None` for the removed state.
    #[inline]
    pub fn reduced_index(&self, parent: usize) -> Option<usize> {
        use std::cmp::Ordering::*;
        match parent.cmp(&self.removed) {
            Less => Some(parent),
            Equal => None,
            Greater => Some(parent - 1),
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.parent
            .get(self.parent_index(row), self.parent_index(col))
    }

    /// Materializes the `(L-1) x (L-1)` submatrix. Panics when `L == 1`.
    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(self.get(r, c));
            }
        }
        DenseMatrix { dim: n, data }
    }
}

/// Certified irreducible row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    inner: DenseMatrix,
    tolerance: f64,
}

impl StochasticMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner.get(row, col)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.inner
    }

    /// Views the matrix as an (irreducible) substochastic matrix.
    pub fn to_substochastic(&self) -> SubstochasticMatrix {
        SubstochasticMatrix {
            inner: self.inner.clone(),
            tolerance: self.tolerance,
            irreducible: true,
        }
    }

    pub(crate) fn check_state(&self, index: usize) -> Result<()> {
        self.inner.check_index(index)
    }

    pub(crate) fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_state(i)?;
        self.check_state(j)?;
        if i == j {
            return Err(Error::SameIndex(i));
        }
        Ok(())
    }
}

/// Certified nonnegative matrix with row sums at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstochasticMatrix {
    inner: DenseMatrix,
    tolerance: f64,
    irreducible: bool,
}

impl SubstochasticMatrix {
    pub fn matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner.get(row, col)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    /// `1 - sum_m S_km`, clamped at zero.
    pub fn row_slack(&self, row: usize) -> f64 {
        (1.0 - self.inner.row(row).iter().sum::<f64>()).max(0.0)
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.inner
    }

    /// Errors with the component breakdown unless the irreducibility certificate is set.
    pub fn require_irreducible(&self) -> Result<()> {
        if self.irreducible {
            Ok(())
        } else {
            Err(Error::Reducible {
                components: strongly_connected_components(&self.inner),
            })
        }
    }

    pub(crate) fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.inner.check_index(i)?;
        self.inner.check_index(j)?;
        if i == j {
            return Err(Error::SameIndex(i));
        }
        Ok(())
    }
}

fn check_nonnegative(m: &DenseMatrix) -> Result<()> {
    for r in 0..m.dim() {
        for (c, &v) in m.row(r).iter().enumerate() {
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Certifies `m` as irreducible and row-stochastic, renormalizing each row to sum to one.
pub fn validate_stochastic(m: DenseMatrix, tol: f64) -> Result<StochasticMatrix> {
    check_nonnegative(&m)?;
    let mut m = m;
    for r in 0..m.dim() {
        let sum: f64 = m.row(r).iter().sum();
        if !((sum - 1.0).abs() <= tol) {
            return Err(Error::RowSumOutOfTolerance { row: r, sum, tol });
        }
        if sum != 1.0 {
            m.row_mut(r).iter_mut().for_each(|v| *v /= sum);
        }
    }
    if !is_irreducible(&m) {
        return Err(Error::Reducible {
            components: strongly_connected_components(&m),
        });
    }
    Ok(StochasticMatrix {
        inner: m,
        tolerance: tol,
    })
}

/// Certifies `m` as substochastic and records whether it is irreducible.
pub fn validate_substochastic(m: DenseMatrix, tol: f64) -> Result<SubstochasticMatrix> {
    check_nonnegative(&m)?;
    for r in 0..m.dim() {
        let sum: f64 = m.row(r).iter().sum();
        if sum > 1.0 + tol {
            return Err(Error::RowSumExceedsOne { row: r, sum, tol });
        }
    }
    let irreducible = is_irreducible(&m);
    Ok(SubstochasticMatrix {
        inner: m,
        tolerance: tol,
        irreducible,
    })
}

/// Strong connectivity of the digraph with an edge `i -> j` whenever `i != j` and `M_ij > 0`.
pub fn is_irreducible(m: &DenseMatrix) -> bool {
    strongly_connected_components(m).len() == 1
}

/// Strongly connected components of the off-diagonal support of `m`, each
/// sorted, listed in order of their smallest state.
///
/// Iterative Tarjan; the exact zero pattern decides the edges.
pub fn strongly_connected_components(m: &DenseMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        // (node, next neighbor to scan)
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&(v, start)) = call.last() {
            let row = m.row(v);
            let mut child = None;
            let mut next = start;
            while next < n {
                let w = next;
                next += 1;
                if w == v || !(row[w] > 0.0) {
                    continue;
                }
                if index[w] == UNVISITED {
                    child = Some(w);
                    break;
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            }
            if let Some(w) = child {
                call.last_mut().expect("frame").1 = next;
                index[w] = next_index;
                lowlink[w] = next_index;
                next_index += 1;
                stack.push(w);
                on_stack[w] = true;
                call.push((w, 0));
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[v]);
            }
            if lowlink[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
        }
    }
    components.sort_by_key(|c| c[0]);
    components
}
