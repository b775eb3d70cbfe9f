//! LU factorization with partial pivoting and the solves built on it.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Pivots below this multiple of `max |A|` are treated as zero.
pub const PIVOT_REL_THRESHOLD: f64 = 1e-13;

/// `P A = L U`, stored packed: unit-lower `L` below the diagonal, `U` on and above.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
    swaps: usize,
}

impl LuFactors {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.dim();
        let threshold = PIVOT_REL_THRESHOLD * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;

        for k in 0..n {
            let (p, pivot_abs) = (k..n)
                .map(|r| (r, lu.get(r, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot_abs > threshold) {
                return Err(Error::SingularMatrix {
                    pivot: pivot_abs,
                    threshold,
                });
            }
            if p != k {
                for c in 0..n {
                    let tmp = lu.get(k, c);
                    lu.set(k, c, lu.get(p, c));
                    lu.set(p, c, tmp);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = lu.get(k, k);
            for r in k + 1..n {
                let factor = lu.get(r, k) / pivot;
                lu.set(r, k, factor);
                if factor == 0.0 {
                    continue;
                }
                for c in k + 1..n {
                    let v = lu.get(r, c) - factor * lu.get(k, c);
                    lu.set(r, c, v);
                }
            }
        }
        Ok(LuFactors { lu, perm, swaps })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let row = self.lu.row(r);
            let s: f64 = row[..r].iter().zip(&x[..r]).map(|(l, v)| l * v).sum();
            x[r] -= s;
        }
        for r in (0..n).rev() {
            let row = self.lu.row(r);
            let s: f64 = row[r + 1..].iter().zip(&x[r + 1..]).map(|(u, v)| u * v).sum();
            x[r] = (x[r] - s) / row[r];
        }
        x
    }

    pub fn determinant(&self) -> f64 {
        let d: f64 = (0..self.dim()).map(|k| self.lu.get(k, k)).product();
        if self.swaps % 2 == 0 {
            d
        } else {
            -d
        }
    }

    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[c] = 1.0;
            let col = self.solve(&e);
            for (r, v) in col.into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }
}

/// Solution of `A x = b` together with `‖A x − b‖_∞`.
#[derive(Debug, Clone)]
pub struct LinearSolution {
    pub x: Vec<f64>,
    pub residual: f64,
}

/// `A⁻¹` together with `‖A A⁻¹ − I‖_∞`.
#[derive(Debug, Clone)]
pub struct MatrixInverse {
    pub inverse: DenseMatrix,
    pub residual: f64,
}

pub fn solve_linear(a: &DenseMatrix, b: &[f64]) -> Result<LinearSolution> {
    if b.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.len(),
        });
    }
    let x = LuFactors::factor(a)?.solve(b);
    let residual = a
        .mul_vec(&x)
        .iter()
        .zip(b)
        .map(|(ax, bi)| (ax - bi).abs())
        .fold(0.0, f64::max);
    Ok(LinearSolution { x, residual })
}

pub fn invert(a: &DenseMatrix) -> Result<MatrixInverse> {
    let inverse = LuFactors::factor(a)?.inverse();
    let mut check = a.matmul(&inverse);
    for k in 0..a.dim() {
        check.set(k, k, check.get(k, k) - 1.0);
    }
    Ok(MatrixInverse {
        residual: check.inf_norm(),
        inverse,
    })
}

pub fn determinant(a: &DenseMatrix) -> Result<f64> {
    Ok(LuFactors::factor(a)?.determinant())
}
