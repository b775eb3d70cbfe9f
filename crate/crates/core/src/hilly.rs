//! Hilly-landscape benchmark chain on the periodic lattice `{1, …, L}`.
//!
//! States follow the 1-based periodic convention (`L + 1 ≡ 1`, `0 ≡ L`); library
//! indices are `state − 1`. The chain moves to a neighbor `i ± 1` with
//! probability `½ π(i±1) / (π(i±1) + π(i))` and stays put otherwise, which puts
//! it in detailed balance with the Gibbs weights `π(i) ∝ exp(−L V(i/L))`.

use std::f64::consts::{E, PI};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{validate_stochastic, DenseMatrix, StochasticMatrix};
use crate::sensitivities::SensitivityMatrix;
use crate::stationary::InvariantDistribution;

/// The α values of the reference sensitivity study.
pub const STUDY_ALPHAS: [f64; 6] = [0.7, 0.8, 0.9, 0.95, 0.98, 1.0];

/// Smallest eigenvalue allowed by Gershgorin for the default potential, `2/(1+e) − 1`.
pub fn gershgorin_floor() -> f64 {
    2.0 / (1.0 + E) - 1.0
}

#[derive(Debug, Clone, Copy)]
pub enum Potential {
    /// `V(x) = cos(4πx) / (4π)`, Lipschitz constant 1.
    Cosine,
    Custom { v: fn(f64) -> f64 },
}

impl Potential {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Potential::Cosine => (4.0 * PI * x).cos() / (4.0 * PI),
            Potential::Custom { v } => v(x),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HillyConfig {
    pub size: usize,
    pub potential: Potential,
    /// Scale for `S = αF`.
    pub alpha: f64,
}

impl HillyConfig {
    pub fn new(size: usize) -> Self {
        HillyConfig {
            size,
            potential: Potential::Cosine,
            alpha: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.size < 4 || self.size % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "lattice size must be even and at least 4, got {}",
                self.size
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }

    /// `V(state / L)` for each 1-based state, in index order.
    fn potential_values(&self) -> Vec<f64> {
        let l = self.size as f64;
        (1..=self.size)
            .map(|s| self.potential.eval(s as f64 / l))
            .collect()
    }

    /// 1-based states where `V` attains its maximum on the grid.
    pub fn peaks(&self) -> Vec<usize> {
        extremal_states(&self.potential_values(), true)
    }

    /// 1-based states where `V` attains its minimum on the grid.
    pub fn valleys(&self) -> Vec<usize> {
        extremal_states(&self.potential_values(), false)
    }
}

fn extremal_states(values: &[f64], max: bool) -> Vec<usize> {
    let best = values.iter().copied().fold(
        if max { f64::NEG_INFINITY } else { f64::INFINITY },
        |a, b| if max { a.max(b) } else { a.min(b) },
    );
    let tol = 1e-12 * best.abs().max(1e-300);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| (**v - best).abs() <= tol)
        .map(|(k, _)| k + 1)
        .collect()
}

/// Library index of a 1-based periodic state.
pub fn state_index(state: i64, size: usize) -> usize {
    (state - 1).rem_euclid(size as i64) as usize
}

/// Number of steps separating two indices on the ring.
pub fn ring_distance(a: usize, b: usize, size: usize) -> usize {
    let d = a.abs_diff(b) % size;
    d.min(size - d)
}

/// Gibbs weights normalized to a probability vector.
pub fn gibbs_weights(cfg: &HillyConfig) -> Vec<f64> {
    let l = cfg.size as f64;
    let energies: Vec<f64> = cfg.potential_values().iter().map(|v| -l * v).collect();
    let top = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = energies.iter().map(|e| (e - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// The transition matrix and its exact Gibbs invariant distribution.
pub fn hilly_matrix(cfg: &HillyConfig) -> Result<(StochasticMatrix, InvariantDistribution)> {
    cfg.validate()?;
    let n = cfg.size;
    let pi = gibbs_weights(cfg);
    let mut f = DenseMatrix::zeros(n);
    for k in 0..n {
        let next = (k + 1) % n;
        let prev = (k + n - 1) % n;
        let up = 0.5 * pi[next] / (pi[next] + pi[k]);
        let down = 0.5 * pi[prev] / (pi[prev] + pi[k]);
        f.set(k, next, up);
        f.set(k, prev, down);
        f.set(k, k, 1.0 - up - down);
    }
    let f = validate_stochastic(f, 1e-12)?;
    let pi = InvariantDistribution::from_vector(&f, pi)?;
    Ok((f, pi))
}

/// `αF` for the configured α.
pub fn scaled_hilly(cfg: &HillyConfig) -> Result<crate::matrix::SubstochasticMatrix> {
    let (f, _) = hilly_matrix(cfg)?;
    crate::matrix::validate_substochastic(f.matrix().scaled(cfg.alpha), 1e-12)
}

/// `max_k |π_k F_{k,k+1} − π_{k+1} F_{k+1,k}|`
pub fn detailed_balance_defect(f: &StochasticMatrix, pi: &InvariantDistribution) -> f64 {
    let n = f.dim();
    (0..n)
        .map(|k| {
            let next = (k + 1) % n;
            (pi.get(k) * f.get(k, next) - pi.get(next) * f.get(next, k)).abs()
        })
        .fold(0.0, f64::max)
}

/// `½ / (1 + e)`, a floor for every neighbor transition under the default potential.
pub fn neighbor_entry_lower_bound(cfg: &HillyConfig) -> Result<f64> {
    match cfg.potential {
        Potential::Cosine => Ok(0.5 / (1.0 + E)),
        Potential::Custom { .. } => Err(Error::NonDefaultPotential),
    }
}

/// `(3α / (2(1+e)))^{d(i,j)}` with `d` the ring distance between indices `i` and `j`.
pub fn random_walk_floor(alpha: f64, i: usize, j: usize, size: usize) -> f64 {
    let base = 3.0 * alpha / (2.0 * (1.0 + E));
    base.powi(ring_distance(i, j, size) as i32)
}

/// `(α / (2(1+e)))^{d(i,j)}`, the floor obtained from `F ≥ 3/(2(1+e)) P` for the lazy
/// ring walk `P` together with `Q_ij(βP) ≥ (β/3)^{d(i,j)}`.
pub fn path_floor(alpha: f64, i: usize, j: usize, size: usize) -> f64 {
    let base = alpha / (2.0 * (1.0 + E));
    base.powi(ring_distance(i, j, size) as i32)
}

/// Entries of `q` (computed for `αF` on a ring of `size` states) below [`random_walk_floor`].
pub fn floor_violations(q: &SensitivityMatrix, alpha: f64) -> Vec<(usize, usize)> {
    violations_of(q, |i, j, size| random_walk_floor(alpha, i, j, size))
}

/// Entries of `q` below [`path_floor`].
pub fn path_floor_violations(q: &SensitivityMatrix, alpha: f64) -> Vec<(usize, usize)> {
    violations_of(q, |i, j, size| path_floor(alpha, i, j, size))
}

fn violations_of(q: &SensitivityMatrix, floor: impl Fn(usize, usize, usize) -> f64) -> Vec<(usize, usize)> {
    let size = q.dim();
    q.iter()
        .filter(|&(i, j, v)| v < floor(i, j, size))
        .map(|(i, j, _)| (i, j))
        .collect()
}

/// `(i, j, −log Q_ij)` with 1-based states.
pub fn heatmap_triples(q: &SensitivityMatrix) -> Vec<(usize, usize, f64)> {
    q.iter().map(|(i, j, v)| (i + 1, j + 1, -v.ln())).collect()
}

#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// `1 − max{|λ| : λ ≠ 1}`
    pub gap: f64,
    /// Smallest real part over the spectrum.
    pub eigen_min: f64,
    /// `Φ(E) = Σ_{i∈E, j∉E} π_i F_ij / π(E)`
    pub bottleneck: f64,
    /// `1 / (4Φ)`
    pub mixing_lb: f64,
    /// Eigenvalue attaining `max{|λ| : λ ≠ 1}` as `(re, im)`.
    pub second: (f64, f64),
    /// `min{|1 − λ| : λ ≠ 1}`
    pub min_one_minus: f64,
    /// Largest imaginary part magnitude over the spectrum.
    pub max_imag: f64,
    pub eigenvalues: Vec<(f64, f64)>,
}

/// Spectrum of a general dense matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &DenseMatrix) -> Result<Vec<(f64, f64)>> {
    let n = m.dim();
    let dm = DMatrix::from_row_slice(n, n, m.as_slice());
    let schur = dm.try_schur(1e-14, 100_000).ok_or(Error::EigenFailure)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect())
}

pub fn spectral_summary(
    f: &StochasticMatrix,
    pi: &InvariantDistribution,
    cut: &[usize],
) -> Result<SpectralSummary> {
    let n = f.dim();
    let mut in_cut = vec![false; n];
    for &c in cut {
        if c >= n {
            return Err(Error::IndexOutOfRange { index: c, dim: n });
        }
        in_cut[c] = true;
    }
    let size = in_cut.iter().filter(|b| **b).count();
    if size == 0 || size == n {
        return Err(Error::InvalidConfig(
            "cut must be a nonempty proper subset of the states".into(),
        ));
    }

    let eig = eigenvalues(f.matrix())?;
    let dist_to_one = |&(re, im): &(f64, f64)| ((re - 1.0).powi(2) + im * im).sqrt();
    let unit = eig
        .iter()
        .enumerate()
        .min_by(|a, b| dist_to_one(a.1).total_cmp(&dist_to_one(b.1)))
        .map(|(k, _)| k)
        .ok_or(Error::EigenFailure)?;
    let rest: Vec<(f64, f64)> = eig
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != unit)
        .map(|(_, v)| *v)
        .collect();
    let modulus = |&(re, im): &(f64, f64)| (re * re + im * im).sqrt();
    let (second, gap, min_one_minus) = if rest.is_empty() {
        ((0.0, 0.0), 1.0, 1.0)
    } else {
        let second = *rest
            .iter()
            .max_by(|a, b| modulus(a).total_cmp(&modulus(b)))
            .expect("nonempty");
        let min_one_minus = rest.iter().map(dist_to_one).fold(f64::INFINITY, f64::min);
        (second, 1.0 - modulus(&second), min_one_minus)
    };

    let mass: f64 = (0..n).filter(|&k| in_cut[k]).map(|k| pi.get(k)).sum();
    let flow: f64 = (0..n)
        .filter(|&k| in_cut[k])
        .flat_map(|k| (0..n).filter(|&m| !in_cut[m]).map(move |m| (k, m)))
        .map(|(k, m)| pi.get(k) * f.get(k, m))
        .sum();
    let bottleneck = flow / mass;

    Ok(SpectralSummary {
        gap,
        eigen_min: eig.iter().map(|e| e.0).fold(f64::INFINITY, f64::min),
        bottleneck,
        mixing_lb: 1.0 / (4.0 * bottleneck),
        second,
        min_one_minus,
        max_imag: eig.iter().map(|e| e.1.abs()).fold(0.0, f64::max),
        eigenvalues: eig,
    })
}

/// One row of the spectral-gap scaling study.
#[derive(Debug, Clone)]
pub struct GapRow {
    pub size: usize,
    pub gap: f64,
    pub log_inv_gap: f64,
    pub bottleneck: f64,
    pub eigen_min: f64,
    pub max_imag: f64,
    /// Eigenvalue attaining the second-largest modulus (real part).
    pub second: f64,
    /// `1 / (L · min|1 − λ|)`
    pub condition_proxy: f64,
}

/// Spectral gap, bottleneck and condition-number proxy for each lattice size,
/// using the cut `E = {1, …, L/2}`.
pub fn gap_scaling_study(sizes: &[usize]) -> Result<Vec<GapRow>> {
    sizes
        .par_iter()
        .map(|&size| {
            if size < 8 {
                return Err(Error::InvalidConfig(format!(
                    "study sizes must be at least 8, got {size}"
                )));
            }
            let (f, pi) = hilly_matrix(&HillyConfig::new(size))?;
            let cut: Vec<usize> = (0..size / 2).collect();
            let s = spectral_summary(&f, &pi, &cut)?;
            Ok(GapRow {
                size,
                gap: s.gap,
                log_inv_gap: -s.gap.ln(),
                bottleneck: s.bottleneck,
                eigen_min: s.eigen_min,
                max_imag: s.max_imag,
                second: s.second.0,
                condition_proxy: 1.0 / (size as f64 * s.min_one_minus),
            })
        })
        .collect()
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
