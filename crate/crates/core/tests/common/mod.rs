#![allow(dead_code)]

use mcsense::{validate_stochastic, validate_substochastic, DenseMatrix, StochasticMatrix, SubstochasticMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nonnegative weights on a random sparsity pattern that always contains the
/// cycle `k → k+1` and the diagonal.
fn ring_weights(rng: &mut ChaCha8Rng, n: usize, density: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let forced = c == (r + 1) % n || c == r;
            if forced || rng.random_bool(density) {
                m.set(r, c, 0.05 + rng.random::<f64>());
            }
        }
    }
    m
}

fn scale_rows(m: &mut DenseMatrix, targets: &[f64]) {
    for (r, t) in targets.iter().enumerate() {
        let sum: f64 = m.row(r).iter().sum();
        m.row_mut(r).iter_mut().for_each(|v| *v *= t / sum);
    }
}

/// Irreducible substochastic matrix with row sums drawn from `[lo, hi]`.
pub fn random_substochastic(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SubstochasticMatrix {
    let density = rng.random_range(0.1..0.9);
    let mut m = ring_weights(rng, n, density);
    let targets: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    scale_rows(&mut m, &targets);
    validate_substochastic(m, 1e-12).unwrap()
}

/// Irreducible stochastic matrix with positive diagonal.
pub fn random_stochastic(rng: &mut ChaCha8Rng, n: usize) -> StochasticMatrix {
    let density = rng.random_range(0.1..0.9);
    let mut m = ring_weights(rng, n, density);
    scale_rows(&mut m, &vec![1.0; n]);
    validate_stochastic(m, 1e-12).unwrap()
}

/// Stochastic `F ≥ S` spreading each row's slack over a random nonempty set of columns.
pub fn random_completion(rng: &mut ChaCha8Rng, s: &SubstochasticMatrix) -> StochasticMatrix {
    let n = s.dim();
    let mut f = s.matrix().clone();
    for r in 0..n {
        let slack = 1.0 - f.row(r).iter().sum::<f64>();
        if slack <= 0.0 {
            continue;
        }
        let mut w: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.4) { rng.random::<f64>() } else { 0.0 })
            .collect();
        let pick = rng.random_range(0..n);
        w[pick] += 0.1;
        let total: f64 = w.iter().sum();
        for c in 0..n {
            f.set(r, c, f.get(r, c) + slack * w[c] / total);
        }
    }
    validate_stochastic(f, 1e-12).unwrap()
}

/// Same off-diagonal sparsity as `f`, positive entries rescaled by factors in `[1/spread, spread]`.
pub fn same_pattern_perturbation(rng: &mut ChaCha8Rng, f: &StochasticMatrix, spread: f64) -> StochasticMatrix {
    let n = f.dim();
    let mut m = f.matrix().clone();
    for r in 0..n {
        for c in 0..n {
            let v = m.get(r, c);
            if v > 0.0 {
                let t: f64 = rng.random_range(-1.0..=1.0);
                m.set(r, c, v * spread.powf(t));
            }
        }
    }
    scale_rows(&mut m, &vec![1.0; n]);
    validate_stochastic(m, 1e-12).unwrap()
}

pub fn stochastic(rows: &[&[f64]]) -> StochasticMatrix {
    validate_stochastic(DenseMatrix::from_rows(rows).unwrap(), 1e-12).unwrap()
}

pub fn substochastic(rows: &[&[f64]]) -> SubstochasticMatrix {
    validate_substochastic(DenseMatrix::from_rows(rows).unwrap(), 1e-12).unwrap()
}

/// Lazy ring walk: stay, left and right each with probability 1/3.
pub fn ring_walk(n: usize, beta: f64) -> SubstochasticMatrix {
    let mut m = DenseMatrix::zeros(n);
    for k in 0..n {
        for c in [k, (k + 1) % n, (k + n - 1) % n] {
            m.set(k, c, m.get(k, c) + beta / 3.0);
        }
    }
    validate_substochastic(m, 1e-12).unwrap()
}

/// `max(|a − b|) / max(|b|, tiny)`
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
