//! Monte Carlo estimates of the probabilistic quantities behind the
//! deterministic formulas: sensitivities on the ω-augmented chain, occupation
//! times, and the decomposition `P_i[τ_j<τ_i] E_j[τ_i] = E_i[τ_i − τ_j; τ_j<τ_i]`.
//!
//! Every trajectory draws from its own ChaCha8 substream keyed by
//! `(seed, quantity, trajectory index)`, so estimates are bit-for-bit identical
//! regardless of how many threads run them. Per-trajectory outcomes are
//! integers and are summed exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{StochasticMatrix, SubstochasticMatrix};

/// Hard cap on the length of a single trajectory.
pub const STEP_CAP: u64 = 100_000_000;

const TAG_Q: u64 = 0x51;
const TAG_OCCUPATION: u64 = 0x0c;
const TAG_DECOMP_HIT: u64 = 0xd1;
const TAG_DECOMP_RETURN: u64 = 0xd2;
const TAG_DECOMP_DIRECT: u64 = 0xd3;

/// Substochastic chain plus the absorbing state ω receiving `1 − Σ_m S_km`.
#[derive(Debug, Clone)]
pub struct AugmentedChain {
    base: SubstochasticMatrix,
    absorb_prob: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    State(usize),
    Absorbed,
}

impl AugmentedChain {
    pub fn new(base: SubstochasticMatrix) -> Self {
        let n = base.dim();
        let mut absorb_prob = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n * n);
        for r in 0..n {
            let mut acc = 0.0;
            for &v in base.matrix().row(r) {
                acc += v;
                cumulative.push(acc);
            }
            absorb_prob.push((1.0 - acc).max(0.0));
        }
        AugmentedChain {
            base,
            absorb_prob,
            cumulative,
        }
    }

    /// Chain of a stochastic matrix: ω is unreachable.
    pub fn from_stochastic(f: &StochasticMatrix) -> Self {
        let mut chain = AugmentedChain::new(f.to_substochastic());
        chain.absorb_prob.iter_mut().for_each(|p| *p = 0.0);
        chain
    }

    pub fn base(&self) -> &SubstochasticMatrix {
        &self.base
    }

    /// Entry `k` is the probability of jumping from `k` to ω.
    pub fn absorb_prob(&self) -> &[f64] {
        &self.absorb_prob
    }

    /// Inverse-CDF over the row followed by the absorption mass: the first state
    /// whose cumulative sum strictly exceeds `u`, else ω.
    pub fn step_with(&self, from: usize, u: f64) -> Step {
        let n = self.base.dim();
        let row = &self.cumulative[from * n..(from + 1) * n];
        // index of first cumulative value > u
        let k = row.partition_point(|&c| c <= u);
        if k < n {
            Step::State(k)
        } else if self.absorb_prob[from] > 0.0 {
            Step::Absorbed
        } else {
            // round-off at the end of a stochastic row: take the last reachable state
            let last = (0..n)
                .rev()
                .find(|&m| self.base.get(from, m) > 0.0)
                .expect("row has positive mass");
            Step::State(last)
        }
    }

    fn step<R: Rng>(&self, from: usize, rng: &mut R) -> Step {
        self.step_with(from, rng.random::<f64>())
    }
}

/// Point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub point: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the point estimate.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.point - value).abs() <= k * self.stderr
    }

    /// Whether the `k`-σ intervals of `self` and `other` intersect.
    pub fn overlaps(&self, other: &McEstimate, k: f64) -> bool {
        (self.point - other.point).abs() <= k * (self.stderr + other.stderr)
    }

    fn from_sums(sum: u128, sum_sq: u128, n: u64, seed: u64) -> Self {
        let nf = n as f64;
        let mean = sum as f64 / nf;
        let var = if n > 1 {
            ((sum_sq as f64 - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            point: mean,
            stderr: (var / nf).sqrt(),
            n,
            seed,
        }
    }

    fn bernoulli(successes: u64, n: u64, seed: u64) -> Self {
        let p = successes as f64 / n as f64;
        McEstimate {
            point: p,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            n,
            seed,
        }
    }
}

fn substream(seed: u64, tag: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Runs `n` trajectories in parallel and sums their integer outcomes exactly.
fn run_trajectories<F>(n: u64, seed: u64, tag: u64, trajectory: F) -> Result<(u128, u128)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<u64> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(seed, tag, t);
            let v = trajectory(&mut rng)? as u128;
            Ok((v, v * v))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))
}

fn check_pair(dim: usize, i: usize, j: usize) -> Result<()> {
    for idx in [i, j] {
        if idx >= dim {
            return Err(Error::IndexOutOfRange { index: idx, dim });
        }
    }
    if i == j {
        return Err(Error::SameIndex(i));
    }
    Ok(())
}

/// From `i`, does the chain reach `j` before returning to `i` or absorbing?
fn hits_before_return<R: Rng>(chain: &AugmentedChain, i: usize, j: usize, rng: &mut R) -> Result<bool> {
    let mut state = i;
    for _ in 0..STEP_CAP {
        match chain.step(state, rng) {
            Step::Absorbed => return Ok(false),
            Step::State(k) if k == j => return Ok(true),
            Step::State(k) if k == i => return Ok(false),
            Step::State(k) => state = k,
        }
    }
    Err(Error::CapExceeded { cap: STEP_CAP })
}

/// Visits to `count` at times `0..τ_target`, starting from `start`; also returns `τ_target`.
fn visits_before_hit<R: Rng>(
    chain: &AugmentedChain,
    start: usize,
    target: usize,
    count: usize,
    rng: &mut R,
) -> Result<(u64, u64)> {
    let mut state = start;
    let mut visits = u64::from(start == count);
    for t in 1..=STEP_CAP {
        match chain.step(state, rng) {
            Step::Absorbed => unreachable!("stochastic chain absorbed"),
            Step::State(k) if k == target => return Ok((visits, t)),
            Step::State(k) => {
                visits += u64::from(k == count);
                state = k;
            }
        }
    }
    Err(Error::CapExceeded { cap: STEP_CAP })
}

/// Monte Carlo estimate of `Q_ij(S)`.
pub fn estimate_q(
    s: &SubstochasticMatrix,
    i: usize,
    j: usize,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    check_pair(s.dim(), i, j)?;
    let chain = AugmentedChain::new(s.clone());
    let (hits, _) = run_trajectories(n, seed, TAG_Q, |rng| {
        Ok(u64::from(hits_before_return(&chain, i, j, rng)?))
    })?;
    Ok(McEstimate::bernoulli(hits as u64, n, seed))
}

/// Monte Carlo estimate of `E_start[Σ_{s<τ_target} 1_count(X_s)]`.
pub fn estimate_occupation(
    f: &StochasticMatrix,
    start: usize,
    target: usize,
    count: usize,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    check_pair(f.dim(), start, target)?;
    if count >= f.dim() {
        return Err(Error::IndexOutOfRange {
            index: count,
            dim: f.dim(),
        });
    }
    let chain = AugmentedChain::from_stochastic(f);
    let (sum, sum_sq) = run_trajectories(n, seed, TAG_OCCUPATION, |rng| {
        Ok(visits_before_hit(&chain, start, target, count, rng)?.0)
    })?;
    Ok(McEstimate::from_sums(sum, sum_sq, n, seed))
}

/// Both sides of `P_i[τ_j<τ_i] E_j[τ_i] = E_i[τ_i − τ_j; τ_j<τ_i]`.
///
/// The left side multiplies two independent estimates (standard error by the
/// delta method); the right side is estimated directly from excursions of `i`.
pub fn check_decomposition(
    f: &StochasticMatrix,
    i: usize,
    j: usize,
    n: u64,
    seed: u64,
) -> Result<(McEstimate, McEstimate)> {
    if n == 0 {
        return Err(Error::ZeroSamples);
    }
    check_pair(f.dim(), i, j)?;
    let chain = AugmentedChain::from_stochastic(f);

    let (hits, _) = run_trajectories(n, seed, TAG_DECOMP_HIT, |rng| {
        Ok(u64::from(hits_before_return(&chain, i, j, rng)?))
    })?;
    let p = McEstimate::bernoulli(hits as u64, n, seed);
    let (sum, sum_sq) = run_trajectories(n, seed, TAG_DECOMP_RETURN, |rng| {
        Ok(visits_before_hit(&chain, j, i, j, rng)?.1)
    })?;
    let e = McEstimate::from_sums(sum, sum_sq, n, seed);
    let lhs = McEstimate {
        point: p.point * e.point,
        stderr: ((e.point * p.stderr).powi(2) + (p.point * e.stderr).powi(2)).sqrt(),
        n,
        seed,
    };

    let (sum, sum_sq) = run_trajectories(n, seed, TAG_DECOMP_DIRECT, |rng| {
        let mut state = i;
        let mut hit_j_at = None;
        for t in 1..=STEP_CAP {
            match chain.step(state, rng) {
                Step::Absorbed => unreachable!("stochastic chain absorbed"),
                Step::State(k) if k == i => {
                    return Ok(hit_j_at.map_or(0, |tj| t - tj));
                }
                Step::State(k) => {
                    if k == j && hit_j_at.is_none() {
                        hit_j_at = Some(t);
                    }
                    state = k;
                }
            }
        }
        Err(Error::CapExceeded { cap: STEP_CAP })
    })?;
    let rhs = McEstimate::from_sums(sum, sum_sq, n, seed);
    Ok((lhs, rhs))
}
