//! Global relative-error bounds for `π` under a perturbation `F → F̃`, given a
//! lower envelope `S ≤ F, F̃`, together with the baseline bounds they are
//! compared against.
//!
//! All errors and bounds are reported on the natural-log scale,
//! `max_m |log π_m(F̃) − log π_m(F)|`. Baselines that bound the ratio error
//! `|π̃_m/π_m − 1| ≤ b` are converted with `−log(1 − b)` (infinite when `b ≥ 1`).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{
    validate_stochastic, validate_substochastic, DenseMatrix, StochasticMatrix,
    SubstochasticMatrix,
};
use crate::sensitivities::{q_all_fast, SensitivityMatrix, SensitivitySource};
use crate::stationary::{
    expected_hitting_times, occupation_matrix, stationary_distribution, InvariantDistribution,
};

/// Entries of `F` or `F̃` may sit this far below `S` and still count as dominating it
/// (absorbs row renormalization round-off).
pub const DOMINATION_SLACK: f64 = 1e-14;

/// `S_ij = max{F̃_ij − α_ij, 0}`. The irreducibility flag of the result may be false.
pub fn lower_envelope(ftilde: &StochasticMatrix, alpha: &DenseMatrix) -> Result<SubstochasticMatrix> {
    let n = ftilde.dim();
    if alpha.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: alpha.dim(),
        });
    }
    let mut s = DenseMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let a = alpha.get(r, c);
            if a < 0.0 {
                return Err(Error::NegativeEntry {
                    row: r,
                    col: c,
                    value: a,
                });
            }
            s.set(r, c, (ftilde.get(r, c) - a).max(0.0));
        }
    }
    validate_substochastic(s, ftilde.tolerance().max(1e-12))
}

/// Entrywise minimum of `F` and `F̃`: the largest `S` below both.
pub fn entrywise_min(f: &StochasticMatrix, ftilde: &StochasticMatrix) -> Result<SubstochasticMatrix> {
    check_same_dim(f, ftilde)?;
    let n = f.dim();
    let data = f
        .matrix()
        .as_slice()
        .iter()
        .zip(ftilde.matrix().as_slice())
        .map(|(a, b)| a.min(*b))
        .collect();
    validate_substochastic(DenseMatrix::new(n, data)?, 1e-12)
}

fn check_same_dim(f: &StochasticMatrix, ftilde: &StochasticMatrix) -> Result<()> {
    if f.dim() != ftilde.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: ftilde.dim(),
        });
    }
    Ok(())
}

/// `|log π_m(F̃) − log π_m(F)|` for every state.
pub fn log_errors(pi: &InvariantDistribution, pi_tilde: &InvariantDistribution) -> Vec<f64> {
    pi.values()
        .iter()
        .zip(pi_tilde.values())
        .map(|(a, b)| (b.ln() - a.ln()).abs())
        .collect()
}

/// `max_m |log π_m(F̃) − log π_m(F)|`. States are compared positionally.
pub fn true_relative_error(f: &StochasticMatrix, ftilde: &StochasticMatrix) -> Result<f64> {
    check_same_dim(f, ftilde)?;
    let pi = stationary_distribution(f)?;
    let pt = stationary_distribution(ftilde)?;
    Ok(log_errors(&pi, &pt).into_iter().fold(0.0, f64::max))
}

fn check_domination(which: &'static str, m: &StochasticMatrix, s: &SubstochasticMatrix) -> Result<()> {
    if m.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            found: m.dim(),
        });
    }
    for r in 0..s.dim() {
        for c in 0..s.dim() {
            let (value, lower) = (m.get(r, c), s.get(r, c));
            if value < lower - DOMINATION_SLACK {
                return Err(Error::DominationViolated {
                    which,
                    row: r,
                    col: c,
                    value,
                    lower,
                });
            }
        }
    }
    Ok(())
}

fn check_inputs(
    f: &StochasticMatrix,
    ftilde: &StochasticMatrix,
    q: &SensitivityMatrix,
) -> Result<()> {
    let s = q.base();
    s.require_irreducible()?;
    check_domination("F", f, s)?;
    check_domination("F~", ftilde, s)
}

/// `Σ_{i≠j} |log(F̃_ij − S_ij + Q_ij) − log(F_ij − S_ij + Q_ij)|`
pub fn bound_log_form(
    f: &StochasticMatrix,
    ftilde: &StochasticMatrix,
    s: &SubstochasticMatrix,
    q: &SensitivityMatrix,
) -> Result<f64> {
    if q.base() != s {
        return Err(Error::EnvelopeMismatch);
    }
    check_inputs(f, ftilde, q)?;
    Ok(q
        .iter()
        .filter(|&(i, j, _)| ftilde.get(i, j) != f.get(i, j))
        .map(|(i, j, qij)| {
            let sij = s.get(i, j);
            let a = (ftilde.get(i, j) - sij).max(0.0) + qij;
            let b = (f.get(i, j) - sij).max(0.0) + qij;
            (a.ln() - b.ln()).abs()
        })
        .sum())
}

/// `Σ_{i≠j} |F̃_ij − F_ij| / Q_ij`, with `S` taken from the sensitivities' metadata.
pub fn bound_linear_form(
    f: &StochasticMatrix,
    ftilde: &StochasticMatrix,
    q: &SensitivityMatrix,
) -> Result<f64> {
    check_inputs(f, ftilde, q)?;
    Ok(q
        .iter()
        .filter(|&(i, j, _)| ftilde.get(i, j) != f.get(i, j))
        .map(|(i, j, qij)| (ftilde.get(i, j) - f.get(i, j)).abs() / qij)
        .sum())
}

/// Stochastic pair `(F, F^η)` above `S` whose invariant distributions differ by at
/// least half of what the bound allows for the entry `(i, j)`.
///
/// `F` moves all row slack into column `i`; `F^η = F + η(e_i e_jᵀ − e_i e_iᵀ)`.
pub fn sharpness_witness(
    s: &SubstochasticMatrix,
    i: usize,
    j: usize,
    eta: f64,
) -> Result<(StochasticMatrix, StochasticMatrix)> {
    s.check_pair(i, j)?;
    s.require_irreducible()?;
    let slack = s.row_slack(i);
    if !(slack > 0.0) {
        return Err(Error::NoSlack { row: i });
    }
    if !(eta > 0.0 && eta < slack) {
        return Err(Error::EtaTooLarge { eta, slack });
    }
    let n = s.dim();
    let mut f = s.matrix().clone();
    for k in 0..n {
        let others: f64 = (0..n).filter(|&m| m != i).map(|m| s.get(k, m)).sum();
        f.set(k, i, 1.0 - others);
    }
    let mut feta = f.clone();
    feta.set(i, j, feta.get(i, j) + eta);
    feta.set(i, i, feta.get(i, i) - eta);
    Ok((validate_stochastic(f, 1e-12)?, validate_stochastic(feta, 1e-12)?))
}

/// `κ_i = ‖(I − F_i)⁻¹‖_∞` for every state.
pub fn ipsen_meyer_kappas(f: &StochasticMatrix) -> Result<Vec<f64>> {
    (0..f.dim())
        .into_par_iter()
        .map(|i| Ok(occupation_matrix(f, i)?.inf_norm()))
        .collect()
}

/// Per-state ratio bound `κ_i ‖(F̃ − F)(I − e_i e_iᵀ)‖_∞`.
pub fn ipsen_meyer_bounds(
    kappas: &[f64],
    f: &StochasticMatrix,
    ftilde: &StochasticMatrix,
) -> Vec<f64> {
    let n = f.dim();
    (0..n)
        .map(|i| {
            let norm = (0..n)
                .map(|r| {
                    (0..n)
                        .filter(|&c| c != i)
                        .map(|c| (ftilde.get(r, c) - f.get(r, c)).abs())
                        .sum::<f64>()
                })
                .fold(0.0, f64::max);
            kappas[i] * norm
        })
        .collect()
}

/// `L · log(max_{i≠j} max{F̃_ij/F_ij, F_ij/F̃_ij})`, absent when the off-diagonal
/// sparsity patterns differ.
pub fn ocinneide_bound(f: &StochasticMatrix, ftilde: &StochasticMatrix) -> Option<f64> {
    if f.dim() != ftilde.dim() {
        return None;
    }
    let n = f.dim();
    let mut worst = 1.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (f.get(i, j), ftilde.get(i, j));
            match (a > 0.0, b > 0.0) {
                (true, true) => worst = worst.max((a / b).max(b / a)),
                (false, false) => {}
                _ => return None,
            }
        }
    }
    Some(n as f64 * worst.ln())
}

/// `β_ij = max_m |(1−δ_jm) E_j[τ_m] − (1−δ_im) E_i[τ_m]|` for `i ≠ j`.
#[derive(Debug, Clone)]
pub struct ChoMeyerCoefficients {
    dim: usize,
    beta: Vec<f64>,
}

impl ChoMeyerCoefficients {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            None
        } else {
            Some(self.beta[i * self.dim + j])
        }
    }

    /// Ratio-scale bound `Σ_{i≠j} β_ij |F̃_ij − F_ij|`.
    pub fn bound(&self, f: &StochasticMatrix, ftilde: &StochasticMatrix) -> f64 {
        let n = self.dim;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    total += self.beta[i * n + j] * (ftilde.get(i, j) - f.get(i, j)).abs();
                }
            }
        }
        total
    }
}

/// Zero-diagonal mean first passage matrix, `K[j][m] = E_j[τ_m]` for `j ≠ m`.
pub fn mean_first_passage(f: &StochasticMatrix) -> Result<DenseMatrix> {
    let n = f.dim();
    let columns = (0..n)
        .into_par_iter()
        .map(|m| expected_hitting_times(f, m))
        .collect::<Result<Vec<_>>>()?;
    let mut k = DenseMatrix::zeros(n);
    for (m, col) in columns.into_iter().enumerate() {
        for (j, v) in col.into_iter().enumerate() {
            if j != m {
                k.set(j, m, v);
            }
        }
    }
    Ok(k)
}

pub fn cho_meyer_beta(f: &StochasticMatrix) -> Result<ChoMeyerCoefficients> {
    let n = f.dim();
    let k = mean_first_passage(f)?;
    let mut beta = vec![f64::NAN; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                beta[i * n + j] = (0..n)
                    .map(|m| (k.get(j, m) - k.get(i, m)).abs())
                    .fold(0.0, f64::max);
            }
        }
    }
    Ok(ChoMeyerCoefficients { dim: n, beta })
}

/// Exact first-passage expansion of the relative change,
///
/// ```text
/// (π_m(F̃) − π_m(F)) / π_m(F) = Σ_{i≠j} π_i(F̃) (K[i][m] − K[j][m]) (F̃_ij − F_ij)
/// ```
///
/// with `K` the zero-diagonal mean first passage matrix of `F`.
pub fn cho_meyer_expansion(f: &StochasticMatrix, ftilde: &StochasticMatrix) -> Result<Vec<f64>> {
    check_same_dim(f, ftilde)?;
    let n = f.dim();
    let k = mean_first_passage(f)?;
    let pt = stationary_distribution(ftilde)?;
    Ok((0..n)
        .map(|m| {
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        let d = ftilde.get(i, j) - f.get(i, j);
                        if d != 0.0 {
                            total += pt.get(i) * (k.get(i, m) - k.get(j, m)) * d;
                        }
                    }
                }
            }
            total
        })
        .collect())
}

/// `−log(1 − b)`: log-scale version of a ratio-error bound `b`.
pub fn ratio_bound_to_log(b: f64) -> f64 {
    if b < 1.0 {
        -(1.0 - b).ln()
    } else {
        f64::INFINITY
    }
}

/// Everything the CLI reports for one `(F, F̃, S)` triple.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub true_error: f64,
    pub log_form: f64,
    pub linear_form: f64,
    /// `κ_i` per state.
    pub ipsen_meyer: Vec<f64>,
    /// `max_i −log(1 − κ_i ‖ΔF (I − e_i e_iᵀ)‖_∞)`
    pub ipsen_meyer_bound: f64,
    pub ocinneide: Option<f64>,
    /// `−log(1 − Σ β_ij |ΔF_ij|)`
    pub cho_meyer_bound: f64,
    /// `Σ β_ij |ΔF_ij|`
    pub cho_meyer_ratio: f64,
    pub envelope: SubstochasticMatrix,
    pub q_source: SensitivitySource,
    pub fallback_columns: usize,
}

/// Runs every bound. Without `s`, the entrywise minimum of `F` and `F̃` is used.
pub fn bound_report(
    f: &StochasticMatrix,
    ftilde: &StochasticMatrix,
    s: Option<SubstochasticMatrix>,
) -> Result<BoundReport> {
    check_same_dim(f, ftilde)?;
    let s = match s {
        Some(s) => s,
        None => entrywise_min(f, ftilde)?,
    };
    s.require_irreducible()?;
    check_domination("F", f, &s)?;
    check_domination("F~", ftilde, &s)?;
    let q = q_all_fast(&s)?;
    let true_error = true_relative_error(f, ftilde)?;
    let log_form = bound_log_form(f, ftilde, &s, &q)?;
    let linear_form = bound_linear_form(f, ftilde, &q)?;
    let kappas = ipsen_meyer_kappas(f)?;
    let ipsen_meyer_bound = ipsen_meyer_bounds(&kappas, f, ftilde)
        .into_iter()
        .map(ratio_bound_to_log)
        .fold(0.0, f64::max);
    let beta = cho_meyer_beta(f)?;
    let cho_meyer_ratio = beta.bound(f, ftilde);
    Ok(BoundReport {
        true_error,
        log_form,
        linear_form,
        ipsen_meyer: kappas,
        ipsen_meyer_bound,
        ocinneide: ocinneide_bound(f, ftilde),
        cho_meyer_bound: ratio_bound_to_log(cho_meyer_ratio),
        cho_meyer_ratio,
        envelope: s,
        q_source: q.source(),
        fallback_columns: q.fallback_columns().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stoch(rows: &[[f64; 2]]) -> StochasticMatrix {
        validate_stochastic(DenseMatrix::from_rows(rows).unwrap(), 1e-12).unwrap()
    }

    fn pair() -> (StochasticMatrix, StochasticMatrix) {
        (
            stoch(&[[0.8, 0.2], [0.3, 0.7]]),
            stoch(&[[0.78, 0.22], [0.3, 0.7]]),
        )
    }

    #[test]
    fn envelope_examples() {
        let (_, ft) = pair();
        let f = stoch(&[[0.8, 0.2], [0.3, 0.7]]);
        let s = lower_envelope(&f, &DenseMatrix::from_rows(&[[0.05; 2]; 2]).unwrap()).unwrap();
        let expect = [[0.75, 0.15], [0.25, 0.65]];
        for r in 0..2 {
            for c in 0..2 {
                assert!((s.get(r, c) - expect[r][c]).abs() < 1e-15);
            }
        }
        let s0 = lower_envelope(&ft, &DenseMatrix::zeros(2)).unwrap();
        assert_eq!(s0.matrix(), ft.matrix());
        let s1 = lower_envelope(&f, &DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap())
            .unwrap();
        assert_eq!(s1.get(0, 1), 0.0);
        assert!(!s1.is_irreducible());
    }

    #[test]
    fn two_state_errors() {
        let (f, ft) = pair();
        assert_eq!(true_relative_error(&f, &f).unwrap(), 0.0);
        let pi = stationary_distribution(&f).unwrap();
        let pt = stationary_distribution(&ft).unwrap();
        let errs = log_errors(&pi, &pt);
        assert!((errs[0] - 0.039_220_713_153_281_35).abs() < 1e-12);
        assert!((errs[1] - 0.056_089_466_651_043_53).abs() < 1e-12);
        assert!((true_relative_error(&f, &ft).unwrap() - errs[1]).abs() < 1e-15);
    }

    #[test]
    fn two_state_bounds() {
        let (f, ft) = pair();
        let s = entrywise_min(&f, &ft).unwrap();
        let q = q_all_fast(&s).unwrap();
        assert!((q.get(0, 1).unwrap() - 0.2).abs() < 1e-15);
        let lf = bound_log_form(&f, &ft, &s, &q).unwrap();
        assert!((lf - (0.22_f64 / 0.2).ln()).abs() < 1e-12);
        let lin = bound_linear_form(&f, &ft, &q).unwrap();
        assert!((lin - 0.1).abs() < 1e-12);
        assert!(lf <= lin);
        assert_eq!(bound_log_form(&f, &f, &s, &q).unwrap(), 0.0);
        assert_eq!(bound_linear_form(&f, &f, &q).unwrap(), 0.0);
    }

    #[test]
    fn domination_violation() {
        let (f, ft) = pair();
        let s = validate_substochastic(
            DenseMatrix::from_rows(&[[0.79, 0.2], [0.3, 0.7]]).unwrap(),
            1e-12,
        )
        .unwrap();
        let q = q_all_fast(&s).unwrap();
        assert!(matches!(
            bound_linear_form(&f, &ft, &q),
            Err(Error::DominationViolated { which: "F~", row: 0, col: 0, .. })
        ));
        let other = entrywise_min(&f, &ft).unwrap();
        assert!(matches!(
            bound_log_form(&f, &ft, &other, &q),
            Err(Error::EnvelopeMismatch)
        ));
    }

    #[test]
    fn ocinneide_examples() {
        let (f, ft) = pair();
        let b = ocinneide_bound(&f, &ft).unwrap();
        assert!((b - 2.0 * 1.1_f64.ln()).abs() < 1e-12);
        assert_eq!(ocinneide_bound(&f, &f), Some(0.0));
        let g = validate_stochastic(
            DenseMatrix::from_rows(&[[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]).unwrap(),
            1e-12,
        )
        .unwrap();
        let gt = validate_stochastic(
            DenseMatrix::from_rows(&[[0.4, 0.5, 0.1], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]]).unwrap(),
            1e-12,
        )
        .unwrap();
        assert_eq!(ocinneide_bound(&g, &gt), None);
    }

    #[test]
    fn kappas_and_beta() {
        let (f, _) = pair();
        let k = ipsen_meyer_kappas(&f).unwrap();
        assert!((k[0] - 10.0 / 3.0).abs() < 1e-14);
        assert!((k[1] - 5.0).abs() < 1e-14);
        let beta = cho_meyer_beta(&f).unwrap();
        assert!((beta.get(0, 1).unwrap() - 5.0).abs() < 1e-14);
        assert_eq!(beta.get(1, 1), None);
    }

    #[test]
    fn expansion_two_state() {
        let (f, ft) = pair();
        let pred = cho_meyer_expansion(&f, &ft).unwrap();
        let pi = stationary_distribution(&f).unwrap();
        let pt = stationary_distribution(&ft).unwrap();
        for m in 0..2 {
            let actual = (pt.get(m) - pi.get(m)) / pi.get(m);
            assert!((pred[m] - actual).abs() < 1e-14, "{m}: {} vs {actual}", pred[m]);
        }
    }

    #[test]
    fn witness_ring() {
        let v = 2.0 / 9.0;
        let s = validate_substochastic(DenseMatrix::from_rows(&[[v; 3]; 3]).unwrap(), 1e-12).unwrap();
        let (f, feta) = sharpness_witness(&s, 0, 1, 0.01).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                let d = feta.get(r, c) - f.get(r, c);
                if (r, c) == (0, 1) {
                    assert!((d - 0.01).abs() < 1e-15);
                } else if (r, c) == (0, 0) {
                    assert!((d + 0.01).abs() < 1e-15);
                } else {
                    assert_eq!(d, 0.0);
                }
            }
        }
        let err = true_relative_error(&f, &feta).unwrap();
        assert!(err >= 0.5 * 0.01 / (2.0 / 7.0 + 1e-3));
    }

    #[test]
    fn witness_without_slack() {
        let (f, _) = pair();
        let s = f.to_substochastic();
        assert!(matches!(sharpness_witness(&s, 0, 1, 1e-3), Err(Error::NoSlack { row: 0 })));
        let half = validate_substochastic(f.matrix().scaled(0.5), 1e-12).unwrap();
        assert!(matches!(
            sharpness_witness(&half, 0, 1, 0.6),
            Err(Error::EtaTooLarge { .. })
        ));
    }

    #[test]
    fn report_two_state() {
        let (f, ft) = pair();
        let r = bound_report(&f, &ft, None).unwrap();
        assert!(r.true_error <= r.log_form && r.log_form <= r.linear_form);
        assert!((r.linear_form - 0.1).abs() < 1e-12);
        assert!(r.ocinneide.unwrap() >= r.true_error);
    }
}
