//! End-to-end acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use common::*;
use mcsense::bounds::*;
use mcsense::derivatives::derivative_slice_with;
use mcsense::hilly::{self, HillyConfig, STUDY_ALPHAS};
use mcsense::mc_verify::{check_decomposition, estimate_occupation, estimate_q};
use mcsense::stationary::occupation_matrix;
use mcsense::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

type Outcome = (bool, String);

/// Invariant distribution by an independent dense solve; tolerates slightly negative entries.
fn pi_oracle(f: &DenseMatrix) -> Vec<f64> {
    let n = f.dim();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = f64::from(r == c) - f.get(c, r);
        }
    }
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    a.lu().solve(&b).expect("nonsingular").iter().copied().collect()
}

/// `E_j[τ_i]` for all `j ≠ i` by an independent dense solve of `(I − F_i) h = 1`.
fn hitting_oracle(f: &DenseMatrix, i: usize) -> Vec<(usize, f64)> {
    let n = f.dim();
    let idx: Vec<usize> = (0..n).filter(|&k| k != i).collect();
    let m = idx.len();
    let a = DMatrix::from_fn(m, m, |r, c| f64::from(r == c) - f.get(idx[r], idx[c]));
    let h = a.lu().solve(&DVector::from_element(m, 1.0)).expect("nonsingular");
    idx.into_iter().zip(h.iter().copied()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let results: Vec<(usize, f64)> = (0..200u64)
        .into_par_iter()
        .map(|k| {
            let mut r = rng(1000 + k);
            let n = 2 + (k as usize * 48) / 199;
            let hi = if k % 4 == 0 { 1.0 } else { r.random_range(0.6..1.0) };
            let s = random_substochastic(&mut r, n, 0.5_f64.min(hi), hi);
            let fast = q_all_fast(&s).unwrap();
            let worst = fast
                .iter()
                .map(|(i, j, q)| rel_err(q, q_single(&s, i, j).unwrap()))
                .fold(0.0, f64::max);
            (n, worst)
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let max_n = results.iter().map(|r| r.0).max().unwrap();
    (
        worst <= 1e-10 && secs < 60.0,
        format!("200 matrices, L up to {max_n}: max relative error {worst:.2e}, {secs:.2} s"),
    )
}

fn derivative_sweep() -> Vec<StochasticMatrix> {
    (0..50u64)
        .map(|k| {
            let mut r = rng(2000 + k);
            let n = 2 + (k as usize % 9);
            random_stochastic(&mut r, n)
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let eps = 1e-6;
    let mut worst_fd: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut pairs = 0;
    for f in derivative_sweep() {
        let n = f.dim();
        let pi = stationary_distribution(&f).unwrap();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let d = derivative_slice_with(&f, &pi, i, j).unwrap();
                let shifted = |sign: f64| {
                    let mut m = f.matrix().clone();
                    m.set(i, j, m.get(i, j) + sign * eps);
                    m.set(i, i, m.get(i, i) - sign * eps);
                    pi_oracle(&m)
                };
                let (up, down) = (shifted(1.0), shifted(-1.0));
                let scale = d.dpi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let err = (0..n)
                    .map(|m| ((up[m] - down[m]) / (2.0 * eps) - d.dpi[m]).abs())
                    .fold(0.0, f64::max);
                worst_fd = worst_fd.max(err / scale);
                worst_sum = worst_sum.max(d.dpi.iter().sum::<f64>().abs());
                pairs += 1;
            }
        }
    }
    (
        worst_fd <= 1e-5 && worst_sum <= 1e-10,
        format!("{pairs} pairs: finite-difference relative error {worst_fd:.2e}, |sum| {worst_sum:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut arg_failures = 0;
    let mut pairs = 0;
    for f in derivative_sweep() {
        let n = f.dim();
        let pi = stationary_distribution(&f).unwrap();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let d = derivative_slice_with(&f, &pi, i, j).unwrap();
                let max = d.dlogpi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = d.dlogpi.iter().copied().fold(f64::INFINITY, f64::min);
                let p = q_single(&f.to_substochastic(), i, j).unwrap();
                worst = worst.max(((max - min) - 1.0 / p).abs() / (1.0 / p).max(1.0));
                let tie = 1e-12 * (max - min).abs().max(1.0);
                if d.dlogpi[i] > min + tie || d.dlogpi[j] < max - tie {
                    arg_failures += 1;
                }
                pairs += 1;
            }
        }
    }
    (
        worst <= 1e-10 && arg_failures == 0,
        format!("{pairs} pairs: spread vs 1/P error {worst:.2e}, argmin/argmax failures {arg_failures}"),
    )
}

fn criterion_4() -> Outcome {
    let violations: Vec<(u64, f64, f64, f64)> = (0..1000u64)
        .into_par_iter()
        .filter_map(|k| {
            let mut r = rng(4000 + k);
            let n = r.random_range(2..=20);
            let s = random_substochastic(&mut r, n, 0.3, 0.95);
            let f = random_completion(&mut r, &s);
            let ft = random_completion(&mut r, &s);
            let q = q_all_fast(&s).unwrap();
            let te = true_relative_error(&f, &ft).unwrap();
            let lf = bound_log_form(&f, &ft, &s, &q).unwrap();
            let lin = bound_linear_form(&f, &ft, &q).unwrap();
            (te > lf + 1e-12 || lf > lin + 1e-12).then_some((k, te, lf, lin))
        })
        .collect();
    (
        violations.is_empty(),
        format!("1000 triples, L <= 20: {} ordering violations {:?}", violations.len(), violations.first()),
    )
}

fn criterion_5() -> Outcome {
    let eta = 1e-4;
    let eps = 1e-3;
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for k in 0..100u64 {
        let mut r = rng(5000 + k);
        let n = r.random_range(2..=15);
        let s = random_substochastic(&mut r, n, 0.3, 0.95);
        let i = r.random_range(0..n);
        let j = (i + r.random_range(1..n)) % n;
        let (f, fe) = sharpness_witness(&s, i, j, eta).unwrap();
        let achieved = true_relative_error(&f, &fe).unwrap();
        let needed = 0.5 / (q_single(&s, i, j).unwrap() + eps) * eta;
        min_ratio = min_ratio.min(achieved / needed);
        if achieved < needed {
            violations += 1;
        }
    }
    (
        violations == 0,
        format!("100 witnesses at eta = 1e-4: {violations} violations, min achieved/required {min_ratio:.4}"),
    )
}

fn criterion_6() -> Outcome {
    const N: u64 = 100_000;
    let ring = substochastic(&[&[2.0 / 9.0; 3], &[2.0 / 9.0; 3], &[2.0 / 9.0; 3]]);
    let two = stochastic(&[&[0.8, 0.2], &[0.3, 0.7]]);
    let mut r = rng(6000);
    let rand_s = random_substochastic(&mut r, 5, 0.6, 0.95);
    let rand_f = random_stochastic(&mut r, 5);

    let q_ring = q_single(&ring, 0, 1).unwrap();
    let q_rand = q_single(&rand_s, 0, 3).unwrap();
    let occ_two = occupation_matrix(&two, 0).unwrap().get(1, 1).unwrap();
    let occ_rand = occupation_matrix(&rand_f, 2).unwrap().get(0, 4).unwrap();

    let count = |check: &(dyn Fn(u64) -> bool + Sync)| (0..100u64).into_par_iter().filter(|s| check(*s)).count();
    let families = [
        ("Q ring", count(&|seed| estimate_q(&ring, 0, 1, N, seed).unwrap().covers(q_ring, 4.0))),
        ("Q random", count(&|seed| estimate_q(&rand_s, 0, 3, N, seed).unwrap().covers(q_rand, 4.0))),
        ("occupation two-state", count(&|seed| {
            estimate_occupation(&two, 1, 0, 1, N, seed).unwrap().covers(occ_two, 4.0)
        })),
        ("occupation random", count(&|seed| {
            estimate_occupation(&rand_f, 0, 2, 4, N, seed).unwrap().covers(occ_rand, 4.0)
        })),
        ("decomposition two-state", count(&|seed| {
            let (l, r) = check_decomposition(&two, 0, 1, N, seed).unwrap();
            l.overlaps(&r, 4.0)
        })),
        ("decomposition random", count(&|seed| {
            let (l, r) = check_decomposition(&rand_f, 1, 3, N, seed).unwrap();
            l.overlaps(&r, 4.0)
        })),
    ];
    let ok = families.iter().all(|(_, c)| *c >= 99);
    let detail: Vec<String> = families.iter().map(|(name, c)| format!("{name} {c}/100")).collect();
    (ok, detail.join(", "))
}

fn frozen_snapshot(name: &str) -> Vec<(usize, usize, f64)> {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let size = 40;
    let cfg = HillyConfig::new(size);
    let (f, pi) = hilly::hilly_matrix(&cfg).unwrap();
    let balance = hilly::detailed_balance_defect(&f, &pi);
    let a = balance <= 1e-14;

    let mut b = true;
    let mut floor_misses = 0;
    let mut path_misses = 0;
    let mut neighbor_worst: f64 = 0.0;
    for &alpha in &STUDY_ALPHAS {
        let s = hilly::scaled_hilly(&cfg.with_alpha(alpha)).unwrap();
        let q = q_all_fast(&s).unwrap();
        let cap = 2.0 * (1.0 + std::f64::consts::E) / alpha;
        for i in 0..size {
            for j in [(i + 1) % size, (i + size - 1) % size] {
                let inv = 1.0 / q.get(i, j).unwrap();
                neighbor_worst = neighbor_worst.max(inv / cap);
                b &= inv <= cap;
            }
        }
        floor_misses += hilly::floor_violations(&q, alpha).len();
        path_misses += hilly::path_floor_violations(&q, alpha).len();
    }
    let d = floor_misses == 0;

    let s1 = hilly::scaled_hilly(&cfg).unwrap();
    let idx = |state| hilly::state_index(state, size);
    let q30 = q_single(&s1, idx(30), idx(10)).unwrap();
    let q20 = q_single(&s1, idx(20), idx(10)).unwrap();
    let c = q30 < q20;

    let mut snap_worst: f64 = 0.0;
    for (alpha, file) in [(1.0, "hilly_L40_alpha1.0.csv"), (0.95, "hilly_L40_alpha0.95.csv")] {
        let q = q_all_fast(&hilly::scaled_hilly(&cfg.with_alpha(alpha)).unwrap()).unwrap();
        for (i, j, v) in frozen_snapshot(file) {
            snap_worst = snap_worst.max(rel_err(q.get(i - 1, j - 1).unwrap(), (-v).exp()));
        }
    }
    let e = snap_worst <= 1e-8;
    (
        a && b && c && d && e,
        format!(
            "(a) balance {balance:.1e} {} (b) max Q^-1 / cap {neighbor_worst:.4} {} (c) Q30,10 {q30:.3e} < Q20,10 {q20:.3e} {} (d) {floor_misses} pairs below (3a/(2(1+e)))^d {} [below (a/(2(1+e)))^d: {path_misses}] (e) snapshot rel {snap_worst:.1e} {}",
            ok(a), ok(b), ok(c), ok(d), ok(e)
        ),
    )
}

fn criterion_8() -> Outcome {
    let sizes = [8, 16, 24, 32, 40];
    let rows = hilly::gap_scaling_study(&sizes).unwrap();
    let logs: Vec<f64> = rows.iter().map(|r| r.log_inv_gap).collect();
    let increasing = logs.windows(2).all(|w| w[1] > w[0]);
    let xs: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let slope = hilly::least_squares_slope(&xs, &logs);
    let imag = rows.iter().map(|r| r.max_imag).fold(0.0, f64::max);
    let floor = hilly::gershgorin_floor() - 1e-10;
    let min_eig = rows.iter().map(|r| r.eigen_min).fold(f64::INFINITY, f64::min);
    let second = rows.last().unwrap().second;
    let pass = increasing && slope > 0.0 && imag <= 1e-8 && min_eig >= floor && second > 0.0;
    (
        pass,
        format!(
            "log(1/gap) {:?}, slope {slope:.4}, max |imag| {imag:.1e}, min eigenvalue {min_eig:.4} (floor {floor:.4}), second eigenvalue at L=40 {second:.6}",
            logs.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut kappa_worst: f64 = 0.0;
    let mut beta_failures = 0;
    let mut expansion_worst: f64 = 0.0;
    for k in 0..50u64 {
        let mut r = rng(9000 + k);
        let n = r.random_range(2..=10);
        let f = random_stochastic(&mut r, n);
        let kappas = ipsen_meyer_kappas(&f).unwrap();
        for (i, kappa) in kappas.iter().enumerate() {
            let max_hit = hitting_oracle(f.matrix(), i)
                .into_iter()
                .map(|(_, h)| h)
                .fold(0.0, f64::max);
            kappa_worst = kappa_worst.max(rel_err(*kappa, max_hit));
        }
        let pi = stationary_distribution(&f).unwrap();
        let beta = cho_meyer_beta(&f).unwrap();
        let sub = f.to_substochastic();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let p = q_single(&sub, i, j).unwrap();
                let lower = 0.5 / (pi.get(i) * p);
                if beta.get(i, j).unwrap() < lower * (1.0 - 1e-12) {
                    beta_failures += 1;
                }
            }
        }
        let s = random_substochastic(&mut r, n, 0.5, 0.9);
        let (fa, fb) = (random_completion(&mut r, &s), random_completion(&mut r, &s));
        let expansion = cho_meyer_expansion(&fa, &fb).unwrap();
        let (pa, pb) = (stationary_distribution(&fa).unwrap(), stationary_distribution(&fb).unwrap());
        for m in 0..n {
            let direct = (pb.get(m) - pa.get(m)) / pa.get(m);
            expansion_worst = expansion_worst.max((expansion[m] - direct).abs());
        }
    }

    let mut ocinneide_failures = 0;
    for k in 0..200u64 {
        let mut r = rng(9500 + k);
        let n = r.random_range(2..=15);
        let f = random_stochastic(&mut r, n);
        let ft = same_pattern_perturbation(&mut r, &f, 1.5);
        let bound = ocinneide_bound(&f, &ft).expect("same pattern");
        if true_relative_error(&f, &ft).unwrap() > bound + 1e-12 {
            ocinneide_failures += 1;
        }
    }
    let pass = kappa_worst <= 1e-10 && ocinneide_failures == 0 && expansion_worst <= 1e-8 && beta_failures == 0;
    (
        pass,
        format!(
            "kappa vs max hitting time {kappa_worst:.1e}, O'Cinneide failures {ocinneide_failures}/200, expansion error {expansion_worst:.1e}, beta lower-bound failures {beta_failures}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let f = stochastic(&[&[0.8, 0.2], &[0.3, 0.7]]);
    let ft = stochastic(&[&[0.78, 0.22], &[0.3, 0.7]]);
    let mut checks: Vec<(&str, bool, String)> = Vec::new();
    let mut check = |name: &'static str, got: f64, want: f64, tol: f64| {
        checks.push((name, (got - want).abs() <= tol, format!("{name} = {got:.9}")));
    };

    let pi = stationary_distribution(&f).unwrap();
    check("pi_1", pi.get(0), 0.6, 1e-15);
    check("pi_2", pi.get(1), 0.4, 1e-15);
    check("Q_12", q_single(&f.to_substochastic(), 0, 1).unwrap(), 0.2, 1e-15);
    check(
        "E_2[tau_1]",
        occupation_matrix(&f, 0).unwrap().row_sum(1).unwrap(),
        10.0 / 3.0,
        1e-14,
    );
    let d = derivative_slice_with(&f, &pi, 0, 1).unwrap();
    check("dpi_1", d.dpi[0], -1.2, 1e-14);
    check("dpi_2", d.dpi[1], 1.2, 1e-14);
    check("dlogpi_1", d.dlogpi[0], -2.0, 1e-14);
    check("dlogpi_2", d.dlogpi[1], 3.0, 1e-14);
    let kappas = ipsen_meyer_kappas(&f).unwrap();
    check("kappa_1", kappas[0], 10.0 / 3.0, 1e-14);
    check("kappa_2", kappas[1], 5.0, 1e-14);
    check("beta_12", cho_meyer_beta(&f).unwrap().get(0, 1).unwrap(), 5.0, 1e-14);
    check("true error", true_relative_error(&f, &ft).unwrap(), 0.0392207, 1e-7);

    let pass = checks.iter().all(|c| c.1);
    let failed: Vec<String> = checks.iter().filter(|c| !c.1).map(|c| c.2.clone()).collect();
    let detail = if failed.is_empty() {
        format!("{} values exact", checks.len())
    } else {
        format!("{} of {} values exact; mismatched: {}", checks.len() - failed.len(), checks.len(), failed.join(", "))
    };
    (pass, detail)
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", criterion_1),
        ("derivative correctness", criterion_2),
        ("extremal identity", criterion_3),
        ("bound ordering", criterion_4),
        ("sharpness", criterion_5),
        ("Monte Carlo consistency", criterion_6),
        ("hilly reproduction", criterion_7),
        ("spectral study", criterion_8),
        ("baseline comparisons", criterion_9),
        ("two-state fixture", criterion_10),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (pass, detail) = run();
        failures += usize::from(!pass);
        println!("criterion {:>2} {:<24} {}  {detail}", k + 1, name, if pass { "PASS" } else { "FAIL" });
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
