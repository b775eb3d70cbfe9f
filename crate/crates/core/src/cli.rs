//! Command-line front end. States on the command line and in output are 1-based.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bounds::{bound_report, lower_envelope, BoundReport};
use crate::error::{Error, Result};
use crate::hilly::{self, HillyConfig};
use crate::io::{self, format_f64};
use crate::matrix::{validate_stochastic, validate_substochastic, StochasticMatrix, SubstochasticMatrix};
use crate::mc_verify::estimate_q;
use crate::sensitivities::{q_all_fast, q_all_oracle, q_single, SensitivityMatrix};
use crate::stationary::stationary_distribution;

#[derive(Debug, Parser)]
#[command(name = "mcsense", version, about = "Markov chain invariant distributions, sensitivities and perturbation bounds")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MC_SENSE_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Row-sum tolerance for input certification.
    #[arg(long, global = true, default_value_t = crate::matrix::DEFAULT_ROW_SUM_TOL)]
    pub tol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Mm,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Study {
    Gap,
    Heatmap,
    Floors,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant distribution of a stochastic matrix.
    Stationary { matrix: PathBuf },
    /// Sensitivities Q_ij(S) of an irreducible substochastic matrix.
    Sensitivities {
        matrix: PathBuf,
        /// Solve one linear system per pair.
        #[arg(long, conflicts_with = "fast")]
        oracle: bool,
        /// Single inversion with low-rank updates (default).
        #[arg(long)]
        fast: bool,
        /// Emit (i, j, -log Q_ij) triples.
        #[arg(long)]
        heatmap: bool,
    },
    /// Relative-error bounds between F and a perturbation F~.
    Bounds {
        f: PathBuf,
        ftilde: PathBuf,
        /// Lower envelope S with F, F~ >= S.
        #[arg(long, group = "envelope")]
        s: Option<PathBuf>,
        /// Entrywise uncertainty matrix; S = max(F~ - alpha, 0).
        #[arg(long, group = "envelope")]
        alpha: Option<PathBuf>,
        /// S = min(F, F~) entrywise (default).
        #[arg(long, group = "envelope")]
        auto_min: bool,
    },
    /// Monte Carlo estimate of Q_ij(S) next to its deterministic value.
    Verify {
        matrix: PathBuf,
        i: usize,
        j: usize,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Hilly-landscape studies.
    Hilly {
        /// Lattice sizes.
        #[arg(long = "L", value_delimiter = ',', default_value = "40")]
        sizes: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.7,0.8,0.9,0.95,0.98,1")]
        alpha_list: Vec<f64>,
        #[arg(long, value_enum)]
        study: Study,
        /// Directory for study files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

/// Runs a parsed command line, writing results to the configured sink.
pub fn run(cli: &Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidConfig("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let out = pool.install(|| dispatch(cli)).map_err(one_based)?;
    match &cli.output {
        Some(path) => write_file(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn check_readable(paths: &[&Path]) -> Result<()> {
    for p in paths {
        std::fs::metadata(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn read_stochastic(path: &Path, tol: f64) -> Result<StochasticMatrix> {
    validate_stochastic(io::read_matrix(path)?, tol)
}

fn read_substochastic(path: &Path, tol: f64) -> Result<SubstochasticMatrix> {
    validate_substochastic(io::read_matrix(path)?, tol)
}

fn state_arg(state: usize, dim: usize) -> Result<usize> {
    if state == 0 || state > dim {
        return Err(Error::IndexOutOfRange { index: state, dim });
    }
    Ok(state - 1)
}

/// Rewrites library state indices in an error to the 1-based CLI convention.
fn one_based(e: Error) -> Error {
    match e {
        Error::Reducible { components } => Error::Reducible {
            components: components
                .into_iter()
                .map(|c| c.into_iter().map(|k| k + 1).collect())
                .collect(),
        },
        other => other,
    }
}

fn dispatch(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Stationary { matrix } => cmd_stationary(matrix, cli.tol, cli.format),
        Command::Sensitivities {
            matrix,
            oracle,
            heatmap,
            ..
        } => cmd_sensitivities(matrix, cli.tol, *oracle, *heatmap, cli.format),
        Command::Bounds {
            f,
            ftilde,
            s,
            alpha,
            ..
        } => cmd_bounds(f, ftilde, s.as_deref(), alpha.as_deref(), cli.tol, cli.format),
        Command::Verify {
            matrix,
            i,
            j,
            n,
            seed,
        } => cmd_verify(matrix, *i, *j, *n, *seed, cli.tol, cli.format),
        Command::Hilly {
            sizes,
            alpha_list,
            study,
            out_dir,
        } => cmd_hilly(sizes, alpha_list, *study, out_dir),
    }
}

pub fn cmd_stationary(path: &Path, tol: f64, format: OutputFormat) -> Result<String> {
    check_readable(&[path])?;
    let f = read_stochastic(path, tol)?;
    let pi = stationary_distribution(&f)?;
    let values: Vec<String> = pi.values().iter().map(|v| format_f64(*v)).collect();
    Ok(match format {
        OutputFormat::Csv => format!("{}\n# residual {}\n", values.join(","), format_f64(pi.residual())),
        OutputFormat::Mm => {
            let mut s = format!(
                "%%MatrixMarket matrix array real general\n% residual {}\n{} 1\n",
                format_f64(pi.residual()),
                pi.len()
            );
            for v in &values {
                let _ = writeln!(s, "{v}");
            }
            s
        }
        OutputFormat::Text => {
            let mut s = String::new();
            for (k, v) in values.iter().enumerate() {
                let _ = writeln!(s, "pi[{}] = {v}", k + 1);
            }
            let _ = writeln!(s, "residual = {}", format_f64(pi.residual()));
            s
        }
    })
}

pub fn cmd_sensitivities(
    path: &Path,
    tol: f64,
    oracle: bool,
    heatmap: bool,
    format: OutputFormat,
) -> Result<String> {
    check_readable(&[path])?;
    let s = read_substochastic(path, tol)?;
    s.require_irreducible()?;
    let q = if oracle { q_all_oracle(&s)? } else { q_all_fast(&s)? };
    Ok(if heatmap {
        heatmap_csv(&q)
    } else {
        match format {
            OutputFormat::Csv => q_csv(&q),
            OutputFormat::Mm => q_matrix_market(&q),
            OutputFormat::Text => q_text(&q),
        }
    })
}

fn q_rows(q: &SensitivityMatrix) -> Vec<Vec<Option<f64>>> {
    (0..q.dim())
        .map(|i| (0..q.dim()).map(|j| q.get(i, j)).collect())
        .collect()
}

fn q_csv(q: &SensitivityMatrix) -> String {
    io::table_to_csv::<&str>(None, &q_rows(q))
}

fn q_matrix_market(q: &SensitivityMatrix) -> String {
    let n = q.dim();
    let mut s = format!(
        "%%MatrixMarket matrix coordinate real general\n% diagonal undefined\n{n} {n} {}\n",
        n * (n - 1)
    );
    for (i, j, v) in q.iter() {
        let _ = writeln!(s, "{} {} {}", i + 1, j + 1, format_f64(v));
    }
    s
}

fn q_text(q: &SensitivityMatrix) -> String {
    let mut s = format!("sensitivities ({}):\n", q.source().as_str());
    for (i, j, v) in q.iter() {
        let _ = writeln!(s, "Q[{}][{}] = {}  (1/Q = {})", i + 1, j + 1, format_f64(v), format_f64(1.0 / v));
    }
    s
}

fn heatmap_csv(q: &SensitivityMatrix) -> String {
    let rows: Vec<Vec<String>> = hilly::heatmap_triples(q)
        .into_iter()
        .map(|(i, j, v)| vec![i.to_string(), j.to_string(), format_f64(v)])
        .collect();
    io::records_to_csv(&["i", "j", "neg_log_q"], &rows)
}

pub fn cmd_bounds(
    f: &Path,
    ftilde: &Path,
    s: Option<&Path>,
    alpha: Option<&Path>,
    tol: f64,
    format: OutputFormat,
) -> Result<String> {
    let mut paths = vec![f, ftilde];
    paths.extend(s);
    paths.extend(alpha);
    check_readable(&paths)?;
    let fm = read_stochastic(f, tol)?;
    let ft = read_stochastic(ftilde, tol)?;
    let envelope = match (s, alpha) {
        (Some(p), _) => Some(read_substochastic(p, tol)?),
        (None, Some(p)) => Some(lower_envelope(&ft, &io::read_matrix(p)?)?),
        (None, None) => None,
    };
    if let Some(env) = &envelope {
        env.require_irreducible()?;
    }
    let report = bound_report(&fm, &ft, envelope).map_err(|e| match e {
        Error::DominationViolated {
            which,
            row,
            col,
            value,
            lower,
        } => Error::DominationViolated {
            which,
            row: row + 1,
            col: col + 1,
            value,
            lower,
        },
        other => other,
    })?;
    Ok(match format {
        OutputFormat::Text => report_text(&report),
        _ => report_csv(&report),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_else(|| "absent".into())
}

pub fn report_csv(r: &BoundReport) -> String {
    let mut header: Vec<String> = [
        "true_error",
        "log_form",
        "linear_form",
        "ipsen_meyer",
        "ocinneide",
        "cho_meyer",
        "cho_meyer_ratio",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=r.ipsen_meyer.len()).map(|k| format!("kappa_{k}")));
    let mut row = vec![
        format_f64(r.true_error),
        format_f64(r.log_form),
        format_f64(r.linear_form),
        format_f64(r.ipsen_meyer_bound),
        opt(r.ocinneide),
        format_f64(r.cho_meyer_bound),
        format_f64(r.cho_meyer_ratio),
    ];
    row.extend(r.ipsen_meyer.iter().map(|k| format_f64(*k)));
    io::records_to_csv(&header, &[row])
}

pub fn report_text(r: &BoundReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "true error (max |log pi~ - log pi|): {}", format_f64(r.true_error));
    let _ = writeln!(s, "log-form bound:                    {}", format_f64(r.log_form));
    let _ = writeln!(s, "linear-form bound:                 {}", format_f64(r.linear_form));
    let _ = writeln!(s, "Ipsen-Meyer bound (log scale):     {}", format_f64(r.ipsen_meyer_bound));
    let _ = writeln!(s, "O'Cinneide bound (log scale):      {}", opt(r.ocinneide));
    let _ = writeln!(s, "Cho-Meyer bound (log scale):       {}", format_f64(r.cho_meyer_bound));
    let _ = writeln!(s, "Cho-Meyer ratio bound:             {}", format_f64(r.cho_meyer_ratio));
    let kappas: Vec<String> = r.ipsen_meyer.iter().map(|k| format_f64(*k)).collect();
    let _ = writeln!(s, "kappa: {}", kappas.join(", "));
    let _ = writeln!(
        s,
        "sensitivities: {} ({} fallback columns)",
        r.q_source.as_str(),
        r.fallback_columns
    );
    s
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_verify(
    path: &Path,
    i: usize,
    j: usize,
    n: u64,
    seed: u64,
    tol: f64,
    format: OutputFormat,
) -> Result<String> {
    check_readable(&[path])?;
    let s = read_substochastic(path, tol)?;
    let (i0, j0) = (state_arg(i, s.dim())?, state_arg(j, s.dim())?);
    if i0 == j0 {
        return Err(Error::SameIndex(i));
    }
    let exact = q_single(&s, i0, j0)?;
    let est = estimate_q(&s, i0, j0, n, seed)?;
    let z = if est.stderr > 0.0 {
        (est.point - exact) / est.stderr
    } else if est.point == exact {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(match format {
        OutputFormat::Text => format!(
            "Q[{i}][{j}]: exact {}, estimate {} +/- {} (n = {n}, seed = {seed}, z = {})\n",
            format_f64(exact),
            format_f64(est.point),
            format_f64(est.stderr),
            format_f64(z)
        ),
        _ => io::records_to_csv(
            &["i", "j", "point", "stderr", "n", "seed", "exact", "z"],
            &[vec![
                i.to_string(),
                j.to_string(),
                format_f64(est.point),
                format_f64(est.stderr),
                n.to_string(),
                seed.to_string(),
                format_f64(exact),
                format_f64(z),
            ]],
        ),
    })
}

/// File name of one heatmap in a study directory.
pub fn heatmap_file_name(size: usize, alpha: f64) -> String {
    format!("heatmap_L{size}_alpha{}.csv", format_f64(alpha))
}

pub fn cmd_hilly(sizes: &[usize], alphas: &[f64], study: Study, out_dir: &Path) -> Result<String> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    match study {
        Study::Gap => {
            let rows = hilly::gap_scaling_study(sizes)?;
            let records: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.size.to_string(),
                        format_f64(r.gap),
                        format_f64(r.log_inv_gap),
                        format_f64(r.bottleneck),
                        format_f64(1.0 / (4.0 * r.bottleneck)),
                        format_f64(r.eigen_min),
                        format_f64(r.max_imag),
                        format_f64(r.second),
                        format_f64(r.condition_proxy),
                    ]
                })
                .collect();
            let text = io::records_to_csv(
                &[
                    "L",
                    "gap",
                    "log_inv_gap",
                    "bottleneck",
                    "mixing_lower_bound",
                    "eigen_min",
                    "max_imag",
                    "second_eigenvalue",
                    "condition_proxy",
                ],
                &records,
            );
            write_file(&out_dir.join("gap.csv"), &text)?;
            Ok(text)
        }
        Study::Heatmap => {
            let mut summary = vec![];
            for &size in sizes {
                for &alpha in alphas {
                    let s = hilly::scaled_hilly(&HillyConfig::new(size).with_alpha(alpha))?;
                    let q = q_all_fast(&s)?;
                    let name = heatmap_file_name(size, alpha);
                    write_file(&out_dir.join(&name), &heatmap_csv(&q))?;
                    summary.push(vec![size.to_string(), format_f64(alpha), name]);
                }
            }
            Ok(io::records_to_csv(&["L", "alpha", "file"], &summary))
        }
        Study::Floors => {
            let mut rows = vec![];
            for &size in sizes {
                for &alpha in alphas {
                    let s = hilly::scaled_hilly(&HillyConfig::new(size).with_alpha(alpha))?;
                    let q = q_all_fast(&s)?;
                    let stated = hilly::floor_violations(&q, alpha).len();
                    let path = hilly::path_floor_violations(&q, alpha).len();
                    rows.push(vec![
                        size.to_string(),
                        format_f64(alpha),
                        (size * (size - 1)).to_string(),
                        stated.to_string(),
                        path.to_string(),
                    ]);
                }
            }
            let text = io::records_to_csv(
                &["L", "alpha", "pairs", "violations", "path_floor_violations"],
                &rows,
            );
            write_file(&out_dir.join("floors.csv"), &text)?;
            Ok(text)
        }
    }
}

/// `error[Kind]: message`, with a hint for reducible sensitivity inputs.
pub fn render_error(e: &Error) -> String {
    let mut s = format!("error[{}]: {e}", e.kind());
    if matches!(e, Error::Reducible { .. }) {
        s.push_str(
            "\nnote: sensitivities and the perturbation bound need an irreducible S (states are 1-based)",
        );
    }
    s
}
