//! `mvcs` — exact multinomial p-values, continuity-set enumeration, covers,
//! and disjointness certification, emitted as JSON artifacts.
//!
//! Exit codes: 0 success, 2 validation error, 3 cap or solver failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mvcs::continuity::{analyze, ContinuityConfig};
use mvcs::covering::{build_cover, CoverConfig};
use mvcs::simplex::{enumerate_types, EmpiricalDistribution, PValueEvaluator, SimplexPoint};
use mvcs::{certify_disjoint, Error, SignVector};

#[derive(Parser)]
#[command(
    name = "mvcs",
    version,
    about = "Minimum-volume confidence set geometry on the probability simplex"
)]
struct Cli {
    #[command(flatten)]
    run: RunOptions,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand.
#[derive(Args, Clone)]
struct RunOptions {
    /// Write the JSON artifact here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Cache directory for continuity-set enumerations
    /// (MVCS_CACHE_DIR overrides).
    #[arg(long, global = true, default_value = ".mvcs-cache")]
    cache_dir: PathBuf,
    /// Strictness margin for splitting inequalities.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tau: f64,
    /// Convex-solver duality-gap target.
    #[arg(long, global = true, default_value_t = 1e-9)]
    solver_tol: f64,
    /// Merge tolerance for continuity-set vertices.
    #[arg(long, global = true, default_value_t = 1e-8)]
    vertex_merge_tol: f64,
    /// Brute-force enumeration cap (log2 of the candidate count).
    #[arg(long, global = true, default_value_t = 20)]
    cap_bits: u32,
    /// Random seed (reserved; all current subcommands are deterministic).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

impl RunOptions {
    fn continuity(&self, prune: bool) -> ContinuityConfig {
        ContinuityConfig {
            tau: self.tau,
            solver_gap: self.solver_tol,
            vertex_merge_tol: self.vertex_merge_tol,
            candidate_cap_bits: self.cap_bits,
            prune,
            ..ContinuityConfig::default()
        }
    }

    fn cache_dir(&self) -> PathBuf {
        match std::env::var_os("MVCS_CACHE_DIR") {
            Some(d) => PathBuf::from(d),
            None => self.cache_dir.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact p-value of an observation at a parameter point.
    Pvalue {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        /// Observed counts, comma-separated (sum n).
        #[arg(long)]
        phat: String,
        /// Parameter point, comma-separated probabilities (sum 1).
        #[arg(long)]
        p: String,
    },
    /// Continuity sets of an observation (cached).
    Sets {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        phat: String,
        /// Depth-first enumeration with feasibility pruning.
        #[arg(long)]
        prune: bool,
    },
    /// (epsilon, delta)-cover of one continuity set.
    Cover {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        phat: String,
        /// Sign vector of the set, comma-separated entries +1/-1.
        #[arg(long)]
        omega: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Certify disjointness of two observations' confidence sets.
    Disjoint {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        phat1: String,
        #[arg(long)]
        phat2: String,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon0: f64,
        #[arg(long, default_value_t = 6)]
        max_refinements: u32,
    },
    /// Grid data for figure reproduction.
    Figure {
        /// confset | regions | cover
        #[arg(long)]
        which: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        phat: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eta: Option<u64>,
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(json) => {
            match &cli.run.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, json + "\n") {
                        eprintln!("error: cannot write output: {e}");
                        return ExitCode::from(3);
                    }
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    let _ = writeln!(out, "{json}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::CapExceeded(_) | Error::SolverFailure(_) | Error::Cache(_) => 3,
                _ => 2,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<String, Error> {
    for (name, v) in [
        ("tau", cli.run.tau),
        ("solver-tol", cli.run.solver_tol),
        ("vertex-merge-tol", cli.run.vertex_merge_tol),
    ] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be positive")));
        }
    }
    if cli.run.cap_bits < 1 {
        return Err(Error::InvalidParameter(
            "cap-bits must be at least 1".into(),
        ));
    }
    match &cli.command {
        Command::Pvalue { k, n, phat, p } => {
            let phat = parse_counts(phat, *k, *n)?;
            let p = parse_point(p, *k)?;
            let r = mvcs::pvalue(&phat, &p)?;
            to_json(&r)
        }
        Command::Sets { k, n, phat, prune } => {
            let phat = parse_counts(phat, *k, *n)?;
            let cfg = cli.run.continuity(*prune);
            mvcs::cache::load_or_compute(&cli.run.cache_dir(), &phat, &cfg, || analyze(&phat, &cfg))
        }
        Command::Cover {
            k,
            n,
            phat,
            omega,
            epsilon,
            delta,
        } => {
            if delta < epsilon {
                return Err(Error::InvalidParameter("delta must be >= epsilon".into()));
            }
            let phat = parse_counts(phat, *k, *n)?;
            let cfg = cli.run.continuity(false);
            let analysis = analyze(&phat, &cfg)?;
            let omega = parse_signs(omega)?;
            let set = analysis
                .sets
                .iter()
                .find(|s| s.omega == omega)
                .ok_or_else(|| {
                    Error::InvalidParameter("omega does not name a certified continuity set".into())
                })?;
            let cover = build_cover(set, &analysis, *epsilon, *delta, &CoverConfig::default())?;
            to_json(&cover)
        }
        Command::Disjoint {
            k,
            n,
            phat1,
            phat2,
            alpha,
            epsilon0,
            max_refinements,
        } => {
            let phat1 = parse_counts(phat1, *k, *n)?;
            let phat2 = parse_counts(phat2, *k, *n)?;
            let verdict = certify_disjoint(
                &phat1,
                &phat2,
                *alpha,
                *epsilon0,
                *max_refinements,
                &cli.run.continuity(true),
                &CoverConfig::default(),
            )?;
            to_json(&verdict)
        }
        Command::Figure {
            which,
            k,
            n,
            phat,
            alpha,
            eta,
            omega,
            epsilon,
            delta,
        } => {
            let phat = parse_counts(phat, *k, *n)?;
            match which.as_str() {
                "confset" => {
                    let alpha = alpha.ok_or_else(|| {
                        Error::InvalidParameter("confset figure needs --alpha".into())
                    })?;
                    figure_confset(&phat, alpha, eta.unwrap_or(400))
                }
                "regions" => figure_regions(&phat, eta.unwrap_or(300), &cli.run.continuity(false)),
                "cover" => {
                    let omega = omega.as_deref().ok_or_else(|| {
                        Error::InvalidParameter("cover figure needs --omega".into())
                    })?;
                    let epsilon = epsilon.ok_or_else(|| {
                        Error::InvalidParameter("cover figure needs --epsilon".into())
                    })?;
                    let delta = delta.unwrap_or(epsilon);
                    if delta < epsilon {
                        return Err(Error::InvalidParameter("delta must be >= epsilon".into()));
                    }
                    let cfg = cli.run.continuity(false);
                    let analysis = analyze(&phat, &cfg)?;
                    let omega = parse_signs(omega)?;
                    let set = analysis
                        .sets
                        .iter()
                        .find(|s| s.omega == omega)
                        .ok_or_else(|| {
                            Error::InvalidParameter(
                                "omega does not name a certified continuity set".into(),
                            )
                        })?;
                    let cover =
                        build_cover(set, &analysis, epsilon, delta, &CoverConfig::default())?;
                    to_json(&cover)
                }
                other => Err(Error::InvalidParameter(format!(
                    "unknown figure kind '{other}' (confset | regions | cover)"
                ))),
            }
        }
    }
}

#[derive(Serialize)]
struct ConfsetPoint {
    counts: Vec<u64>,
    rho: f64,
    member: bool,
}

fn figure_confset(phat: &EmpiricalDistribution, alpha: f64, eta: u64) -> Result<String, Error> {
    let eval = PValueEvaluator::new(phat)?;
    let grid = enumerate_types(phat.k(), eta)?;
    let points: Vec<ConfsetPoint> = grid
        .iter()
        .map(|g| {
            let p = SimplexPoint::new(g.counts().iter().map(|&c| c as f64 / eta as f64).collect())
                .expect("grid point is on the simplex");
            let rho = eval.eval(&p).value;
            ConfsetPoint {
                counts: g.counts().to_vec(),
                rho,
                member: rho >= alpha,
            }
        })
        .collect();
    to_json(&serde_json::json!({
        "phat": phat.counts(),
        "alpha": alpha,
        "eta": eta,
        "points": points,
    }))
}

#[derive(Serialize)]
struct RegionPoint {
    counts: Vec<u64>,
    /// Sign pattern as a +/- string, or null on a variety or the boundary.
    omega_label: Option<String>,
}

fn figure_regions(
    phat: &EmpiricalDistribution,
    eta: u64,
    cfg: &ContinuityConfig,
) -> Result<String, Error> {
    let analysis = analyze(phat, cfg)?;
    let family = &analysis.family;
    let grid = enumerate_types(phat.k(), eta)?;
    let points: Vec<RegionPoint> = grid
        .iter()
        .map(|g| {
            let counts = g.counts().to_vec();
            if counts.contains(&0) {
                return RegionPoint {
                    counts,
                    omega_label: None,
                };
            }
            let z: Vec<f64> = counts
                .iter()
                .map(|&c| -((c as f64 / eta as f64).ln()))
                .collect();
            let slacks = family.class_slacks(&z);
            if slacks.iter().any(|&t| t.abs() <= 1e-8) {
                return RegionPoint {
                    counts,
                    omega_label: None,
                };
            }
            let class_signs: Vec<i8> = slacks
                .iter()
                .map(|&t| if t < 0.0 { 1 } else { -1 })
                .collect();
            let omega = family.expand_signs(&class_signs);
            let label: String = omega
                .iter()
                .map(|&s| if s == 1 { '+' } else { '-' })
                .collect();
            RegionPoint {
                counts,
                omega_label: Some(label),
            }
        })
        .collect();
    to_json(&serde_json::json!({
        "phat": phat.counts(),
        "eta": eta,
        "points": points,
    }))
}

fn parse_counts(s: &str, k: usize, n: u64) -> Result<EmpiricalDistribution, Error> {
    let counts: Vec<u64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| Error::InvalidCounts(format!("bad count '{t}'")))
        })
        .collect::<Result<_, _>>()?;
    if counts.len() != k {
        return Err(Error::InvalidCounts(format!(
            "expected {k} counts, got {}",
            counts.len()
        )));
    }
    EmpiricalDistribution::with_sample_size(counts, n)
}

fn parse_point(s: &str, k: usize) -> Result<SimplexPoint, Error> {
    let probs: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::NotOnSimplex(format!("bad probability '{t}'")))
        })
        .collect::<Result<_, _>>()?;
    if probs.len() != k {
        return Err(Error::NotOnSimplex(format!(
            "expected {k} probabilities, got {}",
            probs.len()
        )));
    }
    SimplexPoint::new(probs)
}

fn parse_signs(s: &str) -> Result<SignVector, Error> {
    let signs: Vec<i8> = s
        .split(',')
        .map(|t| match t.trim() {
            "1" | "+1" | "+" => Ok(1),
            "-1" | "-" => Ok(-1),
            other => Err(Error::InvalidParameter(format!("bad sign '{other}'"))),
        })
        .collect::<Result<_, _>>()?;
    SignVector::new(signs)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Cache(e.to_string()))
}
