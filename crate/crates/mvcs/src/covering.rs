//! Discrete covers of continuity sets and minimum distances to discontinuity
//! varieties (three categories).
//!
//! The nearest point of a variety to a query `q` must satisfy the
//! orthogonality condition `lambda * B * p^{-1} = q - p`, where
//! `B = (I - J/k) diag(c)` projects the scaled gradient onto the simplex
//! plane. Summing the three component equations cancels `B` (its columns sum
//! to zero) and forces `sum p = 1`, so the system is equivalent to the two
//! pairwise differences plus the simplex-sum equation. For fixed `lambda`
//! each difference, multiplied out, is quadratic in one unknown given the
//! other; substituting both quadratic-formula branches into the sum equation
//! leaves four single-variable branch equations whose roots enumerate every
//! fixed-`lambda` solution. An outer sign-change sweep over `lambda`
//! (log-spaced magnitudes, both signs, then bisection) finds the solutions of
//! the full system with `f(p) = 0`.
//!
//! Covers follow the grid rule `eta = ceil(sqrt(k)/epsilon)`: keep the grid
//! points inside the set or within `delta` of it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuity::{ContinuityAnalysis, ContinuitySet, SignVector};
use crate::error::{Error, Result};
use crate::numeric::{linalg, roots};
use crate::simplex::{enumerate_types, EmpiricalDistribution, SimplexPoint};
use crate::variety::SplittingVariety;

/// Knobs of the distance solver and cover construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    /// Log-spaced magnitudes per sign in the outer lambda sweep.
    pub lambda_magnitudes: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Scan points per branch equation in the fixed-lambda solve.
    pub branch_scan: usize,
    /// Scan points per driving coordinate when sampling a variety curve.
    pub curve_scan: usize,
    /// Residual and on-variety tolerance for accepted candidates.
    pub candidate_tol: f64,
    /// Feasibility margin when filtering candidates against a set's signs.
    pub tau: f64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            lambda_magnitudes: 512,
            lambda_min: 1e-12,
            lambda_max: 1e3,
            branch_scan: 128,
            curve_scan: 2000,
            candidate_tol: 1e-8,
            tau: 1e-9,
        }
    }
}

/// Outcome of a minimum-distance query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub distance: f64,
    pub argmin: SimplexPoint,
    /// Multiplier of the orthogonality condition at the argmin (0 when the
    /// argmin is a scan-refined closure point instead of a stationary point).
    pub lambda: f64,
    /// Whether the argmin satisfies the sign constraints of the set under
    /// consideration; always true for plain variety queries.
    pub feasible_for_set: bool,
    /// Set when the reported minimum came from the sampled-curve fallback
    /// rather than a verified orthogonality candidate.
    pub approximate: bool,
}

/// Label of one retained cover point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum CoverLabel {
    Inside,
    Near { distance: f64, approximate: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverPoint {
    pub counts: Vec<u64>,
    #[serde(flatten)]
    pub label: CoverLabel,
}

/// An (epsilon, delta)-cover of one continuity set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverGrid {
    pub omega: SignVector,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: u64,
    pub points: Vec<CoverPoint>,
}

/// Grid resolution guaranteeing every simplex point has a grid neighbor
/// within `epsilon`.
pub fn eta_for_epsilon(epsilon: f64, k: usize) -> Result<u64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let raw = (k as f64).sqrt() / epsilon;
    Ok(((raw - 1e-9).ceil() as u64).max(1))
}

/// Sequential rounding of a simplex point onto the discrete grid: round the
/// first coordinate, then ceil or floor each next one against the running
/// deficit, and leave the remainder to the last. Every coordinate moves by
/// less than `1/eta`, so the result is within `sqrt(k)/eta` in norm.
pub fn discrete_neighbor(p: &SimplexPoint, eta: u64) -> EmpiricalDistribution {
    let k = p.k();
    let coords = p.coords();
    let mut counts = vec![0u64; k];
    counts[0] = (coords[0] * eta as f64).round() as u64;
    let mut deficit = coords[0] - counts[0] as f64 / eta as f64;
    for i in 1..k - 1 {
        let scaled = coords[i] * eta as f64;
        counts[i] = if deficit >= 0.0 {
            scaled.ceil() as u64
        } else {
            scaled.floor() as u64
        };
        deficit += coords[i] - counts[i] as f64 / eta as f64;
    }
    let used: u64 = counts[..k - 1].iter().sum();
    debug_assert!(used <= eta, "sequential rounding overshot the grid");
    counts[k - 1] = eta - used.min(eta);
    EmpiricalDistribution::new(counts).expect("counts sum to eta by construction")
}

/// Stable quadratic roots labeled by the sign in the formula
/// `(-b +- sqrt(disc)) / (2a)`. `None` when the discriminant is negative.
/// A vanishing leading coefficient falls back to the linear root.
fn quad_roots(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    if a.abs() <= 1e-14 {
        if b.abs() <= 1e-14 {
            return None;
        }
        let r = -c / b;
        return Some((r, r));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    if b >= 0.0 {
        Some((-2.0 * c / (b + sq), (-b - sq) / (2.0 * a)))
    } else {
        Some(((-b + sq) / (2.0 * a), -2.0 * c / (b - sq)))
    }
}

/// All solutions of the fixed-lambda orthogonality system for k = 3 via the
/// four quadratic branch combinations substituted into the sum equation.
fn solve_fixed_lambda(c: &[f64; 3], q: &[f64; 3], lambda: f64, scan: usize) -> Vec<[f64; 3]> {
    let d12 = q[0] - q[1];
    let d13 = q[0] - q[2];
    // Given x: -x y^2 + (x^2 - d12 x + lambda c1) y - lambda c2 x = 0
    //          -x z^2 + (x^2 - d13 x + lambda c1) z - lambda c3 x = 0
    let y_of = |x: f64| quad_roots(-x, x * x - d12 * x + lambda * c[0], -lambda * c[1] * x);
    let z_of = |x: f64| quad_roots(-x, x * x - d13 * x + lambda * c[0], -lambda * c[2] * x);

    let mut out: Vec<[f64; 3]> = Vec::new();
    for branch in 0..4usize {
        let h = |x: f64| -> f64 {
            let Some(ys) = y_of(x) else { return f64::NAN };
            let Some(zs) = z_of(x) else { return f64::NAN };
            let y = if branch & 1 == 0 { ys.0 } else { ys.1 };
            let z = if branch & 2 == 0 { zs.0 } else { zs.1 };
            x + y + z - 1.0
        };
        let lo = 1e-9;
        let hi = 1.0 - 1e-9;
        let mut prev: Option<(f64, f64)> = None;
        for s in 0..=scan {
            let x = lo + (hi - lo) * s as f64 / scan as f64;
            let v = h(x);
            if let (Some((px, pv)), false) = (prev, v.is_nan()) {
                if pv.signum() != v.signum() && !pv.is_nan() {
                    let r = roots::bisect(h, px, x, 1e-13);
                    let Some(ys) = y_of(r) else { continue };
                    let Some(zs) = z_of(r) else { continue };
                    let y = if branch & 1 == 0 { ys.0 } else { ys.1 };
                    let z = if branch & 2 == 0 { zs.0 } else { zs.1 };
                    out.push([r, y, z]);
                }
            }
            prev = if v.is_nan() { None } else { Some((x, v)) };
        }
    }
    out
}

/// Residual of the orthogonality condition `lambda B p^{-1} = q - p`.
fn orthogonality_residual(c: &[f64; 3], q: &[f64; 3], p: &[f64; 3], lambda: f64) -> f64 {
    let s: f64 = (0..3).map(|i| c[i] / p[i]).sum();
    (0..3)
        .map(|i| {
            let lhs = lambda * (c[i] / p[i] - s / 3.0);
            let r = lhs - (q[i] - p[i]);
            r * r
        })
        .sum::<f64>()
        .sqrt()
}

/// log of the variety monomial at p; `f = 1 - exp(value)`.
fn monomial_log(c: &[f64; 3], log_c0: f64, p: &[f64; 3]) -> f64 {
    log_c0 + (0..3).map(|i| c[i] * p[i].ln()).sum::<f64>()
}

fn f_of(c: &[f64; 3], log_c0: f64, p: &[f64; 3]) -> f64 {
    1.0 - monomial_log(c, log_c0, p).exp()
}

/// Newton polish of the full 4-unknown system (two pairwise differences, the
/// simplex sum, and `f = 0`). Returns the refined solution when it stays
/// interior and converges.
fn polish(
    c: &[f64; 3],
    log_c0: f64,
    q: &[f64; 3],
    p0: [f64; 3],
    l0: f64,
) -> Option<([f64; 3], f64)> {
    let mut v = [p0[0], p0[1], p0[2], l0];
    for _ in 0..8 {
        let (x, y, z, l) = (v[0], v[1], v[2], v[3]);
        if !(x > 0.0 && y > 0.0 && z > 0.0) {
            return None;
        }
        let e = monomial_log(c, log_c0, &[x, y, z]).exp();
        let g = [
            (x - y) - (q[0] - q[1]) + l * (c[0] / x - c[1] / y),
            (x - z) - (q[0] - q[2]) + l * (c[0] / x - c[2] / z),
            x + y + z - 1.0,
            1.0 - e,
        ];
        let jac = vec![
            vec![
                1.0 - l * c[0] / (x * x),
                -1.0 + l * c[1] / (y * y),
                0.0,
                c[0] / x - c[1] / y,
            ],
            vec![
                1.0 - l * c[0] / (x * x),
                0.0,
                -1.0 + l * c[2] / (z * z),
                c[0] / x - c[2] / z,
            ],
            vec![1.0, 1.0, 1.0, 0.0],
            vec![-e * c[0] / x, -e * c[1] / y, -e * c[2] / z, 0.0],
        ];
        let rhs: Vec<f64> = g.iter().map(|&gi| -gi).collect();
        let step = linalg::solve(&jac, &rhs)?;
        for i in 0..4 {
            v[i] += step[i];
        }
        if linalg::norm2(&step) < 1e-14 {
            break;
        }
    }
    let p = [v[0], v[1], v[2]];
    if p.iter().all(|&pi| pi > 0.0 && pi < 1.0) {
        Some((p, v[3]))
    } else {
        None
    }
}

/// All points of the variety (within the simplex) satisfying the
/// orthogonality condition for the query `q`, with their multipliers.
pub fn orthogonality_candidates_k3(
    q: &SimplexPoint,
    v: &SplittingVariety,
    cfg: &CoverConfig,
) -> Result<Vec<(SimplexPoint, f64)>> {
    candidates_impl(q, v, None, cfg)
}

fn candidates_impl(
    q: &SimplexPoint,
    v: &SplittingVariety,
    cloud: Option<&[CurveSample]>,
    cfg: &CoverConfig,
) -> Result<Vec<(SimplexPoint, f64)>> {
    if q.k() != 3 || v.exponents.len() != 3 {
        return Err(Error::InvalidParameter(
            "orthogonality candidates are implemented for k = 3".into(),
        ));
    }
    if !q.is_interior() {
        return Err(Error::BoundaryPoint {
            index: q.coords().iter().position(|&p| p <= 0.0).unwrap_or(0),
        });
    }
    let c = [
        v.exponents[0] as f64,
        v.exponents[1] as f64,
        v.exponents[2] as f64,
    ];
    let qa = [q.coords()[0], q.coords()[1], q.coords()[2]];

    // The query itself solves the system with lambda = 0 when it lies on the
    // variety.
    if f_of(&c, v.log_c0, &qa).abs() <= cfg.candidate_tol {
        return Ok(vec![(q.clone(), 0.0)]);
    }

    let mut raw: Vec<([f64; 3], f64)> = Vec::new();

    if let Some(foot) = linear_foot(&c, v.log_c0, &qa) {
        let lam = implied_lambda(&c, &qa, &foot);
        raw.push((foot, lam));
    } else {
        // Scan-seeded stationary points: local distance minima along the
        // sampled curve polish into exact solutions. This catches solution
        // pairs that exist only on a sliver of the lambda axis (two branches
        // merging right where f crosses zero), which the sweep below can
        // step over.
        let own_cloud;
        let samples = match cloud {
            Some(s) => s,
            None => {
                own_cloud = sample_variety_curve(v, cfg.curve_scan);
                &own_cloud
            }
        };
        let mut by_dist: Vec<&CurveSample> = samples.iter().collect();
        by_dist.sort_by(|a, b| linalg::dist2(&a.p, &qa).total_cmp(&linalg::dist2(&b.p, &qa)));
        let mut seeds: Vec<[f64; 3]> = Vec::new();
        for s in by_dist.iter().take(60) {
            if seeds.iter().all(|e| linalg::dist2(e, &s.p) > 0.02) {
                seeds.push(s.p);
                if seeds.len() >= 12 {
                    break;
                }
            }
        }
        for p_seed in seeds {
            raw.push((p_seed, implied_lambda(&c, &qa, &p_seed)));
        }
        // Outer sweep: for each consecutive pair of lambdas (same sign),
        // track each fixed-lambda solution and bisect sign changes of f.
        let n = cfg.lambda_magnitudes.max(2);
        let ratio = (cfg.lambda_max / cfg.lambda_min).ln() / (n - 1) as f64;
        for sign in [1.0_f64, -1.0] {
            let lam_at = |i: usize| sign * cfg.lambda_min * (ratio * i as f64).exp();
            let mut prev: Vec<([f64; 3], f64)> = Vec::new();
            let mut prev_lam = 0.0;
            for i in 0..n {
                let lam = lam_at(i);
                let sols = solve_fixed_lambda(&c, &qa, lam, cfg.branch_scan);
                let cur: Vec<([f64; 3], f64)> = sols
                    .into_iter()
                    .map(|p| (p, f_of(&c, v.log_c0, &p)))
                    .collect();
                for &(p1, f1) in &cur {
                    if f1.abs() <= cfg.candidate_tol {
                        raw.push((p1, lam));
                        continue;
                    }
                    let Some(&(p0, f0)) = prev
                        .iter()
                        .filter(|(p0, _)| linalg::dist2(p0, &p1) < 0.08)
                        .min_by(|a, b| {
                            linalg::dist2(&a.0, &p1).total_cmp(&linalg::dist2(&b.0, &p1))
                        })
                    else {
                        continue;
                    };
                    if f0.signum() == f1.signum() || f0.is_nan() {
                        continue;
                    }
                    if let Some(hit) =
                        bisect_lambda(&c, v.log_c0, &qa, prev_lam, lam, p0, cfg.branch_scan)
                    {
                        raw.push(hit);
                    }
                }
                prev = cur;
                prev_lam = lam;
            }
        }
    }

    let mut out: Vec<(SimplexPoint, f64)> = Vec::new();
    for (p0, l0) in raw {
        let Some((p, lam)) = polish(&c, v.log_c0, &qa, p0, l0) else {
            continue;
        };
        if f_of(&c, v.log_c0, &p).abs() > cfg.candidate_tol {
            continue;
        }
        if orthogonality_residual(&c, &qa, &p, lam) > cfg.candidate_tol {
            continue;
        }
        debug_assert!((p[0] + p[1] + p[2] - 1.0).abs() <= 1e-8);
        let Ok(sp) = SimplexPoint::normalized(p.to_vec()) else {
            continue;
        };
        if !out.iter().any(|(e, _)| e.dist(&sp) <= 1e-8) {
            out.push((sp, lam));
        }
    }
    if out.is_empty() {
        return Err(Error::NoCandidates);
    }
    Ok(out)
}

/// Track one solution while bisecting lambda on a sign change of f.
fn bisect_lambda(
    c: &[f64; 3],
    log_c0: f64,
    q: &[f64; 3],
    mut lam_lo: f64,
    mut lam_hi: f64,
    mut near: [f64; 3],
    scan: usize,
) -> Option<([f64; 3], f64)> {
    let f_at = |lam: f64, near: &[f64; 3]| -> Option<([f64; 3], f64)> {
        let sols = solve_fixed_lambda(c, q, lam, scan);
        let p = sols
            .into_iter()
            .min_by(|a, b| linalg::dist2(a, near).total_cmp(&linalg::dist2(b, near)))?;
        if linalg::dist2(&p, near) > 0.15 {
            return None;
        }
        let f = f_of(c, log_c0, &p);
        Some((p, f))
    };
    let (_, mut f_lo) = f_at(lam_lo, &near)?;
    for _ in 0..60 {
        let mid = 0.5 * (lam_lo + lam_hi);
        let (p, f) = f_at(mid, &near)?;
        near = p;
        if f.abs() <= 1e-12 || (lam_hi - lam_lo).abs() <= 1e-12 * lam_hi.abs().max(1e-9) {
            return Some((p, mid));
        }
        if f.signum() == f_lo.signum() {
            lam_lo = mid;
            f_lo = f;
        } else {
            lam_hi = mid;
        }
    }
    f_at(0.5 * (lam_lo + lam_hi), &near).map(|(p, _)| (p, 0.5 * (lam_lo + lam_hi)))
}

/// Exact perpendicular foot for varieties whose zero set is a line in the
/// simplex (two opposite nonzero exponents). Returns the foot when it lies
/// strictly inside the simplex.
fn linear_foot(c: &[f64; 3], log_c0: f64, q: &[f64; 3]) -> Option<[f64; 3]> {
    let nz: Vec<usize> = (0..3).filter(|&i| c[i] != 0.0).collect();
    if nz.len() != 2 || c[nz[0]] != -c[nz[1]] {
        return None;
    }
    let (i, j) = (nz[0], nz[1]);
    let l = 3 - i - j;
    // f = 0 <=> p_j = r p_i with r = exp(log_c0 / c_j) (using c_i = -c_j).
    let r = (log_c0 / c[j]).exp();
    // Segment: p(t) = t e_i + r t e_j + (1 - (1 + r) t) e_l.
    let mut u = [0.0; 3];
    u[i] = 1.0;
    u[j] = r;
    u[l] = -(1.0 + r);
    let mut w = [0.0; 3];
    w[l] = 1.0;
    let t = (0..3).map(|d| (q[d] - w[d]) * u[d]).sum::<f64>()
        / (0..3).map(|d| u[d] * u[d]).sum::<f64>();
    let t_max = 1.0 / (1.0 + r);
    if !(t > 1e-12 && t < t_max - 1e-12) {
        return None;
    }
    let mut p = [0.0; 3];
    for d in 0..3 {
        p[d] = w[d] + t * u[d];
    }
    Some(p)
}

/// Multiplier implied by the orthogonality condition at a known solution.
fn implied_lambda(c: &[f64; 3], q: &[f64; 3], p: &[f64; 3]) -> f64 {
    let s: f64 = (0..3).map(|i| c[i] / p[i]).sum();
    let mut best = 0.0;
    let mut best_mag = 0.0;
    for i in 0..3 {
        let coeff = c[i] / p[i] - s / 3.0;
        if coeff.abs() > best_mag {
            best_mag = coeff.abs();
            best = (q[i] - p[i]) / coeff;
        }
    }
    best
}

/// Interior sample points of a variety curve, swept along each coordinate.
#[derive(Debug, Clone)]
pub struct CurveSample {
    pub p: [f64; 3],
    /// Driving coordinate of the parameterization that produced this sample.
    pub axis: usize,
    /// Value of the driving coordinate.
    pub t: f64,
}

/// Sample the zero set of a variety inside the simplex: for each driving
/// coordinate, fix `p_axis = t` on a grid and solve for the remaining
/// coordinate (at most two roots per fiber).
pub fn sample_variety_curve(v: &SplittingVariety, scan: usize) -> Vec<CurveSample> {
    let c = [
        v.exponents[0] as f64,
        v.exponents[1] as f64,
        v.exponents[2] as f64,
    ];
    let mut out = Vec::new();
    for axis in 0..3 {
        let (u1, u2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for s in 1..scan {
            let t = s as f64 / scan as f64;
            // phi(w) = log monomial at p with p_axis = t, p_u1 = w.
            let phi = |w: f64| -> f64 {
                let rest = 1.0 - t - w;
                if rest <= 0.0 {
                    return f64::NAN;
                }
                v.log_c0 + c[axis] * t.ln() + c[u1] * w.ln() + c[u2] * rest.ln()
            };
            let hi = 1.0 - t;
            let steps = 96;
            let mut prev: Option<(f64, f64)> = None;
            for r in 1..steps {
                let w = hi * r as f64 / steps as f64;
                let val = phi(w);
                if let Some((pw, pv)) = prev {
                    if !val.is_nan() && !pv.is_nan() && pv.signum() != val.signum() {
                        let root = roots::bisect(phi, pw, w, 1e-14);
                        let mut p = [0.0; 3];
                        p[axis] = t;
                        p[u1] = root;
                        p[u2] = 1.0 - t - root;
                        if p[u2] > 0.0 {
                            out.push(CurveSample { p, axis, t });
                        }
                    }
                }
                prev = Some((w, val));
            }
        }
    }
    out
}

/// Refine a curve sample toward the locally nearest curve point to `q` by a
/// golden search over the driving coordinate, re-solving the fiber root at
/// each step.
fn refine_on_curve(
    v: &SplittingVariety,
    q: &[f64; 3],
    sample: &CurveSample,
    step: f64,
) -> ([f64; 3], f64) {
    let c = [
        v.exponents[0] as f64,
        v.exponents[1] as f64,
        v.exponents[2] as f64,
    ];
    let axis = sample.axis;
    let (u1, u2) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let w0 = sample.p[u1];
    let point_at = |t: f64| -> Option<[f64; 3]> {
        if t <= 0.0 || t >= 1.0 {
            return None;
        }
        let phi = |w: f64| -> f64 {
            let rest = 1.0 - t - w;
            if rest <= 0.0 || w <= 0.0 {
                return f64::NAN;
            }
            v.log_c0 + c[axis] * t.ln() + c[u1] * w.ln() + c[u2] * rest.ln()
        };
        // Bracket around the previous fiber root.
        let mut half = (2.0 * step * (1.0 - t)).max(1e-6);
        for _ in 0..6 {
            let lo = (w0 - half).max(1e-15);
            let hi = (w0 + half).min(1.0 - t - 1e-15);
            if lo >= hi {
                return None;
            }
            let (flo, fhi) = (phi(lo), phi(hi));
            if !flo.is_nan() && !fhi.is_nan() && flo.signum() != fhi.signum() {
                let w = roots::bisect(phi, lo, hi, 1e-14);
                let mut p = [0.0; 3];
                p[axis] = t;
                p[u1] = w;
                p[u2] = 1.0 - t - w;
                return Some(p);
            }
            half *= 2.0;
        }
        None
    };
    let dist_at = |t: f64| -> f64 {
        match point_at(t) {
            Some(p) => linalg::dist2(&p, q),
            None => f64::INFINITY,
        }
    };
    let (t_best, d_best) = roots::golden_min(
        dist_at,
        (sample.t - step).max(1e-12),
        (sample.t + step).min(1.0 - 1e-12),
        1e-12,
    );
    match point_at(t_best) {
        Some(p) if d_best.is_finite() => (p, d_best),
        _ => (sample.p, linalg::dist2(&sample.p, q)),
    }
}

/// Minimum distance from `q` to the zero set of a variety inside the simplex.
/// The primary route is the orthogonality-condition solver; the sampled curve
/// covers closure minima (simplex-boundary endpoints) and acts as fallback,
/// flagged approximate, when no candidate exists or the sampled minimum wins.
pub fn min_distance_to_variety(
    q: &SimplexPoint,
    v: &SplittingVariety,
    cfg: &CoverConfig,
) -> Result<DistanceResult> {
    let cloud = sample_variety_curve(v, cfg.curve_scan);
    min_distance_to_variety_with_cloud(q, v, &cloud, cfg)
}

pub fn min_distance_to_variety_with_cloud(
    q: &SimplexPoint,
    v: &SplittingVariety,
    cloud: &[CurveSample],
    cfg: &CoverConfig,
) -> Result<DistanceResult> {
    let qa = [q.coords()[0], q.coords()[1], q.coords()[2]];
    let candidates = if q.is_interior() {
        match candidates_impl(q, v, Some(cloud), cfg) {
            Ok(c) => c,
            Err(Error::NoCandidates) => Vec::new(),
            Err(e) => return Err(e),
        }
    } else {
        Vec::new()
    };
    let best_candidate = candidates
        .into_iter()
        .map(|(p, lam)| {
            let d = p.dist(q);
            (d, p, lam)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));

    let scan_best = cloud
        .iter()
        .min_by(|a, b| linalg::dist2(&a.p, &qa).total_cmp(&linalg::dist2(&b.p, &qa)));
    let refined = scan_best.map(|s| refine_on_curve(v, &qa, s, 2.0 / cfg.curve_scan as f64));

    match (best_candidate, refined) {
        (Some((d, p, lam)), Some((rp, rd))) => {
            if rd < d - 1e-9 {
                // Closure minimum (curve endpoint on the simplex boundary).
                Ok(DistanceResult {
                    distance: rd,
                    argmin: SimplexPoint::normalized(rp.to_vec())?,
                    lambda: 0.0,
                    feasible_for_set: true,
                    approximate: true,
                })
            } else {
                Ok(DistanceResult {
                    distance: d,
                    argmin: p,
                    lambda: lam,
                    feasible_for_set: true,
                    approximate: false,
                })
            }
        }
        (Some((d, p, lam)), None) => Ok(DistanceResult {
            distance: d,
            argmin: p,
            lambda: lam,
            feasible_for_set: true,
            approximate: false,
        }),
        (None, Some((rp, rd))) => Ok(DistanceResult {
            distance: rd,
            argmin: SimplexPoint::normalized(rp.to_vec())?,
            lambda: 0.0,
            feasible_for_set: true,
            approximate: true,
        }),
        (None, None) => Err(Error::NoCandidates),
    }
}

/// Signed satisfaction test of a set's constraints at a point: all varieties
/// except those in `skip_class` must match their sign within tau.
fn feasible_for_signs(
    analysis: &ContinuityAnalysis,
    omega: &[i8],
    skip_class: Option<usize>,
    p: &[f64; 3],
) -> bool {
    let family = &analysis.family;
    let z: Vec<f64> = p.iter().map(|&x| -x.ln()).collect();
    let slacks = family.class_slacks(&z);
    for (ci, &t) in slacks.iter().enumerate() {
        if Some(ci) == skip_class {
            continue;
        }
        let member = family.classes()[ci].members[0];
        let s = omega[member - 1] * family.orientation_of(member);
        if (s as f64) * t > 1e-9 {
            return false;
        }
    }
    true
}

/// Minimum distance from `q` to a continuity set: zero inside the closed sign
/// pattern, otherwise the minimum over feasibility-filtered per-variety
/// orthogonality argmins, feasibility-filtered curve samples (refined), and
/// the set's vertices.
pub fn min_distance_to_set(
    q: &SimplexPoint,
    set: &ContinuitySet,
    analysis: &ContinuityAnalysis,
    cfg: &CoverConfig,
) -> Result<f64> {
    let clouds = set_clouds(set, analysis, cfg);
    Ok(min_distance_to_set_with_clouds(q, set, analysis, &clouds, cfg).0)
}

/// Per-touching-class feasibility-filtered curve samples for one set.
pub fn set_clouds(
    set: &ContinuitySet,
    analysis: &ContinuityAnalysis,
    cfg: &CoverConfig,
) -> Vec<(usize, Vec<CurveSample>)> {
    let family = &analysis.family;
    let touching_classes: std::collections::BTreeSet<usize> =
        set.touching.iter().map(|&l| family.class_of(l)).collect();
    touching_classes
        .into_iter()
        .map(|ci| {
            let rep = family.classes()[ci].members[0];
            let v = &family.varieties()[rep - 1];
            let samples: Vec<CurveSample> = sample_variety_curve(v, cfg.curve_scan)
                .into_iter()
                .filter(|s| feasible_for_signs(analysis, set.omega.signs(), Some(ci), &s.p))
                .collect();
            (ci, samples)
        })
        .collect()
}

fn min_distance_to_set_with_clouds(
    q: &SimplexPoint,
    set: &ContinuitySet,
    analysis: &ContinuityAnalysis,
    clouds: &[(usize, Vec<CurveSample>)],
    cfg: &CoverConfig,
) -> (f64, bool) {
    let family = &analysis.family;
    let qa = [q.coords()[0], q.coords()[1], q.coords()[2]];

    // Inside (closed signs): distance zero. Boundary coordinates give
    // infinite z entries whose slack signs are the correct one-sided limits;
    // indeterminate (NaN) slacks fail the comparison and fall through to the
    // distance path.
    {
        let z: Vec<f64> = qa.iter().map(|&x| -x.ln()).collect();
        let slacks = family.class_slacks(&z);
        let class_signs = family
            .class_signs(set.omega.signs())
            .expect("certified sets have consistent signs");
        if slacks
            .iter()
            .zip(&class_signs)
            .all(|(&t, &s)| (s as f64) * t <= 0.0)
        {
            return (0.0, false);
        }
    }

    let mut best = f64::INFINITY;
    let mut approximate = false;

    for v in &set.vertices {
        best = best.min(linalg::dist2(v.coords(), &qa));
    }

    for (ci, samples) in clouds {
        let rep = family.classes()[*ci].members[0];
        let variety = &family.varieties()[rep - 1];
        // Orthogonality argmins, filtered by the other sign constraints.
        if q.is_interior() {
            if let Ok(cands) = candidates_impl(q, variety, Some(samples), cfg) {
                for (p, _) in cands {
                    let pa = [p.coords()[0], p.coords()[1], p.coords()[2]];
                    if feasible_for_signs(analysis, set.omega.signs(), Some(*ci), &pa) {
                        best = best.min(p.dist(q));
                    }
                }
            }
        }
        // Feasible curve samples with local refinement: covers infeasible
        // argmins (minimum at the feasible arc's end) and boundary queries.
        if let Some(s) = samples
            .iter()
            .min_by(|a, b| linalg::dist2(&a.p, &qa).total_cmp(&linalg::dist2(&b.p, &qa)))
        {
            let (rp, rd) = refine_on_curve(variety, &qa, s, 2.0 / cfg.curve_scan as f64);
            let d_use = if feasible_for_signs(analysis, set.omega.signs(), Some(*ci), &rp) {
                rd
            } else {
                linalg::dist2(&s.p, &qa)
            };
            if d_use < best - 1e-12 {
                best = d_use;
                approximate = true;
            }
        }
    }
    (best, approximate)
}

/// Build the (epsilon, delta)-cover of one continuity set on the grid
/// `eta = ceil(sqrt(k)/epsilon)`: retain points inside the set or within
/// `delta` of it.
pub fn build_cover(
    set: &ContinuitySet,
    analysis: &ContinuityAnalysis,
    epsilon: f64,
    delta: f64,
    cfg: &CoverConfig,
) -> Result<CoverGrid> {
    if delta < epsilon {
        return Err(Error::InvalidParameter(
            "delta must be at least epsilon".into(),
        ));
    }
    let k = analysis.family.k();
    let eta = eta_for_epsilon(epsilon, k)?;
    let grid = enumerate_types(k, eta)?;
    let clouds = set_clouds(set, analysis, cfg);
    let class_signs = analysis
        .family
        .class_signs(set.omega.signs())
        .expect("certified sets have consistent signs");

    let points: Vec<Option<CoverPoint>> = grid
        .par_iter()
        .map(|g| {
            let p: Vec<f64> = g.counts().iter().map(|&c| c as f64 / eta as f64).collect();
            let sp = SimplexPoint::new(p.clone()).expect("grid point is on the simplex");
            // Strict membership; boundary coordinates resolve through their
            // one-sided limits (infinite slacks of definite sign).
            {
                let z: Vec<f64> = p.iter().map(|&x| -x.ln()).collect();
                let slacks = analysis.family.class_slacks(&z);
                if slacks
                    .iter()
                    .zip(&class_signs)
                    .all(|(&t, &s)| (s as f64) * t < 0.0)
                {
                    return Some(CoverPoint {
                        counts: g.counts().to_vec(),
                        label: CoverLabel::Inside,
                    });
                }
            }
            let (d, approx) = min_distance_to_set_with_clouds(&sp, set, analysis, &clouds, cfg);
            if d <= delta + 1e-9 {
                Some(CoverPoint {
                    counts: g.counts().to_vec(),
                    label: CoverLabel::Near {
                        distance: d,
                        approximate: approx,
                    },
                })
            } else {
                None
            }
        })
        .collect();

    Ok(CoverGrid {
        omega: set.omega.clone(),
        epsilon,
        delta,
        eta,
        points: points.into_iter().flatten().collect(),
    })
}
