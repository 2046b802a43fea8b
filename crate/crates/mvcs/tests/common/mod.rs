//! Shared helpers for the oracle suites. Everything here re-derives results
//! through arithmetic independent of the library's computation paths:
//! direct factorial ratios and integer powers instead of log-domain sums.
#![allow(dead_code)]

use rand::prelude::*;
use rand::rngs::StdRng;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Uniformly distributed interior point of the k-simplex.
pub fn random_interior(rng: &mut StdRng, k: usize) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..k)
            .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
            .collect();
        let s: f64 = e.iter().sum();
        let p: Vec<f64> = e.iter().map(|v| v / s).collect();
        if p.iter().all(|&v| v > 1e-9) {
            return p;
        }
    }
}

/// All count vectors over `k` slots summing to `n` (independent enumeration).
pub fn all_counts(k: usize, n: u64) -> Vec<Vec<u64>> {
    fn rec(slots: usize, rem: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if slots == 1 {
            prefix.push(rem);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for c in (0..=rem).rev() {
            prefix.push(c);
            rec(slots - 1, rem - c, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, n, &mut Vec::new(), &mut out);
    out
}

fn factorial_u128(n: u64) -> u128 {
    (1..=n as u128).product()
}

/// Multinomial pmf via direct factorial ratios and integer powers (n <= 20).
pub fn direct_pmf(counts: &[u64], p: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut coeff = factorial_u128(n) as f64;
    for &c in counts {
        coeff /= factorial_u128(c) as f64;
    }
    let mut prob = coeff;
    for (&c, &pi) in counts.iter().zip(p) {
        if c > 0 {
            prob *= pi.powi(c as i32);
        }
    }
    prob
}

/// Exact p-value by brute force: the partial sum over all types at most as
/// likely as the observation.
pub fn brute_pvalue(phat: &[u64], p: &[f64]) -> f64 {
    let n: u64 = phat.iter().sum();
    let anchor = direct_pmf(phat, p);
    all_counts(phat.len(), n)
        .iter()
        .map(|q| direct_pmf(q, p))
        .filter(|&prob| prob <= anchor)
        .sum()
}

/// Whether some non-anchor term sits within a relative band of the anchor
/// (the comparison is numerically ambiguous there).
pub fn near_tie(phat: &[u64], p: &[f64], rel: f64) -> bool {
    let n: u64 = phat.iter().sum();
    let anchor = direct_pmf(phat, p);
    all_counts(phat.len(), n).iter().any(|q| {
        q.as_slice() != phat && {
            let prob = direct_pmf(q, p);
            (prob - anchor).abs() <= rel * anchor.max(1e-300)
        }
    })
}

/// Variety function via direct powers: `1 - c0 * prod p_i^{c_i}`.
pub fn direct_f(exponents: &[i64], log_c0: f64, p: &[f64]) -> f64 {
    let mut monomial = log_c0.exp();
    for (&c, &pi) in exponents.iter().zip(p) {
        if c != 0 {
            monomial *= pi.powi(c as i32);
        }
    }
    1.0 - monomial
}

/// Dense 1-d parameterization oracle for the distance from `q` to the zero
/// set of a variety inside the simplex: for each driving coordinate, fix
/// `p_axis = t` on a fine grid, solve the fiber for the free coordinate by
/// bisection of the log-monomial, and refine the best parameter by golden
/// search.
pub fn curve_distance_oracle(exponents: &[i64], log_c0: f64, q: &[f64], scan: usize) -> f64 {
    curve_distance_oracle_filtered(exponents, log_c0, q, scan, &|_| true)
}

/// Same oracle restricted to curve points accepted by `feasible` (used to
/// measure distance to the arc of a variety bounding one continuity set).
pub fn curve_distance_oracle_filtered(
    exponents: &[i64],
    log_c0: f64,
    q: &[f64],
    scan: usize,
    feasible: &dyn Fn(&[f64; 3]) -> bool,
) -> f64 {
    let c: Vec<f64> = exponents.iter().map(|&v| v as f64).collect();
    let mut best = f64::INFINITY;
    for axis in 0..3usize {
        let (u1, u2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let phi = |t: f64, w: f64| -> f64 {
            let rest = 1.0 - t - w;
            if rest <= 0.0 || w <= 0.0 || t <= 0.0 {
                return f64::NAN;
            }
            log_c0 + c[axis] * t.ln() + c[u1] * w.ln() + c[u2] * rest.ln()
        };
        let fiber_points = |t: f64| -> Vec<[f64; 3]> {
            let mut pts = Vec::new();
            let hi = 1.0 - t;
            let steps = 256usize;
            let mut prev: Option<(f64, f64)> = None;
            for r in 1..steps {
                let w = hi * r as f64 / steps as f64;
                let v = phi(t, w);
                if let Some((pw, pv)) = prev {
                    if !v.is_nan() && !pv.is_nan() && pv.signum() != v.signum() {
                        let (mut a, mut b, mut fa) = (pw, w, pv);
                        for _ in 0..80 {
                            let m = 0.5 * (a + b);
                            let fm = phi(t, m);
                            if fm == 0.0 {
                                a = m;
                                b = m;
                                break;
                            }
                            if fm.signum() == fa.signum() {
                                a = m;
                                fa = fm;
                            } else {
                                b = m;
                            }
                        }
                        let w = 0.5 * (a + b);
                        let mut p = [0.0; 3];
                        p[axis] = t;
                        p[u1] = w;
                        p[u2] = 1.0 - t - w;
                        pts.push(p);
                    }
                }
                prev = if v.is_nan() { None } else { Some((w, v)) };
            }
            pts
        };
        let dist_at = |t: f64| -> f64 {
            fiber_points(t)
                .iter()
                .filter(|p| feasible(p))
                .map(|p| {
                    p.iter()
                        .zip(q)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let mut best_t = f64::NAN;
        let mut best_d = f64::INFINITY;
        for s in 1..scan {
            let t = s as f64 / scan as f64;
            let d = dist_at(t);
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        if best_d.is_finite() {
            // Golden refinement of the driving coordinate.
            let step = 1.0 / scan as f64;
            let (mut lo, mut hi) = ((best_t - step).max(1e-12), (best_t + step).min(1.0 - 1e-12));
            const INV_PHI: f64 = 0.618_033_988_749_894_9;
            let mut x1 = hi - INV_PHI * (hi - lo);
            let mut x2 = lo + INV_PHI * (hi - lo);
            let mut f1 = dist_at(x1);
            let mut f2 = dist_at(x2);
            for _ in 0..120 {
                if hi - lo < 1e-13 {
                    break;
                }
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - INV_PHI * (hi - lo);
                    f1 = dist_at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + INV_PHI * (hi - lo);
                    f2 = dist_at(x2);
                }
            }
            best = best.min(dist_at(0.5 * (lo + hi))).min(best_d);
        }
    }
    best
}
