//! Log-barrier Newton minimization of a sum of exponentials of affine forms
//! over a polyhedron.
//!
//! Minimizes `F(u) = sum_i exp(-(map_i . u + shift_i))` subject to
//! `a_j . u <= b_j`. The objective is smooth and convex and the constraints
//! are linear, so a short central path with damped Newton steps converges in
//! a handful of stages at these dimensions (<= 3 variables).

use crate::error::{Error, Result};
use crate::numeric::linalg;

pub struct SumExpProblem<'a> {
    /// Rows of the affine map inside the exponentials.
    pub map: &'a [Vec<f64>],
    pub shift: &'a [f64],
    /// Halfspace constraints `a . u <= b`.
    pub cons: &'a [(Vec<f64>, f64)],
}

/// Minimize the problem from a strictly feasible `start`. Returns the
/// objective value and the minimizer. `gap_tol` bounds the final duality gap.
pub fn minimize_sum_exp(p: &SumExpProblem, start: &[f64], gap_tol: f64) -> Result<(f64, Vec<f64>)> {
    let dim = start.len();
    let ncons = p.cons.len().max(1) as f64;
    let mut u = start.to_vec();
    // Verify strict feasibility of the start.
    for (a, b) in p.cons {
        if linalg::dot(a, &u) >= *b {
            return Err(Error::SolverFailure(
                "barrier start is not strictly feasible".into(),
            ));
        }
    }

    let objective = |u: &[f64]| -> f64 {
        p.map
            .iter()
            .zip(p.shift)
            .map(|(row, &s)| (-(linalg::dot(row, u) + s)).exp())
            .sum()
    };

    let mut t = 1.0_f64;
    loop {
        // Newton iterations for t * F(u) - sum log slack.
        for _ in 0..120 {
            let mut grad = vec![0.0; dim];
            let mut hess = vec![vec![0.0; dim]; dim];
            for (row, &s) in p.map.iter().zip(p.shift) {
                let e = (-(linalg::dot(row, &u) + s)).exp();
                for i in 0..dim {
                    grad[i] -= t * e * row[i];
                    for j in 0..dim {
                        hess[i][j] += t * e * row[i] * row[j];
                    }
                }
            }
            for (a, b) in p.cons {
                let slack = b - linalg::dot(a, &u);
                if slack <= 0.0 {
                    return Err(Error::SolverFailure("barrier left the interior".into()));
                }
                for i in 0..dim {
                    grad[i] += a[i] / slack;
                    for j in 0..dim {
                        hess[i][j] += a[i] * a[j] / (slack * slack);
                    }
                }
            }
            let Some(step) = linalg::solve(&hess, &grad.iter().map(|g| -g).collect::<Vec<_>>())
            else {
                return Err(Error::SolverFailure("barrier Hessian is singular".into()));
            };
            let decrement2: f64 = step
                .iter()
                .zip(&grad)
                .map(|(d, g)| -d * g)
                .sum::<f64>()
                .max(0.0);
            if decrement2 * 0.5 < 1e-13 {
                break;
            }
            // Backtracking line search keeping strict feasibility.
            let phi = |u: &[f64]| -> Option<f64> {
                let mut v = t * objective(u);
                for (a, b) in p.cons {
                    let slack = b - linalg::dot(a, u);
                    if slack <= 0.0 {
                        return None;
                    }
                    v -= slack.ln();
                }
                Some(v)
            };
            let phi0 = phi(&u)
                .ok_or_else(|| Error::SolverFailure("barrier iterate left the interior".into()))?;
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..70 {
                let cand: Vec<f64> = u.iter().zip(&step).map(|(x, d)| x + alpha * d).collect();
                if let Some(v) = phi(&cand) {
                    if v <= phi0 - 0.01 * alpha * decrement2 {
                        u = cand;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if ncons / t <= gap_tol * 0.1 {
            break;
        }
        t *= 12.0;
        if t > 1e18 {
            break;
        }
    }
    Ok((objective(&u), u))
}
