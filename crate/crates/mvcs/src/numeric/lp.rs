//! Max-margin feasibility via a dense two-phase simplex method.
//!
//! The only LP this crate needs: given halfspaces `a_j . x <= b_j` over a
//! boxed free variable `x`, maximize the uniform slack `sigma` subject to
//! `a_j . x + sigma <= b_j` and `sigma <= 1`. A positive optimum certifies a
//! strictly feasible interior point (returned for use as a barrier start);
//! a negative optimum measures infeasibility.

use crate::error::{Error, Result};

const EPS: f64 = 1e-11;

#[derive(Debug, Clone)]
pub struct MaxMargin {
    /// Optimal uniform slack. Positive means strictly feasible.
    pub margin: f64,
    /// The maximizing point in the original coordinates.
    pub point: Vec<f64>,
}

/// Maximize `sigma` s.t. `rows.0 . x + sigma <= rows.1`, `|x_i| <= box_bound`,
/// `sigma <= 1`. The box rows share the sigma slack, so a positive margin
/// means the point is strictly interior to the box as well.
pub fn max_margin(rows: &[(Vec<f64>, f64)], dim: usize, box_bound: f64) -> Result<MaxMargin> {
    // Variables y = [v_1..v_dim, t] >= 0 with x_i = v_i - 2 * box_bound and
    // sigma = 1 - t, so "maximize sigma" becomes "minimize t". The variable
    // shift is twice the box so the inherent v >= 0 bound never binds; the
    // box itself enters as ordinary margined rows.
    let shift = 2.0 * box_bound;
    let mut all_rows: Vec<(Vec<f64>, f64)> = rows.to_vec();
    for i in 0..dim {
        let mut up = vec![0.0; dim];
        up[i] = 1.0;
        all_rows.push((up, box_bound));
        let mut down = vec![0.0; dim];
        down[i] = -1.0;
        all_rows.push((down, box_bound));
    }

    let mut g: Vec<Vec<f64>> = Vec::with_capacity(all_rows.len());
    let mut h: Vec<f64> = Vec::with_capacity(all_rows.len());
    for (a, b) in &all_rows {
        debug_assert_eq!(a.len(), dim);
        let mut row = a.clone();
        row.push(-1.0);
        g.push(row);
        h.push(b - 1.0 + a.iter().sum::<f64>() * shift);
    }
    let mut cost = vec![0.0; dim + 1];
    cost[dim] = 1.0;

    let y = simplex_min(&g, &h, &cost)?;
    let point = (0..dim).map(|i| y[i] - shift).collect();
    Ok(MaxMargin {
        margin: 1.0 - y[dim],
        point,
    })
}

/// Minimize `c . y` subject to `g y <= h`, `y >= 0`. Bland's rule throughout.
#[allow(clippy::needless_range_loop)]
fn simplex_min(g: &[Vec<f64>], h: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let m = g.len();
    let n = c.len();
    let mut n_art = 0usize;
    // Columns: structural | slack (one per row) | artificial | rhs.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut art_of_row: Vec<Option<usize>> = vec![None; m];
    for (i, gr) in g.iter().enumerate() {
        let negate = h[i] < 0.0;
        let s = if negate { -1.0 } else { 1.0 };
        let mut row = vec![0.0; n + m];
        for (j, &v) in gr.iter().enumerate() {
            row[j] = s * v;
        }
        row[n + i] = s; // slack
        if negate {
            art_of_row[i] = Some(n_art);
            n_art += 1;
        }
        row.push(s * h[i]);
        rows.push(row);
    }
    // Insert artificial columns before the rhs.
    let ncols = n + m + n_art + 1;
    for (i, row) in rows.iter_mut().enumerate() {
        let rhs = row.pop().unwrap();
        row.resize(n + m + n_art, 0.0);
        if let Some(a) = art_of_row[i] {
            row[n + m + a] = 1.0;
        }
        row.push(rhs);
    }
    let mut basis: Vec<usize> = (0..m)
        .map(|i| match art_of_row[i] {
            Some(a) => n + m + a,
            None => n + i,
        })
        .collect();

    let art_start = n + m;
    if n_art > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut obj = vec![0.0; ncols];
        for j in art_start..art_start + n_art {
            obj[j] = 1.0;
        }
        for (i, &bv) in basis.iter().enumerate() {
            if obj[bv] != 0.0 {
                let f = obj[bv];
                for j in 0..ncols {
                    obj[j] -= f * rows[i][j];
                }
            }
        }
        run_simplex(&mut rows, &mut obj, &mut basis, art_start)?;
        let infeas: f64 = basis
            .iter()
            .enumerate()
            .filter(|(_, &bv)| bv >= art_start)
            .map(|(i, _)| rows[i][ncols - 1])
            .sum();
        if infeas > 1e-7 {
            return Err(Error::SolverFailure(
                "phase-1 simplex: no feasible point (unexpected for the boxed slack program)"
                    .into(),
            ));
        }
    }
    // Phase 2: real objective; artificial columns are barred from entering.
    let mut obj = vec![0.0; ncols];
    obj[..n].copy_from_slice(c);
    for (i, &bv) in basis.iter().enumerate() {
        if obj[bv] != 0.0 {
            let f = obj[bv];
            for j in 0..ncols {
                obj[j] -= f * rows[i][j];
            }
        }
    }
    run_simplex(&mut rows, &mut obj, &mut basis, art_start)?;

    let mut y = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            y[bv] = rows[i][ncols - 1];
        }
    }
    Ok(y)
}

#[allow(clippy::needless_range_loop)]
fn run_simplex(
    rows: &mut [Vec<f64>],
    obj: &mut [f64],
    basis: &mut [usize],
    enter_limit: usize,
) -> Result<()> {
    let ncols = obj.len();
    let rhs = ncols - 1;
    for _ in 0..20_000 {
        // Bland: lowest-index column with a negative reduced cost.
        let Some(col) = (0..enter_limit).find(|&j| obj[j] < -EPS) else {
            return Ok(());
        };
        let mut pick: Option<(usize, f64)> = None;
        for (i, row) in rows.iter().enumerate() {
            if row[col] > EPS {
                let ratio = row[rhs] / row[col];
                let better = match pick {
                    None => true,
                    Some((pi, pr)) => {
                        ratio < pr - 1e-12 || (ratio < pr + 1e-12 && basis[i] < basis[pi])
                    }
                };
                if better {
                    pick = Some((i, ratio));
                }
            }
        }
        let Some((piv, _)) = pick else {
            return Err(Error::SolverFailure("simplex: unbounded objective".into()));
        };
        // Pivot.
        let f = rows[piv][col];
        for v in rows[piv].iter_mut() {
            *v /= f;
        }
        for i in 0..rows.len() {
            if i != piv && rows[i][col].abs() > 0.0 {
                let f = rows[i][col];
                for j in 0..ncols {
                    let delta = f * rows[piv][j];
                    rows[i][j] -= delta;
                }
            }
        }
        if obj[col].abs() > 0.0 {
            let f = obj[col];
            for j in 0..ncols {
                obj[j] -= f * rows[piv][j];
            }
        }
        basis[piv] = col;
    }
    Err(Error::SolverFailure("simplex: iteration limit".into()))
}
