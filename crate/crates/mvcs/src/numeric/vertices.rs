//! Vertex enumeration for low-dimensional polyhedra given as halfspace
//! intersections: solve every `dim`-subset of constraint rows as equalities,
//! keep the solutions that satisfy all rows, and merge duplicates.

use crate::numeric::linalg;

/// Vertices of `{x : rows.0 . x <= rows.1}`. Rank-deficient subsets are
/// skipped; feasibility is checked within `feas_tol`; points closer than
/// `dedup_tol` are merged.
pub fn polytope_vertices(
    rows: &[(Vec<f64>, f64)],
    dim: usize,
    feas_tol: f64,
    dedup_tol: f64,
) -> Vec<Vec<f64>> {
    let m = rows.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if m < dim {
        return out;
    }
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(x) = linalg::solve(&a, &b) {
            let feasible = rows.iter().all(|(a, b)| linalg::dot(a, &x) <= b + feas_tol);
            if feasible && !out.iter().any(|v| linalg::dist2(v, &x) <= dedup_tol) {
                out.push(x);
            }
        }
        // Next combination in lexicographic order.
        let mut i = dim;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + m - dim {
                idx[i] += 1;
                for j in i + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let rows = vec![
            (vec![1.0, 0.0], 1.0),
            (vec![0.0, 1.0], 1.0),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, -1.0], 0.0),
        ];
        let mut v = polytope_vertices(&rows, 2, 1e-9, 1e-9);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v.len(), 4);
        assert_eq!(v[0], vec![0.0, 0.0]);
        assert_eq!(v[3], vec![1.0, 1.0]);
    }

    #[test]
    fn duplicate_rows_do_not_duplicate_vertices() {
        let rows = vec![(vec![1.0], 2.0), (vec![1.0], 2.0), (vec![-1.0], 0.0)];
        let v = polytope_vertices(&rows, 1, 1e-9, 1e-9);
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn halfplane_with_orthant() {
        // z1 - z2 <= ln 2 over the nonnegative quadrant.
        let ln2 = 2.0_f64.ln();
        let rows = vec![
            (vec![1.0, -1.0], ln2),
            (vec![-1.0, 0.0], 0.0),
            (vec![0.0, -1.0], 0.0),
        ];
        let mut v = polytope_vertices(&rows, 2, 1e-9, 1e-9);
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v.len(), 2);
        assert!(v[0][0].abs() < 1e-12 && v[0][1].abs() < 1e-12);
        assert!((v[1][0] - ln2).abs() < 1e-12 && v[1][1].abs() < 1e-12);
    }

    #[test]
    fn unbounded_wedge_has_apex_only() {
        let rows = vec![(vec![-1.0, 0.0], 0.0), (vec![0.0, -1.0], 0.0)];
        let v = polytope_vertices(&rows, 2, 1e-9, 1e-9);
        assert_eq!(v, vec![vec![0.0, 0.0]]);
    }
}
