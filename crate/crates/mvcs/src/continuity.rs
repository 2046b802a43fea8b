//! Enumeration and certification of the continuity sets of the exact
//! p-value.
//!
//! A sign vector picks one side of every discontinuity variety; the
//! corresponding candidate set is nonempty exactly when the associated system
//! of z-space halfspaces admits points whose `sum p_i` range straddles 1.
//! The minimum is a smooth convex program (sum of exponentials over linear
//! constraints, solved by a log-barrier Newton method); the maximum over the
//! nonnegative-orthant polyhedron is attained at one of its vertices because
//! the recession cone is nonnegative and the objective is nonincreasing along
//! nonnegative rays — so the unbounded branch of the maximum is unreachable.
//!
//! Because every exponent vector sums to zero, all constraints are invariant
//! under the diagonal shift `z + s * 1` (the candidate sets are cones in
//! p-space): any feasible system automatically reaches `sum p_i = 1`, so the
//! certificate reduces in practice to strict feasibility. Both quantities are
//! still computed and reported per the contract.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{barrier, linalg, lp, roots, vertices};
use crate::simplex::{EmpiricalDistribution, SimplexPoint};
use crate::variety::VarietyFamily;

/// Dedup tolerance for z-space polyhedron vertices.
const POLY_DEDUP_TOL: f64 = 1e-9;

/// Tolerances and limits for the continuity machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityConfig {
    /// Margin by which strict splitting inequalities are realized as closed
    /// constraints.
    pub tau: f64,
    /// Minimal LP slack accepted as strict feasibility.
    pub feas_threshold: f64,
    /// Duality-gap target of the convex minimization.
    pub solver_gap: f64,
    /// Feasibility tolerance for polyhedron vertex checks.
    pub feas_tol: f64,
    /// Merge tolerance for continuity-set vertices.
    pub vertex_merge_tol: f64,
    /// Brute-force enumeration cap: at most `2^candidate_cap_bits` candidates.
    pub candidate_cap_bits: u32,
    /// Depth-first enumeration with incremental feasibility pruning.
    pub prune: bool,
    /// Box `|z_i| <= box_bound` for the minimization (e^-60 is far below
    /// every tolerance in use).
    pub box_bound: f64,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        ContinuityConfig {
            tau: 1e-9,
            feas_threshold: 1e-12,
            solver_gap: 1e-9,
            feas_tol: 1e-9,
            vertex_merge_tol: 1e-8,
            candidate_cap_bits: 20,
            prune: false,
            box_bound: 60.0,
        }
    }
}

/// One sign per variety: `+1` selects `f < 0` (the inducing type is strictly
/// more likely than the observation), `-1` selects `f > 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(
                "sign entries must be +1 or -1".into(),
            ));
        }
        Ok(SignVector(signs))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }
}

/// A certified nonempty candidate set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuitySet {
    pub omega: SignVector,
    pub t_min: f64,
    pub t_max: f64,
    /// 1-based indices of varieties whose zero set meets the closure.
    pub touching: BTreeSet<usize>,
    /// Continuity-set vertices lying in this set's closure.
    pub vertices: Vec<SimplexPoint>,
    /// An interior point realizing the strict sign pattern.
    pub witness: SimplexPoint,
}

/// A point of the simplex where `k - 1` splitting equalities intersect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetVertex {
    pub point: SimplexPoint,
    /// 1-based indices of the defining varieties (class representatives).
    pub defining: Vec<usize>,
}

/// Full continuity structure of one variety family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityAnalysis {
    pub family: VarietyFamily,
    pub sets: Vec<ContinuitySet>,
    pub vertices: Vec<SetVertex>,
}

/// Result of the constrained minimization of `sum p_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TminResult {
    /// The strict system has no solution.
    Infeasible,
    Feasible(f64),
}

/// Internal certificate carried between enumeration and assembly.
#[derive(Debug, Clone)]
pub struct CertifiedSignVector {
    pub class_signs: Vec<i8>,
    pub omega: SignVector,
    pub t_min: f64,
    pub t_max: f64,
    pub witness: SimplexPoint,
}

/// Halfspace row `a . z <= b` for one class under a sign, shrunk by `margin`.
fn class_row(family: &VarietyFamily, class: usize, sign: i8, margin: f64) -> (Vec<f64>, f64) {
    let c = &family.classes()[class];
    let s = sign as f64;
    let a: Vec<f64> = c.normal.iter().map(|&n| s * n as f64).collect();
    (a, s * c.offset - margin)
}

fn rows_for(family: &VarietyFamily, class_signs: &[i8], margin: f64) -> Vec<(Vec<f64>, f64)> {
    class_signs
        .iter()
        .enumerate()
        .map(|(ci, &s)| class_row(family, ci, s, margin))
        .collect()
}

fn box_rows(k: usize, bound: f64) -> Vec<(Vec<f64>, f64)> {
    let mut rows = Vec::with_capacity(2 * k);
    for i in 0..k {
        let mut up = vec![0.0; k];
        up[i] = 1.0;
        rows.push((up, bound));
        let mut down = vec![0.0; k];
        down[i] = -1.0;
        rows.push((down, bound));
    }
    rows
}

/// Minimize `sum p_i` over the sign pattern's constraint cone (no simplex
/// constraint, no nonnegativity on z). Infeasible when the strict system has
/// no solution.
pub fn tmin(
    family: &VarietyFamily,
    omega: &SignVector,
    cfg: &ContinuityConfig,
) -> Result<TminResult> {
    let class_signs = family.class_signs(omega.signs())?;
    match tmin_class(family, &class_signs, cfg)? {
        Some((t, _)) => Ok(TminResult::Feasible(t)),
        None => Ok(TminResult::Infeasible),
    }
}

fn tmin_class(
    family: &VarietyFamily,
    class_signs: &[i8],
    cfg: &ContinuityConfig,
) -> Result<Option<(f64, Vec<f64>)>> {
    let k = family.k();
    let rows = rows_for(family, class_signs, cfg.tau);
    let mm = lp::max_margin(&rows, k, cfg.box_bound)?;
    if mm.margin < cfg.feas_threshold {
        return Ok(None);
    }
    let mut cons = rows;
    cons.extend(box_rows(k, cfg.box_bound));
    let map: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; k];
            r[i] = 1.0;
            r
        })
        .collect();
    let shift = vec![0.0; k];
    let problem = barrier::SumExpProblem {
        map: &map,
        shift: &shift,
        cons: &cons,
    };
    let (value, _) = barrier::minimize_sum_exp(&problem, &mm.point, cfg.solver_gap)?;
    Ok(Some((value, mm.point)))
}

/// Vertices of the closed z-space polyhedron of the sign pattern intersected
/// with the nonnegative orthant.
pub fn polyhedron_vertices(
    family: &VarietyFamily,
    omega: &SignVector,
    cfg: &ContinuityConfig,
) -> Result<Vec<Vec<f64>>> {
    let class_signs = family.class_signs(omega.signs())?;
    Ok(polyhedron_vertices_class(family, &class_signs, cfg))
}

fn polyhedron_vertices_class(
    family: &VarietyFamily,
    class_signs: &[i8],
    cfg: &ContinuityConfig,
) -> Vec<Vec<f64>> {
    let k = family.k();
    let mut rows = rows_for(family, class_signs, 0.0);
    for i in 0..k {
        let mut r = vec![0.0; k];
        r[i] = -1.0;
        rows.push((r, 0.0));
    }
    vertices::polytope_vertices(&rows, k, cfg.feas_tol, POLY_DEDUP_TOL)
}

/// Maximum of `sum exp(-z_i)` over a vertex list.
pub fn tmax(zvertices: &[Vec<f64>]) -> Result<f64> {
    if zvertices.is_empty() {
        return Err(Error::EmptyVertexList);
    }
    Ok(zvertices
        .iter()
        .map(|z| z.iter().map(|&zi| (-zi).exp()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

fn certify(
    family: &VarietyFamily,
    class_signs: &[i8],
    cfg: &ContinuityConfig,
) -> Result<Option<CertifiedSignVector>> {
    let Some((t_min, z_point)) = tmin_class(family, class_signs, cfg)? else {
        return Ok(None);
    };
    if t_min > 1.0 + 1e-9 {
        return Ok(None);
    }
    let verts = polyhedron_vertices_class(family, class_signs, cfg);
    if verts.is_empty() {
        return Ok(None);
    }
    let t_max = tmax(&verts)?;
    if t_max < 1.0 - 1e-9 {
        return Ok(None);
    }
    // The max-margin point realizes the strict pattern; rescaling onto the
    // simplex preserves every sign because the constraints are cones.
    let raw: Vec<f64> = z_point.iter().map(|&z| (-z).exp()).collect();
    let witness = SimplexPoint::normalized(raw)?;
    Ok(Some(CertifiedSignVector {
        class_signs: class_signs.to_vec(),
        omega: SignVector(family.expand_signs(class_signs)),
        t_min,
        t_max,
        witness,
    }))
}

/// All realized sign vectors with their certificates, sorted by sign vector.
pub fn enumerate_certified(
    family: &VarietyFamily,
    cfg: &ContinuityConfig,
) -> Result<Vec<CertifiedSignVector>> {
    let d = family.classes().len();
    let mut found = if d == 0 {
        // No varieties: the single empty sign pattern covers the simplex.
        vec![CertifiedSignVector {
            class_signs: vec![],
            omega: SignVector(vec![]),
            t_min: 0.0,
            t_max: f64::INFINITY,
            witness: SimplexPoint::uniform(family.k()),
        }]
    } else if cfg.prune {
        if d > 64 {
            return Err(Error::CapExceeded(format!(
                "{d} deduplicated varieties exceed the pruned enumeration limit"
            )));
        }
        let mut out = Vec::new();
        let mut signs = vec![0i8; d];
        dfs_enumerate(family, cfg, &mut signs, 0, &mut out)?;
        out
    } else {
        if d as u32 > cfg.candidate_cap_bits {
            return Err(Error::CapExceeded(format!(
                "2^{d} candidates exceed the 2^{} cap; enable pruning",
                cfg.candidate_cap_bits
            )));
        }
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << d) {
            let signs: Vec<i8> = (0..d)
                .map(|j| if mask >> j & 1 == 1 { 1 } else { -1 })
                .collect();
            if let Some(c) = certify(family, &signs, cfg)? {
                out.push(c);
            }
        }
        out
    };
    found.sort_by(|a, b| a.omega.cmp(&b.omega));
    Ok(found)
}

fn dfs_enumerate(
    family: &VarietyFamily,
    cfg: &ContinuityConfig,
    signs: &mut Vec<i8>,
    depth: usize,
    out: &mut Vec<CertifiedSignVector>,
) -> Result<()> {
    let d = family.classes().len();
    if depth == d {
        if let Some(c) = certify(family, signs, cfg)? {
            out.push(c);
        }
        return Ok(());
    }
    for sign in [1i8, -1] {
        signs[depth] = sign;
        let rows: Vec<(Vec<f64>, f64)> = (0..=depth)
            .map(|ci| class_row(family, ci, signs[ci], cfg.tau))
            .collect();
        let mm = lp::max_margin(&rows, family.k(), cfg.box_bound)?;
        if mm.margin >= cfg.feas_threshold {
            dfs_enumerate(family, cfg, signs, depth + 1, out)?;
        }
    }
    signs[depth] = 0;
    Ok(())
}

/// Orthonormal basis of the plane orthogonal to `n` in R^3.
fn orthobasis3(n: &[f64]) -> [Vec<f64>; 2] {
    let pick = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [1.0, 0.0, 0.0]
    } else if n[1].abs() <= n[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let a = cross(n, &pick);
    let na = linalg::norm2(&a);
    let a: Vec<f64> = a.iter().map(|v| v / na).collect();
    let b = cross(n, &a);
    let nb = linalg::norm2(&b);
    [a, b.iter().map(|v| v / nb).collect()]
}

fn cross(a: &[f64], b: &[f64]) -> Vec<f64> {
    vec![
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Continuity-set vertices: for every pair of deduplicated varieties,
/// intersect the two z-space hyperplanes (a line) with the z-image of the
/// simplex. The line meets that surface at most twice since
/// `sum exp(-z_i)` is strictly convex along any line.
pub fn find_vertices_family(
    family: &VarietyFamily,
    cfg: &ContinuityConfig,
) -> Result<Vec<SetVertex>> {
    if family.k() != 3 {
        return Err(Error::InvalidParameter(
            "vertex enumeration is implemented for k = 3".into(),
        ));
    }
    let classes = family.classes();
    let mut out: Vec<SetVertex> = Vec::new();
    for i in 0..classes.len() {
        for j in i + 1..classes.len() {
            let n1 = classes[i].normal_f64();
            let n2 = classes[j].normal_f64();
            let dir = cross(&n1, &n2);
            let ndir = linalg::norm2(&dir);
            if ndir < 1e-9 {
                continue; // parallel hyperplanes: rank-deficient pair
            }
            let dir: Vec<f64> = dir.iter().map(|v| v / ndir).collect();
            // Min-norm particular solution of the 2x3 system.
            let gram = vec![
                vec![linalg::dot(&n1, &n1), linalg::dot(&n1, &n2)],
                vec![linalg::dot(&n1, &n2), linalg::dot(&n2, &n2)],
            ];
            let Some(w) = linalg::solve(&gram, &[classes[i].offset, classes[j].offset]) else {
                continue;
            };
            let z0: Vec<f64> = (0..3).map(|c| w[0] * n1[c] + w[1] * n2[c]).collect();

            // Parameter window keeping z(t) >= 0 (clamped when unbounded).
            let mut t_lo = -1e6_f64;
            let mut t_hi = 1e6_f64;
            let mut empty = false;
            for c in 0..3 {
                if dir[c].abs() < 1e-14 {
                    if z0[c] < -1e-12 {
                        empty = true;
                        break;
                    }
                } else {
                    let bound = -z0[c] / dir[c];
                    if dir[c] > 0.0 {
                        t_lo = t_lo.max(bound);
                    } else {
                        t_hi = t_hi.min(bound);
                    }
                }
            }
            if empty || t_lo > t_hi {
                continue;
            }
            let g = |t: f64| -> f64 {
                (0..3).map(|c| (-(z0[c] + t * dir[c])).exp()).sum::<f64>() - 1.0
            };
            let (t_star, g_star) = roots::golden_min(g, t_lo, t_hi, 1e-11 * (t_hi - t_lo));
            let mut ts: Vec<f64> = Vec::new();
            if g_star < -1e-12 {
                if g(t_lo) > 0.0 {
                    ts.push(roots::bisect(g, t_lo, t_star, 1e-13));
                }
                if g(t_hi) > 0.0 {
                    ts.push(roots::bisect(g, t_star, t_hi, 1e-13));
                }
            } else if g_star.abs() <= 1e-12 {
                ts.push(t_star);
            }
            for t in ts {
                let raw: Vec<f64> = (0..3).map(|c| (-(z0[c] + t * dir[c])).exp()).collect();
                let Ok(point) = SimplexPoint::normalized(raw) else {
                    continue;
                };
                if !point.is_interior() {
                    continue;
                }
                if out
                    .iter()
                    .any(|v| v.point.dist(&point) <= cfg.vertex_merge_tol)
                {
                    continue;
                }
                out.push(SetVertex {
                    point,
                    defining: vec![classes[i].members[0], classes[j].members[0]],
                });
            }
        }
    }
    Ok(out)
}

/// Vertices for one observation's family.
pub fn find_vertices(
    phat: &EmpiricalDistribution,
    cfg: &ContinuityConfig,
) -> Result<Vec<SetVertex>> {
    let family = VarietyFamily::for_observation(phat)?;
    find_vertices_family(&family, cfg)
}

/// Whether a vertex lies in the closure of the sign pattern: all non-defining
/// varieties must satisfy their signed inequality within tolerance.
fn vertex_in_closure(
    family: &VarietyFamily,
    omega: &[i8],
    vertex: &SetVertex,
    defining_classes: &[usize],
) -> bool {
    for v in family.varieties() {
        let ci = family.class_of(v.index);
        if defining_classes.contains(&ci) {
            continue;
        }
        match v.eval_f(&vertex.point) {
            Ok(f) => {
                if omega[v.index - 1] as f64 * f > 1e-8 {
                    return false;
                }
            }
            Err(_) => return false,
        }
    }
    true
}

fn defining_classes(family: &VarietyFamily, vertex: &SetVertex) -> Vec<usize> {
    vertex
        .defining
        .iter()
        .map(|&l| family.class_of(l))
        .collect()
}

/// Touching test for one class against a certified sign pattern, given the
/// defining classes of the vertices already assigned to the set.
fn class_touches(
    family: &VarietyFamily,
    class_signs: &[i8],
    class: usize,
    assigned_vertex_classes: &[Vec<usize>],
    cfg: &ContinuityConfig,
) -> Result<bool> {
    // (a) A set vertex defined by this class certifies contact.
    if assigned_vertex_classes.iter().any(|d| d.contains(&class)) {
        return Ok(true);
    }
    // (b) Restrict to the class's hyperplane and check that the remaining
    // closed constraints admit points whose `sum p_i` range straddles 1.
    let k = family.k();
    let n = family.classes()[class].normal_f64();
    let nn = linalg::dot(&n, &n);
    let z0: Vec<f64> = n
        .iter()
        .map(|&ni| ni * family.classes()[class].offset / nn)
        .collect();
    let basis = orthobasis3(&n);
    let to_u = |a: &[f64], b: f64| -> (Vec<f64>, f64) {
        (
            vec![linalg::dot(a, &basis[0]), linalg::dot(a, &basis[1])],
            b - linalg::dot(a, &z0),
        )
    };
    let mut rows_u: Vec<(Vec<f64>, f64)> = Vec::new();
    for (ci, &s) in class_signs.iter().enumerate() {
        if ci == class {
            continue;
        }
        let (a, b) = class_row(family, ci, s, 0.0);
        rows_u.push(to_u(&a, b));
    }
    let mm = lp::max_margin(&rows_u, 2, 1e4)?;
    if mm.margin < 1e-9 {
        return Ok(false);
    }
    // Minimum of sum p_i over the slab (z free).
    let map: Vec<Vec<f64>> = (0..k).map(|c| vec![basis[0][c], basis[1][c]]).collect();
    let mut cons = rows_u.clone();
    cons.extend(box_rows(2, 1e4));
    let problem = barrier::SumExpProblem {
        map: &map,
        shift: &z0,
        cons: &cons,
    };
    let (t_min_eq, _) = barrier::minimize_sum_exp(&problem, &mm.point, cfg.solver_gap)?;
    if t_min_eq > 1.0 + 1e-9 {
        return Ok(false);
    }
    // Maximum over the slab within the nonnegative orthant, at its vertices.
    let mut rows_max = rows_u;
    for c in 0..k {
        let a = vec![-basis[0][c], -basis[1][c]];
        rows_max.push((a, z0[c]));
    }
    let verts = vertices::polytope_vertices(&rows_max, 2, cfg.feas_tol, POLY_DEDUP_TOL);
    if verts.is_empty() {
        return Ok(false);
    }
    let t_max_eq = verts
        .iter()
        .map(|u| {
            (0..k)
                .map(|c| (-(z0[c] + u[0] * basis[0][c] + u[1] * basis[1][c])).exp())
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(t_max_eq >= 1.0 - 1e-9)
}

/// Assemble the full analysis: certified sign patterns, global vertices,
/// per-set vertex assignment, and touching varieties.
pub fn analyze_family(
    family: &VarietyFamily,
    cfg: &ContinuityConfig,
) -> Result<ContinuityAnalysis> {
    let certified = enumerate_certified(family, cfg)?;
    let vertices = if family.k() == 3 && !family.is_empty() {
        find_vertices_family(family, cfg)?
    } else {
        Vec::new()
    };
    let vertex_classes: Vec<Vec<usize>> = vertices
        .iter()
        .map(|v| defining_classes(family, v))
        .collect();

    let mut sets = Vec::with_capacity(certified.len());
    for c in certified {
        let mut assigned = Vec::new();
        let mut assigned_classes = Vec::new();
        for (v, dc) in vertices.iter().zip(&vertex_classes) {
            if vertex_in_closure(family, c.omega.signs(), v, dc) {
                assigned.push(v.point.clone());
                assigned_classes.push(dc.clone());
            }
        }
        let mut touching = BTreeSet::new();
        for class in 0..family.classes().len() {
            if class_touches(family, &c.class_signs, class, &assigned_classes, cfg)? {
                touching.extend(family.classes()[class].members.iter().copied());
            }
        }
        sets.push(ContinuitySet {
            omega: c.omega,
            t_min: c.t_min,
            t_max: c.t_max,
            touching,
            vertices: assigned,
            witness: c.witness,
        });
    }
    Ok(ContinuityAnalysis {
        family: family.clone(),
        sets,
        vertices,
    })
}

/// Full analysis for one observation.
pub fn analyze(phat: &EmpiricalDistribution, cfg: &ContinuityConfig) -> Result<ContinuityAnalysis> {
    let family = VarietyFamily::for_observation(phat)?;
    analyze_family(&family, cfg)
}

/// The continuity sets of one observation (certified sign patterns with
/// vertices and touching varieties), in lexicographic sign order.
pub fn find_continuity_sets(
    phat: &EmpiricalDistribution,
    cfg: &ContinuityConfig,
) -> Result<Vec<ContinuitySet>> {
    Ok(analyze(phat, cfg)?.sets)
}

/// Touching varieties of one certified set.
pub fn touching_varieties(
    set: &ContinuitySet,
    phat: &EmpiricalDistribution,
    cfg: &ContinuityConfig,
) -> Result<BTreeSet<usize>> {
    let family = VarietyFamily::for_observation(phat)?;
    let class_signs = family.class_signs(set.omega.signs())?;
    let vertices = find_vertices_family(&family, cfg)?;
    let assigned_classes: Vec<Vec<usize>> = vertices
        .iter()
        .filter(|v| vertex_in_closure(&family, set.omega.signs(), v, &defining_classes(&family, v)))
        .map(|v| defining_classes(&family, v))
        .collect();
    let mut out = BTreeSet::new();
    for class in 0..family.classes().len() {
        if class_touches(&family, &class_signs, class, &assigned_classes, cfg)? {
            out.extend(family.classes()[class].members.iter().copied());
        }
    }
    Ok(out)
}

/// Grid-estimated count of connected regions of one continuity set under
/// 6-neighbor barycentric adjacency. A topology estimate, not a proof.
pub fn count_regions(
    set: &ContinuitySet,
    family: &VarietyFamily,
    resolution: u64,
) -> Result<usize> {
    if family.k() != 3 {
        return Err(Error::InvalidParameter(
            "region counting is implemented for k = 3".into(),
        ));
    }
    Ok(region_components(set, family, resolution).len())
}

/// Connected components of a set's interior grid points; each component is a
/// list of `(i, j)` with the third coordinate implied.
pub fn region_components(
    set: &ContinuitySet,
    family: &VarietyFamily,
    resolution: u64,
) -> Vec<Vec<(u64, u64)>> {
    let r = resolution;
    let class_signs = family
        .class_signs(set.omega.signs())
        .expect("certified sets carry consistent signs");
    let mut members: Vec<(u64, u64)> = Vec::new();
    for i in 1..r {
        for j in 1..(r - i) {
            let p = [
                i as f64 / r as f64,
                j as f64 / r as f64,
                (r - i - j) as f64 / r as f64,
            ];
            let z: Vec<f64> = p.iter().map(|&v| -v.ln()).collect();
            let slacks = family.class_slacks(&z);
            // Points within 1e-8 of a variety are boundary, left unassigned.
            if slacks.iter().any(|&t| t.abs() <= 1e-8) {
                continue;
            }
            if slacks
                .iter()
                .zip(&class_signs)
                .all(|(&t, &s)| (t < 0.0) == (s == 1))
            {
                members.push((i, j));
            }
        }
    }
    let index: std::collections::HashMap<(u64, u64), usize> = members
        .iter()
        .enumerate()
        .map(|(idx, &ij)| (ij, idx))
        .collect();
    let mut seen = vec![false; members.len()];
    let mut components = Vec::new();
    for start in 0..members.len() {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut comp = Vec::new();
        while let Some(cur) = stack.pop() {
            let (i, j) = members[cur];
            comp.push((i, j));
            let neighbors = [
                (i + 1, j),
                (i.wrapping_sub(1), j),
                (i, j + 1),
                (i, j.wrapping_sub(1)),
                (i + 1, j.wrapping_sub(1)),
                (i.wrapping_sub(1), j + 1),
            ];
            for nb in neighbors {
                if let Some(&idx) = index.get(&nb) {
                    if !seen[idx] {
                        seen[idx] = true;
                        stack.push(idx);
                    }
                }
            }
        }
        components.push(comp);
    }
    components
}

/// Grid-estimated total and zero-vertex region counts across all sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCensus {
    pub total: usize,
    pub zero_vertex: usize,
}

pub fn region_census(analysis: &ContinuityAnalysis, resolution: u64) -> RegionCensus {
    let r = resolution;
    let family = &analysis.family;
    let mut total = 0usize;
    let mut zero_vertex = 0usize;
    // A component owns a vertex when some member lies within ten grid cells:
    // a region pinching to a vertex at a narrow angle has no grid points
    // near the tip, so a one-cell radius would misclassify it.
    let near = 10.0 / r as f64;
    let slack_signs = |i: u64, j: u64| -> Vec<i8> {
        let p = [
            i as f64 / r as f64,
            j as f64 / r as f64,
            (r - i - j) as f64 / r as f64,
        ];
        let z: Vec<f64> = p.iter().map(|&v| -v.ln()).collect();
        family
            .class_slacks(&z)
            .iter()
            .map(|&t| if t < 0.0 { 1 } else { -1 })
            .collect()
    };
    for set in &analysis.sets {
        let class_signs = family
            .class_signs(set.omega.signs())
            .expect("certified sets carry consistent signs");
        for comp in region_components(set, family, r) {
            total += 1;
            // Classes whose variety passes along the component's border:
            // neighbor cells whose sign flipped. A region touching two or
            // more varieties has a vertex even when grid fragments sit far
            // from it, so only 0- and 1-touch components can be zero-vertex.
            let mut touched: BTreeSet<usize> = BTreeSet::new();
            for &(i, j) in &comp {
                let neighbors = [
                    (i + 1, j),
                    (i.wrapping_sub(1), j),
                    (i, j + 1),
                    (i, j.wrapping_sub(1)),
                    (i + 1, j.wrapping_sub(1)),
                    (i.wrapping_sub(1), j + 1),
                ];
                for (ni, nj) in neighbors {
                    // Skip the simplex boundary and off-grid cells.
                    if ni == 0 || nj == 0 || ni.saturating_add(nj) >= r {
                        continue;
                    }
                    for (ci, s) in slack_signs(ni, nj).into_iter().enumerate() {
                        if s != class_signs[ci] {
                            touched.insert(ci);
                        }
                    }
                }
            }
            let vertex_near = analysis.vertices.iter().any(|v| {
                comp.iter().any(|&(i, j)| {
                    let p = [
                        i as f64 / r as f64,
                        j as f64 / r as f64,
                        (r - i - j) as f64 / r as f64,
                    ];
                    linalg::dist2(&p, v.point.coords()) <= near
                })
            });
            if touched.len() <= 1 && !vertex_near {
                zero_vertex += 1;
            }
        }
    }
    RegionCensus { total, zero_vertex }
}
