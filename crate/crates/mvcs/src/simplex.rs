//! The discrete and continuous probability simplex: type enumeration,
//! multinomial probability mass, the exact p-value, confidence-set
//! membership, and coverage probability.
//!
//! The canonical ordering of the discrete simplex is lexicographic descending
//! on count vectors. Every downstream index (the variety index `ell`, sign
//! vectors, cover grids) refers to this order, so it must never change.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::factorial::LnFactorials;

/// Default cap on the number of discrete types an enumeration may produce.
pub const DEFAULT_TYPE_CAP: u64 = 1_000_000;

/// Tolerance on `|sum - 1|` when validating a probability vector.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// A point of the discrete simplex: integer counts over `k` categories
/// summing to the sample size `n`. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    k: usize,
    n: u64,
    counts: Vec<u64>,
}

impl EmpiricalDistribution {
    /// Build from counts; the sample size is their sum.
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidCounts("empty count vector".into()));
        }
        let n = counts.iter().try_fold(0u64, |a, &c| a.checked_add(c));
        let Some(n) = n else {
            return Err(Error::InvalidCounts("count sum overflows".into()));
        };
        Ok(EmpiricalDistribution {
            k: counts.len(),
            n,
            counts,
        })
    }

    /// Build from counts, validating the stated sample size.
    pub fn with_sample_size(counts: Vec<u64>, n: u64) -> Result<Self> {
        let ed = Self::new(counts)?;
        if ed.n != n {
            return Err(Error::InvalidCounts(format!(
                "counts sum to {}, expected n = {}",
                ed.n, n
            )));
        }
        Ok(ed)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// The relative proportions `counts_i / n`.
    pub fn proportions(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

/// A point of the continuous simplex: `k` nonnegative reals summing to one.
/// Serializes as a plain array of probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Validates nonnegativity and `|sum - 1| <= 1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::NotOnSimplex("empty probability vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(Error::NotOnSimplex(format!(
                    "coordinate {i} = {p} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::NotOnSimplex(format!("coordinates sum to {sum}")));
        }
        Ok(SimplexPoint { probs })
    }

    /// Rescale a vector of positive mass onto the simplex. Used for solver
    /// outputs whose sum carries a little numerical drift.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        let sum: f64 = raw.iter().sum();
        if sum.is_nan() || sum <= 0.0 || raw.iter().any(|&v| v < 0.0 || v.is_nan()) {
            return Err(Error::NotOnSimplex(
                "cannot normalize: nonpositive mass".into(),
            ));
        }
        Ok(SimplexPoint {
            probs: raw.into_iter().map(|v| v / sum).collect(),
        })
    }

    pub fn uniform(k: usize) -> Self {
        SimplexPoint {
            probs: vec![1.0 / k as f64; k],
        }
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.probs
    }

    /// True when every coordinate is strictly positive.
    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|&p| p > 0.0)
    }

    pub fn dist(&self, other: &SimplexPoint) -> f64 {
        crate::numeric::linalg::dist2(&self.probs, &other.probs)
    }
}

/// Result of an exact p-value evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueResult {
    /// The partial sum of type probabilities at most as likely as the anchor.
    pub value: f64,
    /// Number of types in the partial sum.
    pub included_terms: usize,
    /// Probability of the observed type itself under `p`.
    pub anchor_probability: f64,
    /// Set when some other type's probability equals the anchor exactly:
    /// the query point sits on a discontinuity variety.
    pub tie_on_boundary: bool,
}

/// `|Delta_{k,n}| = C(n + k - 1, k - 1)`, or `None` on overflow.
pub fn simplex_size(k: usize, n: u64) -> Option<u64> {
    let mut acc: u128 = 1;
    let k = k as u128;
    let n = n as u128;
    for i in 1..k {
        acc = acc.checked_mul(n + i)?;
        acc /= i;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// All types of the discrete simplex in lexicographic descending order of
/// their count vectors. This order defines the canonical index used by every
/// downstream structure.
pub fn enumerate_types(k: usize, n: u64) -> Result<Vec<EmpiricalDistribution>> {
    enumerate_types_with_cap(k, n, DEFAULT_TYPE_CAP)
}

pub fn enumerate_types_with_cap(k: usize, n: u64, cap: u64) -> Result<Vec<EmpiricalDistribution>> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let m = simplex_size(k, n)
        .ok_or_else(|| Error::CapExceeded(format!("|Delta_{{{k},{n}}}| overflows")))?;
    if m > cap {
        return Err(Error::CapExceeded(format!(
            "|Delta_{{{k},{n}}}| = {m} exceeds cap {cap}"
        )));
    }
    let mut out = Vec::with_capacity(m as usize);
    let mut prefix = Vec::with_capacity(k);
    fill_types(k, n, &mut prefix, &mut out);
    debug_assert_eq!(out.len() as u64, m);
    Ok(out)
}

fn fill_types(slots: usize, rem: u64, prefix: &mut Vec<u64>, out: &mut Vec<EmpiricalDistribution>) {
    if slots == 1 {
        prefix.push(rem);
        out.push(EmpiricalDistribution {
            k: prefix.len(),
            n: prefix.iter().sum(),
            counts: prefix.clone(),
        });
        prefix.pop();
        return;
    }
    for c in (0..=rem).rev() {
        prefix.push(c);
        fill_types(slots - 1, rem - c, prefix, out);
        prefix.pop();
    }
}

/// Multinomial probability of observing the counts of `qhat` under `p`,
/// computed in the log domain. Zero-probability coordinates follow the
/// `0^0 = 1` convention.
pub fn multinomial_pmf(p: &SimplexPoint, qhat: &EmpiricalDistribution) -> Result<f64> {
    if p.k() != qhat.k() {
        return Err(Error::DimensionMismatch {
            expected: qhat.k(),
            got: p.k(),
        });
    }
    let table = LnFactorials::up_to(qhat.n());
    let ln_coeff = table.ln_multinomial(qhat.n(), qhat.counts());
    Ok(pmf_from_parts(ln_coeff, qhat.counts(), p.coords()))
}

#[inline]
fn pmf_from_parts(ln_coeff: f64, counts: &[u64], p: &[f64]) -> f64 {
    let mut acc = ln_coeff;
    for (&c, &pi) in counts.iter().zip(p) {
        if c > 0 {
            if pi <= 0.0 {
                return 0.0;
            }
            acc += c as f64 * pi.ln();
        }
    }
    acc.exp()
}

/// Precomputed machinery for repeated p-value evaluations of one observation.
#[derive(Debug, Clone)]
pub struct PValueEvaluator {
    k: usize,
    types: Vec<EmpiricalDistribution>,
    ln_coeff: Vec<f64>,
    anchor_idx: usize,
}

impl PValueEvaluator {
    pub fn new(phat: &EmpiricalDistribution) -> Result<Self> {
        let types = enumerate_types(phat.k(), phat.n())?;
        let table = LnFactorials::up_to(phat.n());
        let ln_coeff: Vec<f64> = types
            .iter()
            .map(|t| table.ln_multinomial(t.n(), t.counts()))
            .collect();
        let anchor_idx = types
            .iter()
            .position(|t| t == phat)
            .expect("observation is a member of its own discrete simplex");
        Ok(PValueEvaluator {
            k: phat.k(),
            types,
            ln_coeff,
            anchor_idx,
        })
    }

    pub fn types(&self) -> &[EmpiricalDistribution] {
        &self.types
    }

    /// Exact p-value at `p`: the sum of probabilities of all types at most
    /// as likely as the observed one. The comparison is a plain floating
    /// `<=` with no tolerance; exact ties are reported via the boundary flag.
    pub fn eval(&self, p: &SimplexPoint) -> PValueResult {
        self.eval_with_tie_band(p, 0.0)
    }

    /// Like [`eval`](Self::eval), but counts a term as tied when its
    /// probability is within the relative band of the anchor. Used at
    /// numerically computed tie points (arrangement vertices), whose exact
    /// coordinates make several terms equal the anchor but whose floating
    /// approximations perturb them by a few ulps.
    pub fn eval_with_tie_band(&self, p: &SimplexPoint, rel_band: f64) -> PValueResult {
        assert_eq!(p.k(), self.k, "category count mismatch");
        let coords = p.coords();
        let anchor = pmf_from_parts(
            self.ln_coeff[self.anchor_idx],
            self.types[self.anchor_idx].counts(),
            coords,
        );
        let cutoff = anchor * (1.0 + rel_band);
        let mut value = 0.0;
        let mut included = 0usize;
        let mut tie = false;
        for (i, t) in self.types.iter().enumerate() {
            let prob = pmf_from_parts(self.ln_coeff[i], t.counts(), coords);
            if prob <= cutoff {
                value += prob;
                included += 1;
                if i != self.anchor_idx && prob == anchor && anchor > 0.0 {
                    tie = true;
                }
            }
        }
        PValueResult {
            value,
            included_terms: included,
            anchor_probability: anchor,
            tie_on_boundary: tie,
        }
    }
}

/// Exact p-value of the observation `phat` at the parameter `p`.
pub fn pvalue(phat: &EmpiricalDistribution, p: &SimplexPoint) -> Result<PValueResult> {
    if p.k() != phat.k() {
        return Err(Error::DimensionMismatch {
            expected: phat.k(),
            got: p.k(),
        });
    }
    Ok(PValueEvaluator::new(phat)?.eval(p))
}

/// Membership of `p` in the minimum-volume confidence set of `phat` at
/// confidence level `1 - alpha`: the alpha-superlevel set of the p-value.
pub fn mvcs_member(phat: &EmpiricalDistribution, p: &SimplexPoint, alpha: f64) -> Result<bool> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    Ok(pvalue(phat, p)?.value >= alpha)
}

/// Probability under `p` that the confidence set of a random observation
/// covers `p`. The confidence property demands this be at least `1 - alpha`
/// for every `p`.
pub fn coverage_probability(p: &SimplexPoint, alpha: f64, k: usize, n: u64) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    if p.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: p.k(),
        });
    }
    let types = enumerate_types(k, n)?;
    let table = LnFactorials::up_to(n);
    let ln_coeff: Vec<f64> = types
        .iter()
        .map(|t| table.ln_multinomial(t.n(), t.counts()))
        .collect();
    let coords = p.coords();
    let probs: Vec<f64> = types
        .iter()
        .zip(&ln_coeff)
        .map(|(t, &lc)| pmf_from_parts(lc, t.counts(), coords))
        .collect();
    // For each candidate observation, its p-value at p is the partial sum of
    // probabilities no larger than its own; summed in enumeration order to
    // match `pvalue` exactly.
    let mut coverage = 0.0;
    for (i, &anchor) in probs.iter().enumerate() {
        let rho: f64 = probs.iter().filter(|&&q| q <= anchor).sum();
        if rho >= alpha {
            coverage += probs[i];
        }
    }
    Ok(coverage)
}
