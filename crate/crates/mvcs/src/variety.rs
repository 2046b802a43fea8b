//! Discontinuity varieties of the exact p-value.
//!
//! For a fixed observation, the p-value jumps only where some other type
//! becomes exactly as likely: `1 - c0 * prod_i p_i^{c_i} = 0` with
//! `c_i = n (phat_i - qhat_i)` and `c0` a ratio of factorials kept in the
//! log domain. Under `z_i = -log p_i` each variety is the hyperplane
//! `z . c = log c0`, with the sign convention
//! `f(p) < 0  <=>  z . c < log c0` (the other type is strictly more likely
//! than the observation is unlikely, i.e. its term enters the partial sum).
//!
//! Because both count vectors sum to `n`, every exponent vector sums to
//! zero; the varieties are scale-invariant cones in the positive orthant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::factorial::LnFactorials;
use crate::numeric::linalg;
use crate::simplex::{enumerate_types, EmpiricalDistribution, SimplexPoint};

/// One discontinuity variety `f(p) = 1 - c0 * prod p_i^{c_i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingVariety {
    /// 1-based index into the canonical enumeration of types with the
    /// observation removed.
    pub index: usize,
    /// The type inducing this variety.
    pub qhat: EmpiricalDistribution,
    /// Integer exponents; always sum to zero and are never all zero.
    pub exponents: Vec<i64>,
    /// `log c0`, the log-ratio of count factorials.
    pub log_c0: f64,
}

impl SplittingVariety {
    /// Evaluate `f(p) = 1 - exp(log_c0 + sum c_i log p_i)` at an interior
    /// point.
    pub fn eval_f(&self, p: &SimplexPoint) -> Result<f64> {
        if p.k() != self.exponents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.exponents.len(),
                got: p.k(),
            });
        }
        if let Some(i) = p.coords().iter().position(|&v| v <= 0.0) {
            return Err(Error::BoundaryPoint { index: i });
        }
        let mut t = self.log_c0;
        for (&c, &pi) in self.exponents.iter().zip(p.coords()) {
            if c != 0 {
                t += c as f64 * pi.ln();
            }
        }
        Ok(1.0 - t.exp())
    }

    /// The z-space halfspace description: `f(p) < 0 <=> z . normal < offset`
    /// and `f(p) > 0 <=> z . normal > offset` for `z_i = -log p_i`.
    pub fn halfspace(&self) -> Halfspace {
        Halfspace {
            normal: self.exponents.iter().map(|&c| c as f64).collect(),
            offset: self.log_c0,
        }
    }
}

/// A hyperplane `z . normal = offset` in z-space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    /// Signed slack `z . normal - offset`; its sign equals the sign of `f`.
    pub fn slack(&self, z: &[f64]) -> f64 {
        linalg::dot(&self.normal, z) - self.offset
    }
}

/// `z_i = -log p_i` for an interior point.
pub fn z_transform(p: &SimplexPoint) -> Result<Vec<f64>> {
    if let Some(i) = p.coords().iter().position(|&v| v <= 0.0) {
        return Err(Error::BoundaryPoint { index: i });
    }
    Ok(p.coords().iter().map(|&v| -v.ln()).collect())
}

/// Inverse of [`z_transform`]; rejects `z` whose image is off the simplex.
pub fn z_inverse(z: &[f64]) -> Result<SimplexPoint> {
    let p: Vec<f64> = z.iter().map(|&v| (-v).exp()).collect();
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::NotOnSimplex(format!("exp(-z) sums to {sum}, not 1")));
    }
    SimplexPoint::normalized(p)
}

/// A group of varieties whose z-space hyperplanes coincide. Distinct types
/// can induce proportional exponent vectors with matching offsets; one
/// representative halfspace stands for all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupClass {
    /// Primitive integer normal (divided by the gcd, first nonzero positive).
    pub normal: Vec<i64>,
    /// Offset matching the primitive normal.
    pub offset: f64,
    /// 1-based indices of the member varieties.
    pub members: Vec<usize>,
}

impl DedupClass {
    pub fn normal_f64(&self) -> Vec<f64> {
        self.normal.iter().map(|&c| c as f64).collect()
    }
}

/// The full variety family of one observation (or of the union of two), with
/// the deduplicated halfspace view used by the continuity machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarietyFamily {
    k: usize,
    varieties: Vec<SplittingVariety>,
    classes: Vec<DedupClass>,
    /// Variety index (0-based) -> class index.
    class_of: Vec<usize>,
    /// +1 when the variety's exponents are a positive multiple of its class
    /// normal, -1 when a negative multiple.
    orientation: Vec<i8>,
}

impl VarietyFamily {
    /// One variety per type distinct from the observation, in canonical
    /// order.
    pub fn for_observation(phat: &EmpiricalDistribution) -> Result<Self> {
        let varieties = build_varieties(phat)?;
        Ok(Self::from_varieties(phat.k(), varieties))
    }

    /// The union of two families (same category count), reindexed so the
    /// second family's indices continue after the first.
    pub fn joint(a: &VarietyFamily, b: &VarietyFamily) -> Result<Self> {
        if a.k != b.k {
            return Err(Error::DimensionMismatch {
                expected: a.k,
                got: b.k,
            });
        }
        let mut varieties = a.varieties.clone();
        let base = varieties.len();
        for v in &b.varieties {
            let mut v = v.clone();
            v.index += base;
            varieties.push(v);
        }
        Ok(Self::from_varieties(a.k, varieties))
    }

    fn from_varieties(k: usize, varieties: Vec<SplittingVariety>) -> Self {
        let mut classes: Vec<DedupClass> = Vec::new();
        let mut class_of = Vec::with_capacity(varieties.len());
        let mut orientation = Vec::with_capacity(varieties.len());
        for v in &varieties {
            let (normal, offset, orient) = primitive_form(&v.exponents, v.log_c0);
            let found = classes
                .iter()
                .position(|c| c.normal == normal && (c.offset - offset).abs() <= 1e-9);
            let ci = match found {
                Some(ci) => ci,
                None => {
                    classes.push(DedupClass {
                        normal,
                        offset,
                        members: Vec::new(),
                    });
                    classes.len() - 1
                }
            };
            classes[ci].members.push(v.index);
            class_of.push(ci);
            orientation.push(orient);
        }
        VarietyFamily {
            k,
            varieties,
            classes,
            class_of,
            orientation,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// All varieties, indexed by `ell - 1`.
    pub fn varieties(&self) -> &[SplittingVariety] {
        &self.varieties
    }

    pub fn len(&self) -> usize {
        self.varieties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.varieties.is_empty()
    }

    pub fn classes(&self) -> &[DedupClass] {
        &self.classes
    }

    /// Class index of the 1-based variety index.
    pub fn class_of(&self, ell: usize) -> usize {
        self.class_of[ell - 1]
    }

    /// Orientation of the 1-based variety index within its class.
    pub fn orientation_of(&self, ell: usize) -> i8 {
        self.orientation[ell - 1]
    }

    /// Signed class slacks `z . normal - offset` at a z-space point.
    pub fn class_slacks(&self, z: &[f64]) -> Vec<f64> {
        self.classes
            .iter()
            .map(|c| {
                let mut s = -c.offset;
                for (i, &ni) in c.normal.iter().enumerate() {
                    if ni != 0 {
                        s += ni as f64 * z[i];
                    }
                }
                s
            })
            .collect()
    }

    /// Expand per-class signs to the full per-variety sign vector.
    pub fn expand_signs(&self, class_signs: &[i8]) -> Vec<i8> {
        debug_assert_eq!(class_signs.len(), self.classes.len());
        (0..self.varieties.len())
            .map(|i| class_signs[self.class_of[i]] * self.orientation[i])
            .collect()
    }

    /// Project a full per-variety sign vector onto class signs. Errors when
    /// members of one class carry inconsistent signs.
    pub fn class_signs(&self, omega: &[i8]) -> Result<Vec<i8>> {
        if omega.len() != self.varieties.len() {
            return Err(Error::InvalidParameter(format!(
                "sign vector length {} does not match variety count {}",
                omega.len(),
                self.varieties.len()
            )));
        }
        let mut signs = vec![0i8; self.classes.len()];
        for (i, &w) in omega.iter().enumerate() {
            if w != 1 && w != -1 {
                return Err(Error::InvalidParameter(
                    "sign entries must be +1 or -1".into(),
                ));
            }
            let s = w * self.orientation[i];
            let ci = self.class_of[i];
            if signs[ci] == 0 {
                signs[ci] = s;
            } else if signs[ci] != s {
                return Err(Error::InvalidParameter(format!(
                    "sign vector is contradictory on duplicated varieties (class {ci})"
                )));
            }
        }
        Ok(signs)
    }
}

/// Primitive (gcd-reduced, sign-normalized) form of an exponent vector and
/// offset, plus the orientation of the original relative to it.
fn primitive_form(exponents: &[i64], log_c0: f64) -> (Vec<i64>, f64, i8) {
    let g = exponents
        .iter()
        .fold(0u64, |g, &c| gcd(g, c.unsigned_abs()))
        .max(1);
    let mut normal: Vec<i64> = exponents.iter().map(|&c| c / g as i64).collect();
    let mut offset = log_c0 / g as f64;
    let mut orient = 1i8;
    if let Some(&first) = normal.iter().find(|&&c| c != 0) {
        if first < 0 {
            for c in normal.iter_mut() {
                *c = -*c;
            }
            offset = -offset;
            orient = -1;
        }
    }
    (normal, offset, orient)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// The ordered list of varieties for an observation: one per type in the
/// canonical enumeration with the observation removed.
pub fn build_varieties(phat: &EmpiricalDistribution) -> Result<Vec<SplittingVariety>> {
    let types = enumerate_types(phat.k(), phat.n())?;
    let table = LnFactorials::up_to(phat.n());
    let ln_phat: f64 = phat.counts().iter().map(|&c| table.get(c)).sum();
    let mut out = Vec::with_capacity(types.len().saturating_sub(1));
    let mut index = 0usize;
    for qhat in types {
        if qhat == *phat {
            continue;
        }
        index += 1;
        let exponents: Vec<i64> = phat
            .counts()
            .iter()
            .zip(qhat.counts())
            .map(|(&a, &b)| a as i64 - b as i64)
            .collect();
        let log_c0 = qhat.counts().iter().map(|&c| table.get(c)).sum::<f64>() - ln_phat;
        out.push(SplittingVariety {
            index,
            qhat,
            exponents,
            log_c0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ed(counts: &[u64]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(counts.to_vec()).unwrap()
    }

    fn sp(p: &[f64]) -> SimplexPoint {
        SimplexPoint::new(p.to_vec()).unwrap()
    }

    #[test]
    fn variety_constants() {
        // Unit observation e2: the variety against e1 is p1 = p2.
        let vs = build_varieties(&ed(&[0, 1, 0])).unwrap();
        assert_eq!(vs.len(), 2);
        assert_eq!(vs[0].exponents, vec![-1, 1, 0]);
        assert_eq!(vs[0].log_c0, 0.0);
        assert_eq!(vs[1].exponents, vec![0, 1, -1]);

        // Observation [1,2,1] against [0,4,0]: c = (1,-2,1), c0 = 24/2.
        let vs = build_varieties(&ed(&[1, 2, 1])).unwrap();
        let v = vs
            .iter()
            .find(|v| v.qhat.counts() == [0, 4, 0])
            .expect("variety against [0,4,0]");
        assert_eq!(v.exponents, vec![1, -2, 1]);
        assert!((v.log_c0 - 12.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn exponents_sum_to_zero() {
        for phat in [ed(&[1, 2, 1]), ed(&[4, 0, 0]), ed(&[2, 0])] {
            for v in build_varieties(&phat).unwrap() {
                assert_eq!(v.exponents.iter().sum::<i64>(), 0);
                assert!(v.exponents.iter().any(|&c| c != 0));
            }
        }
    }

    #[test]
    fn eval_f_values() {
        let v = SplittingVariety {
            index: 1,
            qhat: ed(&[1, 0, 0]),
            exponents: vec![-1, 1, 0],
            log_c0: 0.0,
        };
        assert!(v.eval_f(&sp(&[0.4, 0.4, 0.2])).unwrap().abs() < 1e-14);
        assert!((v.eval_f(&sp(&[0.5, 0.25, 0.25])).unwrap() - 0.5).abs() < 1e-14);
        assert!((v.eval_f(&sp(&[0.25, 0.5, 0.25])).unwrap() + 1.0).abs() < 1e-14);
        assert!(matches!(
            v.eval_f(&sp(&[0.0, 0.5, 0.5])),
            Err(Error::BoundaryPoint { index: 0 })
        ));
    }

    #[test]
    fn halfspace_sign_convention() {
        let v = SplittingVariety {
            index: 1,
            qhat: ed(&[1, 0, 0]),
            exponents: vec![-1, 1, 0],
            log_c0: 0.0,
        };
        let h = v.halfspace();
        let p = sp(&[0.5, 0.25, 0.25]);
        let f = v.eval_f(&p).unwrap();
        let z = z_transform(&p).unwrap();
        assert!(f > 0.0);
        assert!((h.slack(&z) - 2.0_f64.ln()).abs() < 1e-12);
        assert_eq!(f.signum(), h.slack(&z).signum());
    }

    #[test]
    fn z_round_trip() {
        let p = sp(&[0.5, 0.25, 0.25]);
        let z = z_transform(&p).unwrap();
        assert!((z[0] - 2.0_f64.ln()).abs() < 1e-14);
        assert!((z[1] - 4.0_f64.ln()).abs() < 1e-14);
        let back = z_inverse(&z).unwrap();
        assert!(p.dist(&back) < 1e-12);

        let z3 = z_transform(&SimplexPoint::uniform(3)).unwrap();
        for zi in z3 {
            assert!((zi - 3.0_f64.ln()).abs() < 1e-14);
        }

        assert!(matches!(
            z_inverse(&[2.0_f64.ln(), 2.0_f64.ln(), 0.0]),
            Err(Error::NotOnSimplex(_))
        ));
    }

    #[test]
    fn joint_family_of_identical_observations_collapses() {
        let f1 = VarietyFamily::for_observation(&ed(&[0, 1, 0])).unwrap();
        let joint = VarietyFamily::joint(&f1, &f1).unwrap();
        assert_eq!(joint.len(), 4);
        assert_eq!(joint.classes().len(), f1.classes().len());
        for c in joint.classes() {
            assert_eq!(c.members.len(), 2);
        }
    }

    #[test]
    fn sign_expansion_round_trip() {
        let fam = VarietyFamily::for_observation(&ed(&[1, 2, 1])).unwrap();
        let class_signs: Vec<i8> = (0..fam.classes().len())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect();
        let omega = fam.expand_signs(&class_signs);
        assert_eq!(fam.class_signs(&omega).unwrap(), class_signs);
    }
}
