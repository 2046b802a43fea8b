//! Oracle checks of the distance solver and the (epsilon, delta)-covers.

mod common;

use mvcs::continuity::{analyze, ContinuityConfig};
use mvcs::covering::{build_cover, min_distance_to_variety, CoverConfig, CoverLabel};
use mvcs::simplex::{EmpiricalDistribution, SimplexPoint};
use mvcs::variety::VarietyFamily;

fn ed(counts: &[u64]) -> EmpiricalDistribution {
    EmpiricalDistribution::new(counts.to_vec()).unwrap()
}

#[test]
fn variety_distance_matches_parameterization_oracle() {
    let mut rng = common::rng(31);
    let cfg = CoverConfig::default();
    // Unit-observation lines and a sample of the curved n = 4 varieties.
    let fam1 = VarietyFamily::for_observation(&ed(&[0, 1, 0])).unwrap();
    let fam2 = VarietyFamily::for_observation(&ed(&[1, 2, 1])).unwrap();
    let mut varieties: Vec<_> = fam1.varieties().to_vec();
    varieties.extend(fam2.varieties().iter().take(6).cloned());
    for v in &varieties {
        for _ in 0..12 {
            let q = common::random_interior(&mut rng, 3);
            let oracle = common::curve_distance_oracle(&v.exponents, v.log_c0, &q, 1500);
            let got = min_distance_to_variety(&SimplexPoint::new(q.clone()).unwrap(), v, &cfg)
                .unwrap()
                .distance;
            assert!(
                (got - oracle).abs() <= 1e-6,
                "variety {:?} q={q:?}: got {got}, oracle {oracle}",
                v.exponents
            );
        }
    }
}

#[test]
fn closed_form_projection_case() {
    // Distance from (1/2, 1/4, 1/4) to the line p1 = p2.
    let fam = VarietyFamily::for_observation(&ed(&[0, 1, 0])).unwrap();
    let v = &fam.varieties()[0];
    let q = SimplexPoint::new(vec![0.5, 0.25, 0.25]).unwrap();
    let r = min_distance_to_variety(&q, v, &CoverConfig::default()).unwrap();
    assert!((r.distance - 0.125 * 2.0_f64.sqrt()).abs() <= 1e-9);
    assert!((r.lambda - (-3.0 / 64.0)).abs() <= 1e-9);
}

#[test]
fn cover_property_dense_sample() {
    // (epsilon, delta)-cover of every quadrant set of the unit observation:
    // each sampled region point has a cover point within epsilon, and each
    // cover point is within delta of the sampled closure.
    let analysis = analyze(&ed(&[0, 1, 0]), &ContinuityConfig::default()).unwrap();
    let vcfg = CoverConfig::default();
    let (eps, delta) = (0.1, 0.1);
    let mut rng = common::rng(32);
    for set in &analysis.sets {
        let cover = build_cover(set, &analysis, eps, delta, &vcfg).unwrap();
        let pts: Vec<Vec<f64>> = cover
            .points
            .iter()
            .map(|cp| {
                cp.counts
                    .iter()
                    .map(|&c| c as f64 / cover.eta as f64)
                    .collect()
            })
            .collect();
        assert!(!pts.is_empty());

        // Direction 1: sampled region points are covered within epsilon.
        let mut samples: Vec<Vec<f64>> = Vec::new();
        while samples.len() < 20_000 {
            let p = common::random_interior(&mut rng, 3);
            let signs: Vec<i8> = analysis
                .family
                .varieties()
                .iter()
                .map(|v| {
                    if common::direct_f(&v.exponents, v.log_c0, &p) < 0.0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect();
            if signs == set.omega.signs() {
                samples.push(p);
            }
        }
        for s in &samples {
            let nearest = pts.iter().map(|g| dist(g, s)).fold(f64::INFINITY, f64::min);
            assert!(
                nearest <= eps,
                "sample {s:?} of {:?} has nearest cover point at {nearest}",
                set.omega
            );
        }

        // Direction 2: every cover point is within delta of the closure.
        // The nearest closure point of an outside query lies on a feasible
        // boundary arc or at a vertex, so the oracle is the filtered
        // parameterization distance (membership itself means distance zero).
        for g in &pts {
            let member = analysis.family.varieties().iter().all(|w| {
                common::direct_f(&w.exponents, w.log_c0, g) * set.omega.signs()[w.index - 1] as f64
                    <= 1e-12
            });
            if member {
                continue;
            }
            let mut nearest = f64::INFINITY;
            for v in &set.vertices {
                nearest = nearest.min(dist(g, v.coords()));
            }
            for &l in &set.touching {
                let v = &analysis.family.varieties()[l - 1];
                let feas = |p: &[f64; 3]| {
                    analysis.family.varieties().iter().all(|w| {
                        w.index == l
                            || common::direct_f(&w.exponents, w.log_c0, p)
                                * set.omega.signs()[w.index - 1] as f64
                                <= 1e-9
                    })
                };
                nearest = nearest.min(common::curve_distance_oracle_filtered(
                    &v.exponents,
                    v.log_c0,
                    g,
                    1200,
                    &feas,
                ));
            }
            assert!(
                nearest <= delta + 1e-6,
                "cover point {g:?} of {:?} is {nearest} from the closure",
                set.omega
            );
        }
    }
}

#[test]
fn shrinking_epsilon_grows_the_grid_and_keeps_coverage() {
    let analysis = analyze(&ed(&[0, 1, 0]), &ContinuityConfig::default()).unwrap();
    let vcfg = CoverConfig::default();
    let set = &analysis.sets[0];
    let coarse = build_cover(set, &analysis, 0.2, 0.2, &vcfg).unwrap();
    let fine = build_cover(set, &analysis, 0.1, 0.1, &vcfg).unwrap();
    assert!(fine.eta > coarse.eta);
    assert!(fine.points.len() > coarse.points.len());
}

#[test]
fn inside_labels_are_strict_members() {
    let analysis = analyze(&ed(&[1, 2, 1]), &ContinuityConfig::default()).unwrap();
    let vcfg = CoverConfig::default();
    let set = analysis
        .sets
        .iter()
        .max_by_key(|s| s.vertices.len())
        .unwrap();
    let cover = build_cover(set, &analysis, 0.15, 0.15, &vcfg).unwrap();
    for cp in &cover.points {
        let p: Vec<f64> = cp
            .counts
            .iter()
            .map(|&c| c as f64 / cover.eta as f64)
            .collect();
        match cp.label {
            CoverLabel::Inside => {
                for v in analysis.family.varieties() {
                    let f = common::direct_f(&v.exponents, v.log_c0, &p);
                    assert!(
                        f * set.omega.signs()[v.index - 1] as f64 <= 0.0,
                        "inside point violates sign of variety {}",
                        v.index
                    );
                }
            }
            CoverLabel::Near { distance, .. } => {
                assert!(distance <= cover.delta + 1e-9);
            }
        }
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
