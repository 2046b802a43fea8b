//! Oracle checks of the gradient bound and the disjointness certifier.

mod common;

use rand::Rng;

use mvcs::abtest::{certify_disjoint, lipschitz_bound, DisjointStatus};
use mvcs::continuity::ContinuityConfig;
use mvcs::covering::CoverConfig;
use mvcs::simplex::{EmpiricalDistribution, PValueEvaluator, SimplexPoint};
use mvcs::variety::VarietyFamily;

fn ed(counts: &[u64]) -> EmpiricalDistribution {
    EmpiricalDistribution::new(counts.to_vec()).unwrap()
}

#[test]
fn lipschitz_bound_holds_on_same_region_pairs() {
    let mut rng = common::rng(41);
    for counts in [&[0u64, 1, 0][..], &[1, 2, 1]] {
        let phat = ed(counts);
        let family = VarietyFamily::for_observation(&phat).unwrap();
        let eval = PValueEvaluator::new(&phat).unwrap();
        let l = lipschitz_bound(3, phat.n()).unwrap().scalar;
        let mut tested = 0usize;
        while tested < 400 {
            let p = common::random_interior(&mut rng, 3);
            // A nearby second point, renormalized.
            let q_raw: Vec<f64> = p
                .iter()
                .map(|&v| (v + 0.02 * (rng.random::<f64>() - 0.5)).max(1e-9))
                .collect();
            let s: f64 = q_raw.iter().sum();
            let q: Vec<f64> = q_raw.iter().map(|v| v / s).collect();
            let same_region = family.varieties().iter().all(|v| {
                let fa = common::direct_f(&v.exponents, v.log_c0, &p);
                let fb = common::direct_f(&v.exponents, v.log_c0, &q);
                fa.abs() > 1e-10 && fb.abs() > 1e-10 && (fa < 0.0) == (fb < 0.0)
            });
            if !same_region {
                continue;
            }
            tested += 1;
            let rp = eval.eval(&SimplexPoint::new(p.clone()).unwrap()).value;
            let rq = eval.eval(&SimplexPoint::new(q.clone()).unwrap()).value;
            let d: f64 = p
                .iter()
                .zip(&q)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(
                (rp - rq).abs() <= l * d + 1e-12,
                "{counts:?}: |{rp} - {rq}| > {l} * {d}"
            );
        }
    }
}

/// Dense-grid search for a common member of both confidence sets.
fn oracle_common_member(
    e1: &PValueEvaluator,
    e2: &PValueEvaluator,
    alpha: f64,
    r: u64,
) -> Option<Vec<f64>> {
    for i in 0..=r {
        for j in 0..=(r - i) {
            let p = SimplexPoint::new(vec![
                i as f64 / r as f64,
                j as f64 / r as f64,
                (r - i - j) as f64 / r as f64,
            ])
            .unwrap();
            if e1.eval(&p).value >= alpha && e2.eval(&p).value >= alpha {
                return Some(p.coords().to_vec());
            }
        }
    }
    None
}

#[test]
fn verdicts_never_contradict_the_grid_oracle() {
    let ccfg = ContinuityConfig::default();
    let vcfg = CoverConfig::default();
    // (phat1, phat2, alpha, epsilon0, refinements)
    type Case<'a> = (&'a [u64], &'a [u64], f64, f64, u32);
    let cases: [Case; 5] = [
        (&[0, 1, 0], &[0, 1, 0], 0.5, 0.2, 1),
        (&[1, 0, 0], &[0, 1, 0], 0.5, 0.2, 1),
        (&[1, 0, 0], &[0, 0, 1], 0.9, 0.2, 1),
        (&[2, 0, 0], &[0, 2, 0], 0.5, 0.05, 2),
        (&[2, 0, 0], &[0, 2, 0], 0.75, 0.02, 2),
    ];
    for (c1, c2, alpha, eps0, refinements) in cases {
        let p1 = ed(c1);
        let p2 = ed(c2);
        let verdict = certify_disjoint(&p1, &p2, alpha, eps0, refinements, &ccfg, &vcfg).unwrap();
        let e1 = PValueEvaluator::new(&p1).unwrap();
        let e2 = PValueEvaluator::new(&p2).unwrap();
        let oracle = oracle_common_member(&e1, &e2, alpha, 300);
        match verdict.status {
            DisjointStatus::Overlap => {
                let w = verdict.witness.expect("overlap carries a witness");
                assert!(
                    e1.eval_with_tie_band(&w, 1e-9).value >= alpha
                        && e2.eval_with_tie_band(&w, 1e-9).value >= alpha
                );
            }
            DisjointStatus::Disjoint => {
                assert!(
                    oracle.is_none(),
                    "{c1:?} vs {c2:?} at alpha {alpha}: DISJOINT but oracle found {oracle:?}"
                );
            }
            DisjointStatus::Undecided => {}
        }
        // When the oracle finds a witness, the certifier must not certify
        // disjointness; when it certified, it had grounds.
        if oracle.is_some() {
            assert_ne!(verdict.status, DisjointStatus::Disjoint);
        }
    }
}

#[test]
fn certified_points_are_monotone_under_refinement() {
    // Points certified at a coarse epsilon stay certified at a finer one:
    // the bound min(rho) + L * eps only shrinks. Checked on the common
    // subgrid of two grids whose resolutions differ by an exact factor.
    let p1 = ed(&[2, 0, 0]);
    let p2 = ed(&[0, 2, 0]);
    let e1 = PValueEvaluator::new(&p1).unwrap();
    let e2 = PValueEvaluator::new(&p2).unwrap();
    let l = lipschitz_bound(3, 2).unwrap().scalar;
    let alpha = 0.75;
    let eta = 60u64;
    let eps_coarse = 3.0_f64.sqrt() / eta as f64;
    let eps_fine = eps_coarse / 2.0;
    let mut coarse_certified = 0usize;
    for i in 0..=eta {
        for j in 0..=(eta - i) {
            let p = SimplexPoint::new(vec![
                i as f64 / eta as f64,
                j as f64 / eta as f64,
                (eta - i - j) as f64 / eta as f64,
            ])
            .unwrap();
            let m = e1.eval(&p).value.min(e2.eval(&p).value);
            if m + l * eps_coarse < alpha {
                coarse_certified += 1;
                assert!(m + l * eps_fine < alpha);
            }
        }
    }
    assert!(coarse_certified > 0);
}
