//! Exact multinomial inference and the geometry of minimum-volume confidence
//! sets on the probability simplex.
//!
//! The exact p-value of a multinomial observation is a partial sum of type
//! probabilities and is therefore discontinuous: its jumps lie on a family of
//! algebraic varieties indexed by the other types. This crate enumerates the
//! regions of the simplex where the p-value is continuous (via convex
//! certification in log-coordinates), finds the vertices where those regions
//! meet, builds discrete covers of each region, and uses the covers together
//! with a gradient bound to certify whether the confidence sets of two
//! observations are disjoint (three categories).
//!
//! Modules follow the pipeline: [`simplex`] (types, probability mass, exact
//! p-value), [`variety`] (discontinuity varieties and the log-coordinate
//! halfspace view), [`continuity`] (region enumeration, vertices, touching),
//! [`covering`] (distance to varieties and epsilon-delta covers), [`abtest`]
//! (disjointness certification), [`cache`] (JSON artifacts).

pub mod abtest;
pub mod cache;
pub mod continuity;
pub mod covering;
pub mod error;
pub mod numeric;
pub mod simplex;
pub mod variety;

pub use abtest::{
    certify_disjoint, joint_continuity_sets, lipschitz_bound, DisjointStatus, DisjointnessVerdict,
    LipschitzBound,
};
pub use continuity::{
    analyze, find_continuity_sets, find_vertices, ContinuityAnalysis, ContinuityConfig,
    ContinuitySet, SetVertex, SignVector,
};
pub use covering::{
    build_cover, discrete_neighbor, eta_for_epsilon, min_distance_to_set, min_distance_to_variety,
    orthogonality_candidates_k3, CoverConfig, CoverGrid, DistanceResult,
};
pub use error::{Error, Result};
pub use simplex::{
    coverage_probability, enumerate_types, multinomial_pmf, mvcs_member, pvalue,
    EmpiricalDistribution, PValueEvaluator, PValueResult, SimplexPoint,
};
pub use variety::{build_varieties, z_inverse, z_transform, SplittingVariety, VarietyFamily};
