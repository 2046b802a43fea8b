//! Small dense numeric kernels: log-factorials, linear solves, a two-phase
//! simplex LP for feasibility margins, a log-barrier Newton method for the
//! sum-of-exponentials objective, polytope vertex enumeration, and 1-d
//! root/minimum search.
//!
//! Problem sizes here are tiny (at most a few variables and a few dozen
//! constraint rows), so everything is plain `Vec<f64>` arithmetic.

pub mod barrier;
pub mod factorial;
pub mod linalg;
pub mod lp;
pub mod roots;
pub mod vertices;
