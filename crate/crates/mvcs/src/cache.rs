//! On-disk JSON cache of continuity-set enumerations.
//!
//! Keys carry every parameter that can change the result (observation,
//! strictness margin, solver tolerance), so a changed configuration never
//! reuses a stale artifact. Writes are atomic (temp file, then rename) and a
//! cache hit returns the stored bytes verbatim.

use std::fs;
use std::path::{Path, PathBuf};

use crate::continuity::{ContinuityAnalysis, ContinuityConfig};
use crate::error::{Error, Result};
use crate::simplex::EmpiricalDistribution;

/// Deterministic key for one enumeration.
pub fn cache_key(phat: &EmpiricalDistribution, cfg: &ContinuityConfig) -> String {
    let counts: Vec<String> = phat.counts().iter().map(|c| c.to_string()).collect();
    format!(
        "sets_k{}_n{}_p{}_tau{:e}_tol{:e}.json",
        phat.k(),
        phat.n(),
        counts.join("-"),
        cfg.tau,
        cfg.solver_gap,
    )
}

/// Serialize an analysis in the canonical artifact form.
pub fn to_canonical_json(analysis: &ContinuityAnalysis) -> Result<String> {
    serde_json::to_string_pretty(analysis).map_err(|e| Error::Cache(e.to_string()))
}

/// Load the cached bytes for a key, or compute, store atomically, and return
/// the freshly written bytes. Hits return the file content verbatim, so
/// repeated invocations are byte-identical.
pub fn load_or_compute(
    dir: &Path,
    phat: &EmpiricalDistribution,
    cfg: &ContinuityConfig,
    compute: impl FnOnce() -> Result<ContinuityAnalysis>,
) -> Result<String> {
    let path = dir.join(cache_key(phat, cfg));
    if let Ok(bytes) = fs::read_to_string(&path) {
        return Ok(bytes);
    }
    let analysis = compute()?;
    let json = to_canonical_json(&analysis)?;
    write_atomic(&path, &json)?;
    Ok(json)
}

fn write_atomic(path: &PathBuf, content: &str) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| Error::Cache("cache path has no parent".into()))?;
    fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    fs::write(&tmp, content).map_err(|e| Error::Cache(e.to_string()))?;
    fs::rename(&tmp, path).map_err(|e| Error::Cache(e.to_string()))?;
    Ok(())
}
