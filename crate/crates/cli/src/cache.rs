//! On-disk cache for exact null distributions.
//!
//! Exact enumerations can take seconds at the larger feasible shapes; with
//! the cache directory set they are computed once per (statistic, shape)
//! and reused across runs. Monte Carlo results are never cached — they
//! depend on the seed and sample count, which the key does not encode.

use std::path::PathBuf;

use ranksignal::nulls::CycleNull;
use ranksignal::pmf::{NullPmf, PmfMethod};

use crate::error::CliError;

/// Directory for cached exact nulls. Unset means no caching.
pub const NULL_CACHE_ENV: &str = "RANKSIGNAL_NULL_CACHE";

fn cache_path(key: &str) -> Option<PathBuf> {
    std::env::var_os(NULL_CACHE_ENV).map(|dir| PathBuf::from(dir).join(format!("{key}.json")))
}

pub fn cached_pmf(
    key: &str,
    compute: impl FnOnce() -> ranksignal::Result<NullPmf>,
) -> Result<NullPmf, CliError> {
    let Some(path) = cache_path(key) else {
        return compute().map_err(Into::into);
    };
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(pmf) = serde_json::from_str::<NullPmf>(&text) {
            if pmf.method() != PmfMethod::MonteCarlo {
                return Ok(pmf);
            }
        }
    }
    let pmf = compute()?;
    if pmf.method() != PmfMethod::MonteCarlo {
        if let Some(dir) = path.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        let _ = std::fs::write(&path, serde_json::to_string(&pmf).expect("pmf serializes"));
    }
    Ok(pmf)
}

pub fn cached_cycle(
    key: &str,
    compute: impl FnOnce() -> ranksignal::Result<CycleNull>,
) -> Result<CycleNull, CliError> {
    let Some(path) = cache_path(key) else {
        return compute().map_err(Into::into);
    };
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(cycle) = serde_json::from_str::<CycleNull>(&text) {
            if cycle.method != PmfMethod::MonteCarlo {
                return Ok(cycle);
            }
        }
    }
    let cycle = compute()?;
    if cycle.method != PmfMethod::MonteCarlo {
        if let Some(dir) = path.parent() {
            let _ = std::fs::create_dir_all(dir);
        }
        let _ = std::fs::write(&path, serde_json::to_string(&cycle).expect("cycle serializes"));
    }
    Ok(cycle)
}
