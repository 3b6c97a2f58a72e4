//! Compute and emit the null distributions for one panel shape.

use std::path::PathBuf;

use serde::Serialize;

use ranksignal::nulls::{cycle_null_auto, pmax_null, t_null_auto, tau_null, CycleNull};
use ranksignal::pmf::NullPmf;
use ranksignal::rank::TiePolicy;

use crate::cache::{cached_cycle, cached_pmf};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct NullsOptions {
    pub p: usize,
    pub r: usize,
    pub seed: u64,
    pub mc_samples: u64,
    pub enum_budget: u64,
    pub tie_policy: TiePolicy,
    pub out: Option<PathBuf>,
}

/// The three reference distributions plus the cycle rate, as one document.
#[derive(Debug, Clone, Serialize)]
pub struct NullBundle {
    pub items_per_prompt: usize,
    pub raters_per_prompt: usize,
    /// Single-pair rank correlation between two independent uniform raters.
    pub pairwise_tau: NullPmf,
    /// Per-prompt mean pairwise correlation across all rater pairs.
    pub panel_mean: NullPmf,
    /// Per-pair majority share max(k, R-k)/R.
    pub majority_share: NullPmf,
    pub cycle: CycleNull,
    pub cycle_rate_exact: String,
    pub cycle_rate: f64,
}

pub fn run(opts: &NullsOptions) -> Result<NullBundle, CliError> {
    let (p, r) = (opts.p, opts.r);
    let pairwise_tau = tau_null(p)?;
    let panel_mean = cached_pmf(&format!("panel_mean_p{p}_r{r}"), || {
        t_null_auto(p, r, opts.enum_budget, opts.mc_samples, opts.seed)
    })?;
    let majority_share = pmax_null(r)?;
    let cycle = cached_cycle(&format!("cycle_p{p}_r{r}"), || {
        cycle_null_auto(p, r, opts.tie_policy, opts.enum_budget, opts.mc_samples, opts.seed)
    })?;
    Ok(NullBundle {
        items_per_prompt: p,
        raters_per_prompt: r,
        pairwise_tau,
        panel_mean,
        majority_share,
        cycle_rate_exact: cycle.rate().to_string(),
        cycle_rate: cycle.rate_f64(),
        cycle,
    })
}
