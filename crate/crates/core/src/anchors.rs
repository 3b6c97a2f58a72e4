//! Subsampling large external preference datasets into fixed-shape
//! reference panels, plus the descriptive statistics used to contextualize
//! a target dataset's agreement level.
//!
//! A [`RatingTable`] holds sparse (user, item) → value records; an
//! [`AnchorRecipe`] says how many panels of which shape to draw. Draws are
//! chunked by bootstrap iteration with per-iteration derived RNG streams,
//! so the emitted panel stream is identical regardless of worker count and
//! invariant to input record order.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::rat_string;
use crate::rank::{
    has_condorcet_cycle, majority_tournament, mean_pairwise_tau, pair_tallies, RankPanel, Ranking,
    Rat, TiePolicy,
};
use crate::rng::chunk_rng;
use crate::stats::{rat_lower_median, rat_mean};

/// How a rating value orders items for one user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    /// Higher value = better (star ratings, preference scores).
    ScalarRating,
    /// Lower value = better (position 1 is the favorite).
    RankPosition,
}

/// One user's value for one item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub user: String,
    pub item: String,
    pub value: f64,
}

/// Sparse (user, item) → value store with exactly one value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingTable {
    kind: ValueKind,
    by_user: BTreeMap<String, BTreeMap<String, f64>>,
}

impl RatingTable {
    pub fn new(kind: ValueKind, records: Vec<RatingRecord>) -> Result<Self> {
        let mut by_user: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for rec in records {
            if !rec.value.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite value for user {} on item {}",
                    rec.user, rec.item
                )));
            }
            let row = by_user.entry(rec.user.clone()).or_default();
            if row.insert(rec.item.clone(), rec.value).is_some() {
                return Err(Error::DuplicateRating {
                    user: rec.user,
                    item: rec.item,
                });
            }
        }
        Ok(RatingTable { kind, by_user })
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn user_count(&self) -> usize {
        self.by_user.len()
    }

    pub fn value_of(&self, user: &str, item: &str) -> Option<f64> {
        self.by_user.get(user).and_then(|row| row.get(item)).copied()
    }

    /// Distinct items, optionally restricted to the `top_n` most-rated
    /// (count descending, id ascending on ties).
    fn item_pool(&self, top_n: Option<usize>) -> BTreeSet<String> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for row in self.by_user.values() {
            for item in row.keys() {
                *counts.entry(item).or_default() += 1;
            }
        }
        match top_n {
            None => counts.keys().map(|s| s.to_string()).collect(),
            Some(n) => {
                let mut ranked: Vec<(&str, usize)> =
                    counts.iter().map(|(&k, &v)| (k, v)).collect();
                ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
                ranked.into_iter().take(n).map(|(k, _)| k.to_string()).collect()
            }
        }
    }
}

/// How many reference panels to draw, and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorRecipe {
    pub name: String,
    /// Items per panel.
    pub p: usize,
    /// Raters per panel.
    pub r: usize,
    pub bootstrap_iterations: usize,
    pub panels_per_iteration: usize,
    pub subsets_per_panel: usize,
    /// Restrict the item pool to the N most-rated items.
    #[serde(default)]
    pub item_pool_top_n: Option<usize>,
    /// Use exactly these items instead of drawing subsets.
    #[serde(default)]
    pub fixed_items: Option<Vec<String>>,
    pub seed: u64,
}

impl AnchorRecipe {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p", self.p),
            ("r", self.r),
            ("bootstrap_iterations", self.bootstrap_iterations),
            ("panels_per_iteration", self.panels_per_iteration),
            ("subsets_per_panel", self.subsets_per_panel),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidRecipe(format!("{name} must be positive")));
            }
        }
        if self.p < 2 {
            return Err(Error::InvalidRecipe("p must be at least 2".into()));
        }
        if self.r < 2 {
            return Err(Error::InvalidRecipe("r must be at least 2".into()));
        }
        if let Some(fixed) = &self.fixed_items {
            if fixed.len() != self.p {
                return Err(Error::InvalidRecipe(format!(
                    "fixed item list has {} entries but p = {}",
                    fixed.len(),
                    self.p
                )));
            }
            let set: BTreeSet<&String> = fixed.iter().collect();
            if set.len() != fixed.len() {
                return Err(Error::InvalidRecipe("fixed item list repeats an id".into()));
            }
            if self.subsets_per_panel != 1 {
                return Err(Error::InvalidRecipe(
                    "with fixed items every subset would be identical; \
                     set subsets_per_panel to 1"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    /// Panels the recipe asks for (before skips).
    pub fn requested_panels(&self) -> u64 {
        self.bootstrap_iterations as u64
            * self.panels_per_iteration as u64
            * self.subsets_per_panel as u64
    }
}

/// Bounded redraw count for rater draws without enough common items and
/// for item subsets hitting rating ties.
pub const MAX_REDRAWS: usize = 20;

/// The emitted panel stream plus counters for everything that did not go
/// down the happy path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleOutcome {
    pub panels: Vec<RankPanel>,
    /// Rater draws abandoned after the redraw budget (each costs
    /// `subsets_per_panel` panels).
    pub skipped_rater_draws: u64,
    /// Item-subset redraws forced by rating ties.
    pub tie_redraws: u64,
    /// Subsets where ties survived the redraw budget and were broken by
    /// the iteration's RNG stream.
    pub tie_breaks: u64,
}

/// Draw `(p, r)`-shaped strict-ranking panels from a rating table.
///
/// Raters are drawn first (with up to [`MAX_REDRAWS`] redraws until the
/// group shares at least `p` rated items), then item subsets from the
/// group's common pool. Scalar-rating ties trigger subset redraws and,
/// past the budget, a seeded uniform tie-break — both counted in the
/// outcome. Same seed ⇒ identical stream, independent of worker count.
pub fn subsample_panels(table: &RatingTable, recipe: &AnchorRecipe) -> Result<SubsampleOutcome> {
    recipe.validate()?;
    let pool = table.item_pool(recipe.item_pool_top_n);
    if let Some(fixed) = &recipe.fixed_items {
        for item in fixed {
            if !pool.contains(item) {
                return Err(Error::InvalidRecipe(format!(
                    "fixed item {item} is not in the (restricted) item pool"
                )));
            }
        }
    }

    // Per-user rated items within the pool, keeping only users that can
    // ever satisfy the overlap rule (all p drawn items rated).
    let rated_in_pool: BTreeMap<&str, BTreeSet<&str>> = table
        .by_user
        .iter()
        .map(|(user, row)| {
            let items: BTreeSet<&str> = row
                .keys()
                .filter(|i| pool.contains(i.as_str()))
                .map(|i| i.as_str())
                .collect();
            (user.as_str(), items)
        })
        .collect();
    let eligible: Vec<&str> = rated_in_pool
        .iter()
        .filter(|(_, items)| match &recipe.fixed_items {
            Some(fixed) => fixed.iter().all(|f| items.contains(f.as_str())),
            None => items.len() >= recipe.p,
        })
        .map(|(user, _)| *user)
        .collect();

    let per_iteration: Vec<IterationOutcome> = (0..recipe.bootstrap_iterations)
        .into_par_iter()
        .map(|iter_idx| draw_iteration(table, recipe, &eligible, &rated_in_pool, iter_idx))
        .collect::<Result<Vec<_>>>()?;

    let mut outcome = SubsampleOutcome {
        panels: Vec::new(),
        skipped_rater_draws: 0,
        tie_redraws: 0,
        tie_breaks: 0,
    };
    for part in per_iteration {
        outcome.panels.extend(part.panels);
        outcome.skipped_rater_draws += part.skipped_rater_draws;
        outcome.tie_redraws += part.tie_redraws;
        outcome.tie_breaks += part.tie_breaks;
    }
    Ok(outcome)
}

struct IterationOutcome {
    panels: Vec<RankPanel>,
    skipped_rater_draws: u64,
    tie_redraws: u64,
    tie_breaks: u64,
}

fn draw_iteration(
    table: &RatingTable,
    recipe: &AnchorRecipe,
    eligible: &[&str],
    rated_in_pool: &BTreeMap<&str, BTreeSet<&str>>,
    iter_idx: usize,
) -> Result<IterationOutcome> {
    let mut rng = chunk_rng(recipe.seed, iter_idx as u64);
    let mut out = IterationOutcome {
        panels: Vec::new(),
        skipped_rater_draws: 0,
        tie_redraws: 0,
        tie_breaks: 0,
    };
    for panel_idx in 0..recipe.panels_per_iteration {
        // Draw raters until they share enough items, within budget.
        let mut group: Option<(Vec<&str>, Vec<&str>)> = None;
        if eligible.len() >= recipe.r {
            for _ in 0..=MAX_REDRAWS {
                let picks = rand::seq::index::sample(&mut rng, eligible.len(), recipe.r);
                let raters: Vec<&str> = picks.iter().map(|i| eligible[i]).collect();
                let mut common: BTreeSet<&str> = rated_in_pool[raters[0]].clone();
                for rater in &raters[1..] {
                    common = common
                        .intersection(&rated_in_pool[rater])
                        .copied()
                        .collect();
                }
                if let Some(fixed) = &recipe.fixed_items {
                    // Eligibility already guarantees the fixed items.
                    group = Some((raters, fixed.iter().map(|s| s.as_str()).collect()));
                    break;
                }
                if common.len() >= recipe.p {
                    group = Some((raters, common.into_iter().collect()));
                    break;
                }
            }
        }
        let Some((raters, common)) = group else {
            out.skipped_rater_draws += 1;
            continue;
        };

        for subset_idx in 0..recipe.subsets_per_panel {
            let (items, broke_tie) = draw_subset(table, recipe, &raters, &common, &mut rng, &mut out);
            let prompt_id = format!(
                "{}:b{:03}:p{:02}:s{:03}",
                recipe.name, iter_idx, panel_idx, subset_idx
            );
            let mut rankings = Vec::with_capacity(recipe.r);
            for rater in &raters {
                rankings.push(rank_items(table, rater, &items, broke_tie, &mut rng));
            }
            out.panels.push(RankPanel::new(
                prompt_id,
                recipe.name.clone(),
                raters.iter().map(|s| s.to_string()).collect(),
                items.iter().map(|s| s.to_string()).collect(),
                rankings,
            )?);
        }
    }
    Ok(out)
}

/// Pick `p` items from the group's common pool, redrawing on rating ties
/// up to the budget. Returns the items and whether ties must be broken.
fn draw_subset<'a>(
    table: &RatingTable,
    recipe: &AnchorRecipe,
    raters: &[&str],
    common: &[&'a str],
    rng: &mut crate::rng::StatRng,
    out: &mut IterationOutcome,
) -> (Vec<&'a str>, bool) {
    if let Some(_fixed) = &recipe.fixed_items {
        let items: Vec<&str> = common.to_vec();
        let tied = raters.iter().any(|r| has_value_ties(table, r, &items));
        if tied {
            out.tie_breaks += 1;
        }
        return (items, tied);
    }
    let mut last: Option<Vec<&str>> = None;
    for attempt in 0..=MAX_REDRAWS {
        let picks = rand::seq::index::sample(rng, common.len(), recipe.p);
        let items: Vec<&str> = picks.iter().map(|i| common[i]).collect();
        let tied = raters.iter().any(|r| has_value_ties(table, r, &items));
        if !tied {
            return (items, false);
        }
        if attempt < MAX_REDRAWS {
            out.tie_redraws += 1;
        }
        last = Some(items);
    }
    out.tie_breaks += 1;
    (last.expect("at least one draw"), true)
}

fn has_value_ties(table: &RatingTable, rater: &str, items: &[&str]) -> bool {
    let mut values: Vec<f64> = items
        .iter()
        .map(|i| table.value_of(rater, i).expect("overlap rule"))
        .collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    values.windows(2).any(|w| w[0] == w[1])
}

/// Strict ranking of `items` for one rater by their recorded values.
/// When `break_ties` is set, item order is shuffled first so that the
/// stable value sort resolves ties uniformly at random.
fn rank_items(
    table: &RatingTable,
    rater: &str,
    items: &[&str],
    break_ties: bool,
    rng: &mut crate::rng::StatRng,
) -> Ranking {
    let values: Vec<f64> = items
        .iter()
        .map(|i| table.value_of(rater, i).expect("overlap rule"))
        .collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    if break_ties {
        use rand::seq::SliceRandom;
        order.shuffle(rng);
    }
    match table.kind {
        ValueKind::ScalarRating => {
            order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite"))
        }
        ValueKind::RankPosition => {
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"))
        }
    }
    Ranking::from_order(&order).expect("order is a permutation")
}

/// The four descriptive columns summarizing a panel stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorStats {
    pub n_panels: u64,
    /// Lower median of per-panel mean pairwise τ — always an exact
    /// support value.
    #[serde(with = "rat_string")]
    pub median_t: Rat,
    #[serde(with = "rat_string")]
    pub mean_pair_tau: Rat,
    #[serde(with = "rat_string")]
    pub mean_pmax: Rat,
    #[serde(with = "rat_string")]
    pub cycle_rate: Rat,
}

/// Compute anchor descriptive statistics over a panel stream.
pub fn anchor_stats(panels: &[RankPanel], tie_policy: TiePolicy) -> Result<AnchorStats> {
    if panels.is_empty() {
        return Err(Error::InvalidParameter(
            "anchor statistics need at least one panel".into(),
        ));
    }
    let mut ts = Vec::with_capacity(panels.len());
    let mut pmax_means = Vec::with_capacity(panels.len());
    let mut cyclic = 0i64;
    for panel in panels {
        ts.push(mean_pairwise_tau(panel));
        let tallies = pair_tallies(panel);
        let pmax_sum: Rat = tallies.iter().map(|t| t.p_max()).sum();
        pmax_means.push(pmax_sum / Rat::new(tallies.len() as i64, 1));
        if has_condorcet_cycle(&majority_tournament(panel), tie_policy)? {
            cyclic += 1;
        }
    }
    let mut sorted = ts.clone();
    sorted.sort();
    Ok(AnchorStats {
        n_panels: panels.len() as u64,
        median_t: rat_lower_median(&sorted).expect("nonempty"),
        mean_pair_tau: rat_mean(&ts).expect("nonempty"),
        mean_pmax: rat_mean(&pmax_means).expect("nonempty"),
        cycle_rate: Rat::new(cyclic, panels.len() as i64),
    })
}

/// Top-k model selection by mean aggregated rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopModels {
    /// Selected model indices, ascending.
    pub indices: Vec<usize>,
    /// Mean aggregated rank per model (all models, input order).
    pub mean_ranks: Vec<f64>,
    /// Mean-rank gap from the k-th selected model to the runner-up;
    /// `None` when every model was selected.
    pub gap_to_next: Option<f64>,
}

/// Pick the `k` models with the lowest mean rank from a prompts × models
/// rank matrix. Errors when fewer than `k` models are offered; with
/// exactly `k`, all are returned and there is no runner-up gap.
pub fn top_models_by_mean_rank(ranks: &[Vec<f64>], k: usize) -> Result<TopModels> {
    let Some(first) = ranks.first() else {
        return Err(Error::InvalidParameter(
            "rank matrix needs at least one prompt row".into(),
        ));
    };
    let m = first.len();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if ranks.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidParameter(
            "rank matrix rows have inconsistent lengths".into(),
        ));
    }
    if m < k {
        return Err(Error::InsufficientItems {
            needed: k,
            available: m,
        });
    }
    let n = ranks.len() as f64;
    let mean_ranks: Vec<f64> = (0..m)
        .map(|j| ranks.iter().map(|row| row[j]).sum::<f64>() / n)
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        mean_ranks[a]
            .partial_cmp(&mean_ranks[b])
            .expect("finite means")
            .then(a.cmp(&b))
    });
    let mut indices: Vec<usize> = order[..k].to_vec();
    let gap_to_next = (m > k).then(|| mean_ranks[order[k]] - mean_ranks[order[k - 1]]);
    indices.sort_unstable();
    Ok(TopModels {
        indices,
        mean_ranks,
        gap_to_next,
    })
}

/// The standard four-model selection used for reference-panel fixtures.
pub fn top4_models(ranks: &[Vec<f64>]) -> Result<TopModels> {
    top_models_by_mean_rank(ranks, 4)
}
