//! Collapsing pairwise judgments into strict rankings and summarizing how
//! decisive a rater panel is.
//!
//! Pairwise votes from one (prompt, rater) are fit with a regularized
//! Bradley–Terry model and sorted by descending strength; exact strength
//! ties fall back to stable item-id order with an explicit flag, so the
//! conversion is bit-reproducible. Panel-level pair votes are bucketed into
//! unanimous / majority / split, from which the leave-one-out agreement
//! ceiling and the oracle-on-decisive CAP ceiling follow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmf::rat_string;
use crate::rank::{pair_tallies, pairs_of, p_max, Ranking, RankPanel, Rat};

/// Default Bradley–Terry regularization: pseudo-wins added per ordered pair.
pub const DEFAULT_BT_EPSILON: f64 = 0.1;

/// One pairwise judgment by one rater.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseRecord {
    pub criterion: String,
    pub prompt_id: String,
    pub rater_id: String,
    pub item_a: String,
    pub item_b: String,
    /// Must equal `item_a` or `item_b`.
    pub winner: String,
}

impl PairwiseRecord {
    pub fn validate(&self) -> Result<()> {
        if self.item_a == self.item_b {
            return Err(Error::InvalidParameter(format!(
                "pair ({}, {}) compares an item with itself",
                self.item_a, self.item_b
            )));
        }
        if self.winner != self.item_a && self.winner != self.item_b {
            return Err(Error::InvalidParameter(format!(
                "winner {:?} is neither {:?} nor {:?}",
                self.winner, self.item_a, self.item_b
            )));
        }
        Ok(())
    }
}

/// Ordered win counts among a fixed item set: `wins[i][j]` = times item `i`
/// beat item `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WinMatrix {
    pub items: Vec<String>,
    pub wins: Vec<Vec<u64>>,
}

impl WinMatrix {
    pub fn new(items: Vec<String>) -> Self {
        let p = items.len();
        WinMatrix {
            items,
            wins: vec![vec![0; p]; p],
        }
    }

    pub fn item_count(&self) -> usize {
        self.items.len()
    }

    /// Total comparisons item `i` participated in.
    pub fn comparisons_of(&self, i: usize) -> u64 {
        (0..self.item_count())
            .map(|j| self.wins[i][j] + self.wins[j][i])
            .sum()
    }
}

/// A fitted Bradley–Terry model: strengths are strictly positive and
/// normalized to geometric mean 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtFit {
    pub items: Vec<String>,
    pub strengths: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Fit a Bradley–Terry model by minorize-maximize iteration, with
/// `epsilon` pseudo-wins added per ordered pair so every strength stays
/// finite even for undefeated items.
///
/// Stops when the largest relative strength change drops below 1e-10;
/// gives up (with `converged: false`, never silently) after 10,000 rounds.
pub fn bt_fit(matrix: &WinMatrix, epsilon: f64) -> Result<BtFit> {
    let p = matrix.item_count();
    if p < 2 {
        return Err(Error::InsufficientItems {
            needed: 2,
            available: p,
        });
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regularization must be finite and > 0, got {epsilon}"
        )));
    }
    for i in 0..p {
        if matrix.comparisons_of(i) == 0 {
            return Err(Error::UncomparedItem(matrix.items[i].clone()));
        }
    }

    // Regularized counts: w[i][j] = wins + epsilon for every ordered pair.
    let w = |i: usize, j: usize| matrix.wins[i][j] as f64 + epsilon;
    let totals: Vec<f64> = (0..p)
        .map(|i| (0..p).filter(|&j| j != i).map(|j| w(i, j)).sum())
        .collect();

    let mut s = vec![1.0f64; p];
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=10_000 {
        iterations = iter;
        let mut next = vec![0.0f64; p];
        for i in 0..p {
            let denom: f64 = (0..p)
                .filter(|&j| j != i)
                .map(|j| (w(i, j) + w(j, i)) / (s[i] + s[j]))
                .sum();
            next[i] = totals[i] / denom;
        }
        normalize_geometric(&mut next);
        let delta = s
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / a)
            .fold(0.0, f64::max);
        s = next;
        if delta < 1e-10 {
            converged = true;
            break;
        }
    }
    Ok(BtFit {
        items: matrix.items.clone(),
        strengths: s,
        converged,
        iterations,
    })
}

fn normalize_geometric(s: &mut [f64]) {
    let log_mean = s.iter().map(|x| x.ln()).sum::<f64>() / s.len() as f64;
    let g = log_mean.exp();
    for x in s.iter_mut() {
        *x /= g;
    }
}

/// A pairwise group converted to a strict ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvertedRanking {
    /// Item ids in stable (sorted) order; `ranking` ranks these positions.
    pub items: Vec<String>,
    pub ranking: Ranking,
    /// True when a strength tie was broken by item-id order.
    pub tie_broken: bool,
    /// Cyclic triples in this rater's own pairwise votes.
    pub cyclic_triples: u64,
}

impl ConvertedRanking {
    /// Item ids best first.
    pub fn item_order(&self) -> Vec<String> {
        self.ranking
            .to_order()
            .into_iter()
            .map(|i| self.items[i].clone())
            .collect()
    }
}

/// Convert one (prompt, rater) group of pairwise records into a strict
/// ranking by descending Bradley–Terry strength.
///
/// Expects exactly one record per unordered item pair. Strengths within a
/// relative 1e-8 of each other count as tied and fall back to item-id
/// order, flagged.
pub fn pairwise_to_ranking(records: &[PairwiseRecord], epsilon: f64) -> Result<ConvertedRanking> {
    if records.is_empty() {
        return Err(Error::MissingPairs("no records in group".into()));
    }
    let key = (
        &records[0].criterion,
        &records[0].prompt_id,
        &records[0].rater_id,
    );
    let mut items: Vec<String> = Vec::new();
    for rec in records {
        rec.validate()?;
        if (&rec.criterion, &rec.prompt_id, &rec.rater_id) != key {
            return Err(Error::InvalidParameter(format!(
                "records mix groups: ({}, {}, {}) vs ({}, {}, {})",
                key.0, key.1, key.2, rec.criterion, rec.prompt_id, rec.rater_id
            )));
        }
        for id in [&rec.item_a, &rec.item_b] {
            if !items.contains(id) {
                items.push(id.clone());
            }
        }
    }
    items.sort();
    let p = items.len();
    let idx_of = |id: &str| items.iter().position(|x| x == id).expect("collected");

    let mut matrix = WinMatrix::new(items.clone());
    let mut seen = vec![vec![false; p]; p];
    for rec in records {
        let (a, b) = (idx_of(&rec.item_a), idx_of(&rec.item_b));
        if seen[a][b] {
            return Err(Error::DuplicatePair(
                rec.item_a.clone(),
                rec.item_b.clone(),
            ));
        }
        seen[a][b] = true;
        seen[b][a] = true;
        let (winner, loser) = if rec.winner == rec.item_a { (a, b) } else { (b, a) };
        matrix.wins[winner][loser] += 1;
    }
    let missing: Vec<String> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .filter(|&(i, j)| !seen[i][j])
        .map(|(i, j)| format!("({}, {})", items[i], items[j]))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPairs(missing.join(", ")));
    }

    let fit = bt_fit(&matrix, epsilon)?;

    // Sort by descending strength; near-equal strengths (relative 1e-8)
    // form a tie cluster ordered by item index.
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        fit.strengths[b]
            .partial_cmp(&fit.strengths[a])
            .expect("strengths are finite")
            .then(a.cmp(&b))
    });
    let tied = |a: f64, b: f64| (a - b).abs() <= 1e-8 * a.max(b);
    let mut tie_broken = false;
    let mut pos = 0;
    while pos < p {
        let mut end = pos + 1;
        while end < p && tied(fit.strengths[order[pos]], fit.strengths[order[end]]) {
            end += 1;
        }
        if end - pos > 1 {
            tie_broken = true;
            order[pos..end].sort_unstable();
        }
        pos = end;
    }

    let mut cyclic_triples = 0u64;
    for a in 0..p {
        for b in (a + 1)..p {
            for c in (b + 1)..p {
                let ab = matrix.wins[a][b] > 0;
                let bc = matrix.wins[b][c] > 0;
                let ac = matrix.wins[a][c] > 0;
                if (ab && bc && !ac) || (!ab && !bc && ac) {
                    cyclic_triples += 1;
                }
            }
        }
    }

    Ok(ConvertedRanking {
        items,
        ranking: Ranking::from_order(&order)?,
        tie_broken,
        cyclic_triples,
    })
}

/// Panel agreement level on one item pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bucket {
    /// R–0.
    Unanimous,
    /// (R−1)–1.
    Majority,
    /// Everything closer than one dissenter.
    Split,
}

/// One item pair's vote split, agreement bucket, and leave-one-out ceiling.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairBucket {
    pub item_a: String,
    pub item_b: String,
    /// `(votes for a, votes for b)`, summing to R.
    pub votes: (u32, u32),
    pub bucket: Bucket,
    /// Expected accuracy of a held-out rater against the remaining
    /// majority: `max(votes)/R`.
    #[serde(with = "rat_string")]
    pub loo: Rat,
}

/// Bucket every item pair of a panel. Requires odd R so that a majority
/// always exists.
pub fn bucketize(panel: &RankPanel) -> Result<Vec<PairBucket>> {
    let r = panel.rater_count();
    if r % 2 == 0 {
        return Err(Error::EvenRaterCount(r));
    }
    Ok(pair_tallies(panel)
        .iter()
        .map(|t| {
            let hi = t.k.max(t.r - t.k);
            let bucket = if hi == t.r {
                Bucket::Unanimous
            } else if hi == t.r - 1 {
                Bucket::Majority
            } else {
                Bucket::Split
            };
            PairBucket {
                item_a: t.item_a.clone(),
                item_b: t.item_b.clone(),
                votes: (t.k, t.r - t.k),
                bucket,
                loo: p_max(t),
            }
        })
        .collect())
}

/// Agreement-ceiling summary over a collection of pair buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeilingSummary {
    /// Mean leave-one-out ceiling over pairs.
    #[serde(with = "rat_string")]
    pub mean_loo: Rat,
    /// Oracle-on-decisive bound: `f_unanimous + f_majority + f_split/2`.
    #[serde(with = "rat_string")]
    pub cap: Rat,
    /// Fraction of unanimous pairs; the three fractions sum to 1.
    #[serde(with = "rat_string")]
    pub fraction_unanimous: Rat,
    #[serde(with = "rat_string")]
    pub fraction_majority: Rat,
    #[serde(with = "rat_string")]
    pub fraction_split: Rat,
    pub n_pairs: u64,
}

impl CeilingSummary {
    /// `(unanimous, majority, split)` fractions as a tuple.
    pub fn fractions(&self) -> (Rat, Rat, Rat) {
        (
            self.fraction_unanimous,
            self.fraction_majority,
            self.fraction_split,
        )
    }
}

/// Summarize LOO and CAP ceilings over pair buckets.
pub fn ceilings(buckets: &[PairBucket]) -> Result<CeilingSummary> {
    if buckets.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot summarize zero pair buckets".into(),
        ));
    }
    let n = buckets.len() as i64;
    let count = |b: Bucket| buckets.iter().filter(|x| x.bucket == b).count() as i64;
    let f_u = Rat::new(count(Bucket::Unanimous), n);
    let f_m = Rat::new(count(Bucket::Majority), n);
    let f_s = Rat::new(count(Bucket::Split), n);
    let mean_loo = buckets.iter().map(|b| b.loo).sum::<Rat>() / Rat::new(n, 1);
    Ok(CeilingSummary {
        mean_loo,
        cap: f_u + f_m + f_s / Rat::new(2, 1),
        fraction_unanimous: f_u,
        fraction_majority: f_m,
        fraction_split: f_s,
        n_pairs: n as u64,
    })
}

/// CAP from pre-measured bucket fractions (float path for reporting).
pub fn cap_from_fractions(f_unanimous: f64, f_majority: f64, f_split: f64) -> f64 {
    f_unanimous + f_majority + 0.5 * f_split
}

/// An exportable training label for one item pair of one panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftLabel {
    pub criterion: String,
    pub prompt_id: String,
    pub item_a: String,
    pub item_b: String,
    /// Fraction of raters preferring `item_a`.
    #[serde(with = "rat_string")]
    pub win_rate: Rat,
    /// The pair's majority share, usable as a confidence weight.
    #[serde(with = "rat_string")]
    pub agreement_weight: Rat,
}

/// Agreement-weighted soft labels for every pair of a panel.
pub fn soft_labels(panel: &RankPanel) -> Vec<SoftLabel> {
    pair_tallies(panel)
        .iter()
        .map(|t| SoftLabel {
            criterion: panel.criterion.clone(),
            prompt_id: panel.prompt_id.clone(),
            item_a: t.item_a.clone(),
            item_b: t.item_b.clone(),
            win_rate: Rat::new(t.k as i64, t.r as i64),
            agreement_weight: p_max(t),
        })
        .collect()
}

/// Sanity count: a full export covers `prompts × C(p,2)` rows.
pub fn expected_label_rows(n_prompts: usize, p: usize) -> u64 {
    n_prompts as u64 * pairs_of(p) as u64
}
