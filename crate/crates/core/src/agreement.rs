//! Inter-rater structure: pairwise rank-correlation matrices between
//! raters, outlier-pair identification, and chance-corrected agreement on
//! ordinal severity flags.
//!
//! The flag pipeline is deliberately tolerant of missing entries — real
//! annotation grids are sparse — and uses the standard coincidence-matrix
//! form of Krippendorff's α, which weighs each unit's pairable values by
//! `1/(m−1)` so units with more ratings do not dominate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::{kendall_tau, RankPanel, Rat};

/// Pairwise mean rank-correlation between raters over one criterion's
/// prompts. Symmetric; the diagonal is undefined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaterAgreementMatrix {
    pub raters: Vec<String>,
    /// `entries[r][s]` = mean over prompts of τ between rater r and rater
    /// s; `None` on the diagonal.
    pub entries: Vec<Vec<Option<Rat>>>,
    /// Mean of each rater's off-diagonal row.
    pub per_rater_mean: Vec<Rat>,
    /// Index pair with the lowest mean τ (most-disagreeing pair).
    pub min_pair: (usize, usize),
    /// Index pair with the highest mean τ.
    pub max_pair: (usize, usize),
}

impl RaterAgreementMatrix {
    pub fn min_pair_ids(&self) -> (&str, &str) {
        (&self.raters[self.min_pair.0], &self.raters[self.min_pair.1])
    }

    pub fn max_pair_ids(&self) -> (&str, &str) {
        (&self.raters[self.max_pair.0], &self.raters[self.max_pair.1])
    }
}

/// Mean pairwise τ between every two raters across a criterion's panels.
///
/// All panels must share one rater set; rankings are matched by rater id,
/// so panels may list raters in different orders.
pub fn rater_matrix(panels: &[RankPanel]) -> Result<RaterAgreementMatrix> {
    let Some(first) = panels.first() else {
        return Err(Error::InvalidParameter(
            "rater matrix needs at least one panel".into(),
        ));
    };
    let raters = first.raters.clone();
    let r = raters.len();
    let mut sums = vec![vec![Rat::new(0, 1); r]; r];
    for panel in panels {
        let mut order = Vec::with_capacity(r);
        for id in &raters {
            match panel.raters.iter().position(|x| x == id) {
                Some(pos) => order.push(pos),
                None => {
                    return Err(Error::RaterSetMismatch(format!(
                        "prompt {} lacks rater {id}",
                        panel.prompt_id
                    )))
                }
            }
        }
        if panel.raters.len() != r {
            return Err(Error::RaterSetMismatch(format!(
                "prompt {} has {} raters, expected {r}",
                panel.prompt_id,
                panel.raters.len()
            )));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                let tau = kendall_tau(&panel.rankings[order[i]], &panel.rankings[order[j]])?;
                sums[i][j] += tau;
                sums[j][i] += tau;
            }
        }
    }
    let n = Rat::new(panels.len() as i64, 1);
    let entries: Vec<Vec<Option<Rat>>> = (0..r)
        .map(|i| {
            (0..r)
                .map(|j| (i != j).then(|| sums[i][j] / n))
                .collect()
        })
        .collect();
    let per_rater_mean: Vec<Rat> = (0..r)
        .map(|i| {
            entries[i].iter().flatten().copied().sum::<Rat>() / Rat::new(r as i64 - 1, 1)
        })
        .collect();
    let mut min_pair = (0, 1);
    let mut max_pair = (0, 1);
    for i in 0..r {
        for j in (i + 1)..r {
            let v = entries[i][j].expect("off-diagonal");
            if v < entries[min_pair.0][min_pair.1].expect("off-diagonal") {
                min_pair = (i, j);
            }
            if v > entries[max_pair.0][max_pair.1].expect("off-diagonal") {
                max_pair = (i, j);
            }
        }
    }
    Ok(RaterAgreementMatrix {
        raters,
        entries,
        per_rater_mean,
        min_pair,
        max_pair,
    })
}

/// One rater with a deviance-ordered display label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedRater {
    /// Display label: `A` = lowest mean agreement, then `B`, `C`, ...
    pub label: String,
    pub rater_id: String,
    #[serde(with = "crate::pmf::rat_string")]
    pub mean_tau: Rat,
}

/// Order raters by ascending overall mean τ (most deviant first) and
/// relabel them `A`, `B`, ... Ties keep the original rater order.
pub fn rank_raters(matrix: &RaterAgreementMatrix) -> Vec<RankedRater> {
    let mut idx: Vec<usize> = (0..matrix.raters.len()).collect();
    idx.sort_by_key(|&i| matrix.per_rater_mean[i]);
    idx.iter()
        .enumerate()
        .map(|(pos, &i)| RankedRater {
            label: display_label(pos),
            rater_id: matrix.raters[i].clone(),
            mean_tau: matrix.per_rater_mean[i],
        })
        .collect()
}

fn display_label(pos: usize) -> String {
    if pos < 26 {
        ((b'A' + pos as u8) as char).to_string()
    } else {
        format!("R{}", pos + 1)
    }
}

/// Severity flag levels for one annotation.
pub const FLAG_NONE: u8 = 0;
pub const FLAG_MINOR: u8 = 1;
pub const FLAG_MAJOR: u8 = 2;

/// One severity flag by one rater on one item of one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagRecord {
    pub prompt_id: String,
    pub rater_id: String,
    pub item_id: String,
    /// 0 = none, 1 = minor, 2 = major.
    pub flag: u8,
}

/// A sparse prompts × raters × items grid of severity flags; missing
/// entries are simply absent records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagMatrix {
    records: Vec<FlagRecord>,
}

impl FlagMatrix {
    pub fn new(records: Vec<FlagRecord>) -> Result<Self> {
        let mut seen: BTreeMap<(&str, &str, &str), ()> = BTreeMap::new();
        for rec in &records {
            if rec.flag > FLAG_MAJOR {
                return Err(Error::InvalidFlag(rec.flag));
            }
            let key = (
                rec.prompt_id.as_str(),
                rec.rater_id.as_str(),
                rec.item_id.as_str(),
            );
            if seen.insert(key, ()).is_some() {
                return Err(Error::DuplicateRating {
                    user: rec.rater_id.clone(),
                    item: format!("{}/{}", rec.prompt_id, rec.item_id),
                });
            }
        }
        Ok(FlagMatrix { records })
    }

    pub fn records(&self) -> &[FlagRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Values grouped by unit under the chosen unit definition, keyed
    /// deterministically.
    fn units(&self, unit: AlphaUnit) -> BTreeMap<(String, String), Vec<u8>> {
        let mut map: BTreeMap<(String, String), Vec<u8>> = BTreeMap::new();
        for rec in &self.records {
            let key = match unit {
                AlphaUnit::PromptItem => (rec.prompt_id.clone(), rec.item_id.clone()),
                AlphaUnit::Prompt => (rec.prompt_id.clone(), String::new()),
            };
            map.entry(key).or_default().push(rec.flag);
        }
        map
    }
}

/// Distance metric for chance-corrected agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaMetric {
    /// Squared cumulative-margin distance — respects category order.
    Ordinal,
    /// 0/1 mismatch distance.
    Nominal,
    /// Squared numeric-value distance.
    Interval,
}

/// What counts as one ratable unit when grouping flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaUnit {
    /// Each (prompt, item) cell is a unit (default).
    #[default]
    PromptItem,
    /// Each prompt is one unit pooling all its items.
    Prompt,
}

/// Krippendorff's α over a flag grid with the default (prompt, item) unit.
pub fn krippendorff_alpha(flags: &FlagMatrix, metric: AlphaMetric) -> Result<f64> {
    krippendorff_alpha_unit(flags, metric, AlphaUnit::default())
}

/// Krippendorff's α = 1 − D_o/D_e with an explicit unit definition.
///
/// Uses the coincidence-matrix formulation: within each unit holding `m ≥ 2`
/// values, every ordered value pair contributes weight `1/(m−1)`.
pub fn krippendorff_alpha_unit(
    flags: &FlagMatrix,
    metric: AlphaMetric,
    unit: AlphaUnit,
) -> Result<f64> {
    let units: Vec<Vec<u8>> = flags
        .units(unit)
        .into_values()
        .filter(|vals| vals.len() >= 2)
        .collect();
    if units.len() < 2 {
        return Err(Error::UndefinedStatistic(
            "agreement coefficient",
            format!(
                "need at least 2 units with at least 2 ratings each, found {}",
                units.len()
            ),
        ));
    }

    // Categories actually observed, in ascending flag order.
    let mut cats: Vec<u8> = units.iter().flatten().copied().collect();
    cats.sort_unstable();
    cats.dedup();
    let c = cats.len();
    let cat_idx = |v: u8| cats.iter().position(|&x| x == v).expect("observed");

    // Coincidence matrix.
    let mut o = vec![vec![0.0f64; c]; c];
    for vals in &units {
        let w = 1.0 / (vals.len() as f64 - 1.0);
        for (i, &a) in vals.iter().enumerate() {
            for (j, &b) in vals.iter().enumerate() {
                if i != j {
                    o[cat_idx(a)][cat_idx(b)] += w;
                }
            }
        }
    }
    let margins: Vec<f64> = (0..c).map(|i| o[i].iter().sum()).collect();
    let n: f64 = margins.iter().sum();

    let dist2 = |i: usize, j: usize| -> f64 {
        match metric {
            AlphaMetric::Nominal => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            AlphaMetric::Interval => {
                let d = cats[i] as f64 - cats[j] as f64;
                d * d
            }
            AlphaMetric::Ordinal => {
                let (lo, hi) = (i.min(j), i.max(j));
                let cum: f64 = (lo..=hi).map(|g| margins[g]).sum();
                let d = cum - (margins[lo] + margins[hi]) / 2.0;
                d * d
            }
        }
    };

    let mut observed = 0.0;
    let mut expected = 0.0;
    for i in 0..c {
        for j in 0..c {
            if i != j {
                observed += o[i][j] * dist2(i, j);
                expected += margins[i] * margins[j] * dist2(i, j);
            }
        }
    }
    if expected == 0.0 {
        return Err(Error::UndefinedStatistic(
            "agreement coefficient",
            "only one category observed, expected disagreement is zero".into(),
        ));
    }
    Ok(1.0 - (n - 1.0) * observed / expected)
}

/// How items divide raters, as fractions over all rated (prompt, item)
/// units. The four fractions sum to 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitProfile {
    /// Items where every flag agrees (includes single-rating items).
    #[serde(with = "crate::pmf::rat_string")]
    pub unanimous: Rat,
    /// Items split between none and minor only.
    #[serde(with = "crate::pmf::rat_string")]
    pub no_minor_only: Rat,
    /// Items split between minor and major only.
    #[serde(with = "crate::pmf::rat_string")]
    pub minor_major_only: Rat,
    /// Any other disagreement pattern (none–major, or all three levels).
    #[serde(with = "crate::pmf::rat_string")]
    pub other: Rat,
    pub n_items: u64,
}

/// Classify every rated (prompt, item) unit by its disagreement pattern.
pub fn split_profile(flags: &FlagMatrix) -> SplitProfile {
    let units = flags.units(AlphaUnit::PromptItem);
    let n = units.len() as i64;
    if n == 0 {
        let zero = Rat::new(0, 1);
        return SplitProfile {
            unanimous: zero,
            no_minor_only: zero,
            minor_major_only: zero,
            other: zero,
            n_items: 0,
        };
    }
    let mut counts = [0i64; 4]; // unanimous, no-minor, minor-major, other
    for vals in units.values() {
        let mut present = [false; 3];
        for &v in vals {
            present[v as usize] = true;
        }
        let bucket = match present {
            [_, false, false] | [false, _, false] | [false, false, _] => 0,
            [true, true, false] => 1,
            [false, true, true] => 2,
            _ => 3,
        };
        counts[bucket] += 1;
    }
    SplitProfile {
        unanimous: Rat::new(counts[0], n),
        no_minor_only: Rat::new(counts[1], n),
        minor_major_only: Rat::new(counts[2], n),
        other: Rat::new(counts[3], n),
        n_items: n as u64,
    }
}

/// One rater's share of major (=2) flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorRate {
    pub rater_id: String,
    #[serde(with = "crate::pmf::rat_string")]
    pub rate: Rat,
    pub n_flags: u64,
}

/// Per-rater major-flag rates, sorted by rater id.
pub fn major_rates(flags: &FlagMatrix) -> Vec<MajorRate> {
    let mut by_rater: BTreeMap<&str, (i64, i64)> = BTreeMap::new();
    for rec in flags.records() {
        let slot = by_rater.entry(&rec.rater_id).or_insert((0, 0));
        slot.1 += 1;
        if rec.flag == FLAG_MAJOR {
            slot.0 += 1;
        }
    }
    by_rater
        .into_iter()
        .map(|(id, (major, total))| MajorRate {
            rater_id: id.to_string(),
            rate: Rat::new(major, total),
            n_flags: total as u64,
        })
        .collect()
}
