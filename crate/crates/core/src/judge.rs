//! Scoring pre-recorded automated-judge verdicts against a rater-majority
//! reference, with position-bias correction.
//!
//! Every pair is judged twice, once in each display order. A judge that
//! picks the same *content* in both orders is consistent and scores 1 or 0
//! against the majority; a judge that picks the same *position* (so the
//! content flips) is order-inconsistent and scores 0.5. Majority-tie pairs
//! are excluded from every accuracy denominator, so chance sits at 0.5.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::rank::{pair_tallies, RankPanel};
use crate::stats::population_std;

/// Which item was displayed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairOrder {
    /// `model_a` shown first.
    AB,
    /// `model_b` shown first.
    BA,
}

/// Which display slot the judge chose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictChoice {
    FirstPosition,
    SecondPosition,
}

/// Number of distinct question paraphrases.
pub const PARAPHRASE_COUNT: u8 = 8;

/// One recorded judge verdict for one displayed pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub judge_id: String,
    pub criterion: String,
    pub prompt_id: String,
    pub model_a: String,
    pub model_b: String,
    pub order: PairOrder,
    pub verdict: VerdictChoice,
    /// Question paraphrase index, 0..=7.
    pub paraphrase_id: u8,
}

impl VerdictRecord {
    pub fn validate(&self) -> Result<()> {
        if self.model_a == self.model_b {
            return Err(Error::InvalidParameter(format!(
                "verdict compares {} with itself",
                self.model_a
            )));
        }
        if self.paraphrase_id >= PARAPHRASE_COUNT {
            return Err(Error::InvalidParameter(format!(
                "paraphrase_id {} outside 0..{PARAPHRASE_COUNT}",
                self.paraphrase_id
            )));
        }
        Ok(())
    }

    /// Item id displayed first.
    pub fn leading_model(&self) -> &str {
        match self.order {
            PairOrder::AB => &self.model_a,
            PairOrder::BA => &self.model_b,
        }
    }

    /// Item id the judge actually chose (content, not position).
    pub fn chosen_content(&self) -> &str {
        let (lead, trail) = match self.order {
            PairOrder::AB => (&self.model_a, &self.model_b),
            PairOrder::BA => (&self.model_b, &self.model_a),
        };
        match self.verdict {
            VerdictChoice::FirstPosition => lead,
            VerdictChoice::SecondPosition => trail,
        }
    }
}

/// The rater-majority outcome for one item pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MajorityLabel {
    Winner(String),
    Tie,
}

/// Majority label row, as ingested or derived from panels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityRecord {
    pub criterion: String,
    pub prompt_id: String,
    pub item_a: String,
    pub item_b: String,
    pub label: MajorityLabel,
}

/// Derive majority labels for every pair of every panel (tie iff the vote
/// splits evenly, which requires even R).
pub fn majority_labels(panels: &[RankPanel]) -> Vec<MajorityRecord> {
    let mut out = Vec::new();
    for panel in panels {
        for tally in pair_tallies(panel) {
            let label = match (2 * tally.k).cmp(&tally.r) {
                std::cmp::Ordering::Greater => MajorityLabel::Winner(tally.item_a.clone()),
                std::cmp::Ordering::Less => MajorityLabel::Winner(tally.item_b.clone()),
                std::cmp::Ordering::Equal => MajorityLabel::Tie,
            };
            out.push(MajorityRecord {
                criterion: panel.criterion.clone(),
                prompt_id: panel.prompt_id.clone(),
                item_a: tally.item_a,
                item_b: tally.item_b,
                label,
            });
        }
    }
    out
}

type PairKey = (String, String, String, String);

/// Lookup of majority labels keyed by (criterion, prompt, canonical pair).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MajorityIndex {
    labels: BTreeMap<PairKey, MajorityLabel>,
}

fn canonical_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl MajorityIndex {
    pub fn from_records(records: Vec<MajorityRecord>) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for rec in records {
            let (lo, hi) = canonical_pair(&rec.item_a, &rec.item_b);
            let key = (rec.criterion, rec.prompt_id, lo, hi);
            if labels.insert(key.clone(), rec.label).is_some() {
                return Err(Error::DuplicatePair(
                    format!("{}/{}", key.0, key.1),
                    format!("{}~{}", key.2, key.3),
                ));
            }
        }
        Ok(MajorityIndex { labels })
    }

    pub fn get(&self, criterion: &str, prompt_id: &str, a: &str, b: &str) -> Option<&MajorityLabel> {
        let (lo, hi) = canonical_pair(a, b);
        self.labels
            .get(&(criterion.to_string(), prompt_id.to_string(), lo, hi))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// One pair judged in both display orders, reduced to what scoring needs.
#[derive(Debug, Clone, PartialEq, Eq)]
struct DualPair {
    criterion: String,
    prompt_id: String,
    lo: String,
    hi: String,
    paraphrase_id: u8,
    /// Same content chosen in both orders.
    consistent: bool,
    /// The chosen content when consistent.
    content: Option<String>,
}

/// Group verdicts into dual-order pairs. Errors when two records describe
/// the same display arrangement or when a pair lacks its flipped order.
fn dual_pairs(verdicts: &[VerdictRecord]) -> Result<(String, Vec<DualPair>)> {
    let Some(first) = verdicts.first() else {
        return Err(Error::InvalidParameter("no verdict records".into()));
    };
    let judge = first.judge_id.clone();
    // key → (choice when the canonical-lo item leads, choice when hi leads)
    let mut slots: BTreeMap<(String, String, String, String, u8), [Option<String>; 2]> =
        BTreeMap::new();
    for rec in verdicts {
        rec.validate()?;
        if rec.judge_id != judge {
            return Err(Error::InvalidParameter(format!(
                "verdicts mix judges {judge} and {}; score one judge at a time",
                rec.judge_id
            )));
        }
        let (lo, hi) = canonical_pair(&rec.model_a, &rec.model_b);
        let slot_idx = usize::from(rec.leading_model() != lo);
        let chosen = rec.chosen_content().to_string();
        let key = (
            rec.criterion.clone(),
            rec.prompt_id.clone(),
            lo,
            hi,
            rec.paraphrase_id,
        );
        let entry = slots.entry(key.clone()).or_default();
        if entry[slot_idx].is_some() {
            return Err(Error::DuplicateVerdict(format!(
                "{}/{}/{}~{}#{}",
                key.0, key.1, key.2, key.3, key.4
            )));
        }
        entry[slot_idx] = Some(chosen);
    }

    let mut incomplete = Vec::new();
    let mut pairs = Vec::new();
    for (key, entry) in slots {
        match entry {
            [Some(x), Some(y)] => {
                let consistent = x == y;
                pairs.push(DualPair {
                    criterion: key.0,
                    prompt_id: key.1,
                    lo: key.2,
                    hi: key.3,
                    paraphrase_id: key.4,
                    consistent,
                    content: consistent.then_some(x),
                });
            }
            _ => incomplete.push(format!("{}/{}/{}~{}#{}", key.0, key.1, key.2, key.3, key.4)),
        }
    }
    if !incomplete.is_empty() {
        return Err(Error::MissingVerdictOrder(incomplete.join(", ")));
    }
    Ok((judge, pairs))
}

/// Fraction of dual-order pairs whose verdict keeps the same *position*
/// when the display order flips (so the chosen content flips).
pub fn position_bias_rate(verdicts: &[VerdictRecord]) -> Result<f64> {
    let (_, pairs) = dual_pairs(verdicts)?;
    let locked = pairs.iter().filter(|p| !p.consistent).count();
    Ok(locked as f64 / pairs.len() as f64)
}

/// A dual pair with its majority label resolved and its S1 weight.
#[derive(Debug, Clone, PartialEq)]
struct EvaluatedPair {
    criterion: String,
    paraphrase_id: u8,
    consistent: bool,
    /// `None` for majority-tie pairs (excluded from denominators).
    weight: Option<f64>,
    /// Consistent non-tie pairs: did the content match the majority?
    agree: Option<bool>,
}

fn evaluate(
    verdicts: &[VerdictRecord],
    labels: &MajorityIndex,
) -> Result<(String, Vec<EvaluatedPair>)> {
    let (judge, pairs) = dual_pairs(verdicts)?;
    let mut out = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let label = labels
            .get(&pair.criterion, &pair.prompt_id, &pair.lo, &pair.hi)
            .ok_or_else(|| {
                Error::MissingMajorityLabel(format!(
                    "{}/{}/{}~{}",
                    pair.criterion, pair.prompt_id, pair.lo, pair.hi
                ))
            })?;
        let (weight, agree) = match label {
            MajorityLabel::Tie => (None, None),
            MajorityLabel::Winner(winner) => {
                if pair.consistent {
                    let agree = pair.content.as_deref() == Some(winner.as_str());
                    (Some(if agree { 1.0 } else { 0.0 }), Some(agree))
                } else {
                    (Some(0.5), None)
                }
            }
        };
        out.push(EvaluatedPair {
            criterion: pair.criterion,
            paraphrase_id: pair.paraphrase_id,
            consistent: pair.consistent,
            weight,
            agree,
        });
    }
    Ok((judge, out))
}

/// Position-bias-corrected judge score against the rater majority.
///
/// `n_pairs` counts the dual pairs that entered accuracy denominators;
/// majority-tie pairs are excluded and counted in `n_tie_excluded`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeScore {
    pub judge_id: String,
    /// Unweighted mean of per-criterion accuracies.
    pub macro_acc: f64,
    /// Pooled accuracy over all scored pairs (pair-count weighted).
    pub micro_acc: f64,
    pub per_criterion_acc: BTreeMap<String, f64>,
    pub position_bias_rate: f64,
    /// `None` when no order-consistent non-tie pair exists.
    pub conditional_acc: Option<f64>,
    pub paraphrase_sigma: f64,
    pub n_paraphrase_groups: usize,
    /// Set when only one paraphrase group was present (σ defaults to 0).
    pub single_paraphrase_warning: bool,
    pub n_pairs: u64,
    pub n_tie_excluded: u64,
}

/// Score one judge's dual-order verdicts: weight 1 for consistent verdicts
/// agreeing with the majority, 0 for consistent disagreement, 0.5 for
/// order-inconsistent verdicts.
pub fn s1_score(verdicts: &[VerdictRecord], labels: &MajorityIndex) -> Result<JudgeScore> {
    let (judge_id, pairs) = evaluate(verdicts, labels)?;

    let mut per_crit: BTreeMap<&str, (f64, u64)> = BTreeMap::new();
    let mut tie_excluded = 0u64;
    for pair in &pairs {
        match pair.weight {
            Some(w) => {
                let slot = per_crit.entry(&pair.criterion).or_insert((0.0, 0));
                slot.0 += w;
                slot.1 += 1;
            }
            None => tie_excluded += 1,
        }
    }
    if per_crit.is_empty() {
        return Err(Error::UndefinedStatistic(
            "judge accuracy",
            "every dual-order pair was excluded as a majority tie".into(),
        ));
    }
    let per_criterion_acc: BTreeMap<String, f64> = per_crit
        .iter()
        .map(|(c, (sum, n))| (c.to_string(), sum / *n as f64))
        .collect();
    let macro_acc =
        per_criterion_acc.values().sum::<f64>() / per_criterion_acc.len() as f64;
    let total: u64 = per_crit.values().map(|(_, n)| n).sum();
    let micro_acc = per_crit.values().map(|(sum, _)| sum).sum::<f64>() / total as f64;

    let locked = pairs.iter().filter(|p| !p.consistent).count();
    let position_bias = locked as f64 / pairs.len() as f64;

    let consistent_scored: Vec<&EvaluatedPair> =
        pairs.iter().filter(|p| p.agree.is_some()).collect();
    let conditional_acc = if consistent_scored.is_empty() {
        None
    } else {
        let hits = consistent_scored
            .iter()
            .filter(|p| p.agree == Some(true))
            .count();
        Some(hits as f64 / consistent_scored.len() as f64)
    };

    let sigma = sigma_over_paraphrases(&pairs);

    Ok(JudgeScore {
        judge_id,
        macro_acc,
        micro_acc,
        per_criterion_acc,
        position_bias_rate: position_bias,
        conditional_acc,
        paraphrase_sigma: sigma.sigma,
        n_paraphrase_groups: sigma.n_groups,
        single_paraphrase_warning: sigma.single_group_warning,
        n_pairs: total,
        n_tie_excluded: tie_excluded,
    })
}

/// Majority-agreement rate restricted to order-consistent, non-tie pairs.
pub fn conditional_accuracy(verdicts: &[VerdictRecord], labels: &MajorityIndex) -> Result<f64> {
    let (_, pairs) = evaluate(verdicts, labels)?;
    let scored: Vec<&EvaluatedPair> = pairs.iter().filter(|p| p.agree.is_some()).collect();
    if scored.is_empty() {
        return Err(Error::UndefinedStatistic(
            "conditional accuracy",
            "no order-consistent pair with a non-tie majority".into(),
        ));
    }
    let hits = scored.iter().filter(|p| p.agree == Some(true)).count();
    Ok(hits as f64 / scored.len() as f64)
}

/// Spread of accuracy across question paraphrases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParaphraseSigma {
    /// Population standard deviation of per-paraphrase accuracy,
    /// averaged over criteria.
    pub sigma: f64,
    /// Distinct paraphrase ids among scored pairs.
    pub n_groups: usize,
    /// One paraphrase only: σ is 0 by convention, flagged.
    pub single_group_warning: bool,
}

/// Per-criterion σ of per-paraphrase S1 accuracy, averaged over criteria.
pub fn paraphrase_sigma(
    verdicts: &[VerdictRecord],
    labels: &MajorityIndex,
) -> Result<ParaphraseSigma> {
    let (_, pairs) = evaluate(verdicts, labels)?;
    if pairs.iter().all(|p| p.weight.is_none()) {
        return Err(Error::UndefinedStatistic(
            "paraphrase sigma",
            "every dual-order pair was excluded as a majority tie".into(),
        ));
    }
    Ok(sigma_over_paraphrases(&pairs))
}

fn sigma_over_paraphrases(pairs: &[EvaluatedPair]) -> ParaphraseSigma {
    // (criterion, paraphrase) → (weight sum, count) over scored pairs.
    let mut groups: BTreeMap<(&str, u8), (f64, u64)> = BTreeMap::new();
    for pair in pairs {
        if let Some(w) = pair.weight {
            let slot = groups
                .entry((&pair.criterion, pair.paraphrase_id))
                .or_insert((0.0, 0));
            slot.0 += w;
            slot.1 += 1;
        }
    }
    let mut paraphrases: Vec<u8> = groups.keys().map(|&(_, p)| p).collect();
    paraphrases.sort_unstable();
    paraphrases.dedup();

    let mut by_criterion: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((crit, _), (sum, n)) in &groups {
        by_criterion.entry(crit).or_default().push(sum / *n as f64);
    }
    let sigmas: Vec<f64> = by_criterion
        .values()
        .map(|accs| population_std(accs).expect("nonempty group"))
        .collect();
    let sigma = if sigmas.is_empty() {
        0.0
    } else {
        sigmas.iter().sum::<f64>() / sigmas.len() as f64
    };
    ParaphraseSigma {
        sigma,
        n_groups: paraphrases.len(),
        single_group_warning: paraphrases.len() <= 1,
    }
}

/// Rank correlation with its significance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Preferred p-value: exact permutation when n ≤ 10, else the
    /// t-approximation.
    pub p_value: f64,
    /// Exact two-sided permutation p-value (n ≤ 10 only).
    pub exact_p: Option<f64>,
    /// Two-sided t-approximation p-value.
    pub t_approx_p: f64,
    pub n: usize,
}

/// Ranks with ties averaged (midranks), 1-based.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite"));
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Largest n for which the exact permutation p-value is computed.
pub const SPEARMAN_EXACT_MAX_N: usize = 10;

/// Spearman rank correlation (midranks on ties) with a two-sided p-value:
/// exact permutation distribution for n ≤ 10, t-approximation beyond.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            left: n,
            right: y.len(),
        });
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "rank correlation needs at least 3 pairs, got {n}"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "rank correlation inputs must be finite".into(),
        ));
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let rho = pearson(&rx, &ry)?;

    let t_approx_p = if 1.0 - rho * rho <= 1e-15 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid dof");
        2.0 * (1.0 - dist.cdf(t.abs()))
    };

    let exact_p = (n <= SPEARMAN_EXACT_MAX_N).then(|| exact_perm_p(&rx, &ry));
    Ok(SpearmanResult {
        rho,
        p_value: exact_p.unwrap_or(t_approx_p),
        exact_p,
        t_approx_p,
        n,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::UndefinedStatistic(
            "rank correlation",
            "an input sequence is constant".into(),
        ));
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Two-sided exact permutation p-value: the share of the n! permutations
/// of the y-ranks whose |ρ| reaches the observed |ρ|.
///
/// Rank values are dyadic rationals (k or k + 1/2), so the inner products
/// compared here are exact in f64 — equality at the threshold is decided
/// without tolerance games.
fn exact_perm_p(rx: &[f64], ry: &[f64]) -> f64 {
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    // |rho_perm| >= |rho_obs|  ⟺  |Σ rx·ry_perm − n·mx·my| >= |Σ rx·ry − n·mx·my|
    let center = rx.len() as f64 * mx * my;
    let dot = |perm: &[f64]| rx.iter().zip(perm).map(|(a, b)| a * b).sum::<f64>();
    let threshold = (dot(ry) - center).abs();

    let mut hits = 0u64;
    let mut total = 0u64;
    let mut perm = ry.to_vec();
    heap_permutations(perm.len(), &mut perm, &mut |p| {
        total += 1;
        if (dot(p) - center).abs() >= threshold {
            hits += 1;
        }
    });
    hits as f64 / total as f64
}

fn heap_permutations(k: usize, arr: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    if k <= 1 {
        visit(arr);
        return;
    }
    for i in 0..(k - 1) {
        heap_permutations(k - 1, arr, visit);
        if k % 2 == 0 {
            arr.swap(i, k - 1);
        } else {
            arr.swap(0, k - 1);
        }
    }
    heap_permutations(k - 1, arr, visit);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(
        crit: &str,
        prompt: &str,
        a: &str,
        b: &str,
        order: PairOrder,
        verdict: VerdictChoice,
        para: u8,
    ) -> VerdictRecord {
        VerdictRecord {
            judge_id: "judge-1".into(),
            criterion: crit.into(),
            prompt_id: prompt.into(),
            model_a: a.into(),
            model_b: b.into(),
            order,
            verdict,
            paraphrase_id: para,
        }
    }

    /// Both orders of one pair, specifying the *content* chosen each time.
    fn dual(
        crit: &str,
        prompt: &str,
        a: &str,
        b: &str,
        chosen_when_ab: &str,
        chosen_when_ba: &str,
        para: u8,
    ) -> [VerdictRecord; 2] {
        let pick = |order: PairOrder, content: &str| {
            let lead = match order {
                PairOrder::AB => a,
                PairOrder::BA => b,
            };
            let choice = if content == lead {
                VerdictChoice::FirstPosition
            } else {
                VerdictChoice::SecondPosition
            };
            verdict(crit, prompt, a, b, order, choice, para)
        };
        [
            pick(PairOrder::AB, chosen_when_ab),
            pick(PairOrder::BA, chosen_when_ba),
        ]
    }

    fn winner(crit: &str, prompt: &str, a: &str, b: &str, w: &str) -> MajorityRecord {
        MajorityRecord {
            criterion: crit.into(),
            prompt_id: prompt.into(),
            item_a: a.into(),
            item_b: b.into(),
            label: MajorityLabel::Winner(w.into()),
        }
    }

    #[test]
    fn s1_weights_one_zero_half() {
        let mut verdicts = Vec::new();
        // Consistent and agreeing with majority → 1.
        verdicts.extend(dual("c", "p1", "m1", "m2", "m1", "m1", 0));
        // Consistent but against the majority → 0.
        verdicts.extend(dual("c", "p2", "m1", "m2", "m2", "m2", 0));
        // Position-locked (content flips) → 0.5.
        verdicts.extend(dual("c", "p3", "m1", "m2", "m1", "m2", 0));
        let labels = MajorityIndex::from_records(vec![
            winner("c", "p1", "m1", "m2", "m1"),
            winner("c", "p2", "m1", "m2", "m1"),
            winner("c", "p3", "m1", "m2", "m1"),
        ])
        .unwrap();
        let score = s1_score(&verdicts, &labels).unwrap();
        assert_eq!(score.n_pairs, 3);
        assert_eq!(score.n_tie_excluded, 0);
        assert!((score.macro_acc - 0.5).abs() < 1e-15); // (1 + 0 + 0.5)/3
        assert!((score.micro_acc - 0.5).abs() < 1e-15);
        assert!((score.position_bias_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(score.conditional_acc, Some(0.5)); // 1 hit of 2 consistent
    }

    #[test]
    fn all_inconsistent_judge_scores_exactly_half() {
        let mut verdicts = Vec::new();
        let mut labels = Vec::new();
        for p in 0..7 {
            let prompt = format!("p{p}");
            // Judge always picks the first slot: content flips with order.
            verdicts.extend(dual("c", &prompt, "m1", "m2", "m1", "m2", 0));
            let w = if p % 2 == 0 { "m1" } else { "m2" };
            labels.push(winner("c", &prompt, "m1", "m2", w));
        }
        let index = MajorityIndex::from_records(labels).unwrap();
        let score = s1_score(&verdicts, &index).unwrap();
        assert_eq!(score.macro_acc, 0.5);
        assert_eq!(score.micro_acc, 0.5);
        assert_eq!(score.position_bias_rate, 1.0);
        assert_eq!(score.conditional_acc, None);
        assert!(conditional_accuracy(&verdicts, &index)
            .unwrap_err()
            .is_undefined_procedure());
    }

    #[test]
    fn macro_is_unweighted_over_criteria_micro_is_pooled() {
        let mut verdicts = Vec::new();
        // Criterion c1: 1 pair, weight 1.
        verdicts.extend(dual("c1", "p1", "m1", "m2", "m1", "m1", 0));
        // Criterion c2: 3 pairs, weights 0, 0, 0.
        for p in 0..3 {
            verdicts.extend(dual("c2", &format!("q{p}"), "m1", "m2", "m2", "m2", 0));
        }
        let mut labels = vec![winner("c1", "p1", "m1", "m2", "m1")];
        for p in 0..3 {
            labels.push(winner("c2", &format!("q{p}"), "m1", "m2", "m1"));
        }
        let score = s1_score(&verdicts, &MajorityIndex::from_records(labels).unwrap()).unwrap();
        assert!((score.macro_acc - 0.5).abs() < 1e-15); // (1 + 0)/2
        assert!((score.micro_acc - 0.25).abs() < 1e-15); // 1 of 4
        assert_eq!(score.per_criterion_acc["c1"], 1.0);
        assert_eq!(score.per_criterion_acc["c2"], 0.0);
    }

    #[test]
    fn majority_ties_leave_denominators() {
        let mut verdicts = Vec::new();
        verdicts.extend(dual("c", "p1", "m1", "m2", "m1", "m1", 0));
        verdicts.extend(dual("c", "p2", "m1", "m2", "m2", "m2", 0));
        let labels = MajorityIndex::from_records(vec![
            winner("c", "p1", "m1", "m2", "m1"),
            MajorityRecord {
                criterion: "c".into(),
                prompt_id: "p2".into(),
                item_a: "m1".into(),
                item_b: "m2".into(),
                label: MajorityLabel::Tie,
            },
        ])
        .unwrap();
        let score = s1_score(&verdicts, &labels).unwrap();
        assert_eq!(score.n_pairs, 1);
        assert_eq!(score.n_tie_excluded, 1);
        assert_eq!(score.macro_acc, 1.0);
        // All pairs tied → undefined.
        let only_tie = MajorityIndex::from_records(vec![
            MajorityRecord {
                criterion: "c".into(),
                prompt_id: "p1".into(),
                item_a: "m1".into(),
                item_b: "m2".into(),
                label: MajorityLabel::Tie,
            },
            MajorityRecord {
                criterion: "c".into(),
                prompt_id: "p2".into(),
                item_a: "m1".into(),
                item_b: "m2".into(),
                label: MajorityLabel::Tie,
            },
        ])
        .unwrap();
        assert!(s1_score(&verdicts, &only_tie)
            .unwrap_err()
            .is_undefined_procedure());
    }

    #[test]
    fn label_swap_symmetry() {
        let mut verdicts = Vec::new();
        verdicts.extend(dual("c", "p1", "m1", "m2", "m1", "m1", 0));
        verdicts.extend(dual("c", "p2", "m1", "m2", "m1", "m2", 1));
        verdicts.extend(dual("c", "p3", "m1", "m2", "m2", "m2", 2));
        let labels = MajorityIndex::from_records(vec![
            winner("c", "p1", "m1", "m2", "m1"),
            winner("c", "p2", "m1", "m2", "m2"),
            winner("c", "p3", "m1", "m2", "m2"),
        ])
        .unwrap();
        let base = s1_score(&verdicts, &labels).unwrap();

        // Swap (model_a, model_b) and flip the order field: the same
        // display event encoded the other way around.
        let swapped: Vec<VerdictRecord> = verdicts
            .iter()
            .map(|v| VerdictRecord {
                model_a: v.model_b.clone(),
                model_b: v.model_a.clone(),
                order: match v.order {
                    PairOrder::AB => PairOrder::BA,
                    PairOrder::BA => PairOrder::AB,
                },
                ..v.clone()
            })
            .collect();
        let swapped_score = s1_score(&swapped, &labels).unwrap();
        assert_eq!(base, swapped_score);
    }

    #[test]
    fn missing_and_duplicate_orders_are_errors() {
        let one_sided = vec![verdict(
            "c",
            "p1",
            "m1",
            "m2",
            PairOrder::AB,
            VerdictChoice::FirstPosition,
            0,
        )];
        let err = position_bias_rate(&one_sided).unwrap_err();
        assert!(matches!(&err, Error::MissingVerdictOrder(list) if list.contains("m1~m2")));

        let mut dup = Vec::new();
        dup.extend(dual("c", "p1", "m1", "m2", "m1", "m1", 0));
        // Same display arrangement again, encoded with swapped labels.
        dup.push(verdict(
            "c",
            "p1",
            "m2",
            "m1",
            PairOrder::BA,
            VerdictChoice::FirstPosition,
            0,
        ));
        assert!(matches!(
            position_bias_rate(&dup),
            Err(Error::DuplicateVerdict(_))
        ));
    }

    #[test]
    fn position_bias_ten_pair_fixture() {
        let mut verdicts = Vec::new();
        for p in 0..10 {
            let prompt = format!("p{p}");
            if p < 4 {
                // Position-locked.
                verdicts.extend(dual("c", &prompt, "m1", "m2", "m1", "m2", 0));
            } else {
                verdicts.extend(dual("c", &prompt, "m1", "m2", "m1", "m1", 0));
            }
        }
        assert!((position_bias_rate(&verdicts).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn always_first_vs_content_consistent() {
        let mut locked = Vec::new();
        let mut faithful = Vec::new();
        for p in 0..5 {
            let prompt = format!("p{p}");
            locked.extend(dual("c", &prompt, "m1", "m2", "m1", "m2", 0));
            faithful.extend(dual("c", &prompt, "m1", "m2", "m2", "m2", 0));
        }
        assert_eq!(position_bias_rate(&locked).unwrap(), 1.0);
        assert_eq!(position_bias_rate(&faithful).unwrap(), 0.0);
    }

    #[test]
    fn paraphrase_sigma_closed_forms() {
        // Two paraphrases with accuracies 0.4 and 0.6 → σ = 0.1.
        let mut verdicts = Vec::new();
        let mut labels = Vec::new();
        for (para, hits) in [(0u8, 2usize), (1, 3)] {
            for p in 0..5 {
                let prompt = format!("p{para}{p}");
                let chosen = if p < hits { "m1" } else { "m2" };
                verdicts.extend(dual("c", &prompt, "m1", "m2", chosen, chosen, para));
                labels.push(winner("c", &prompt, "m1", "m2", "m1"));
            }
        }
        let index = MajorityIndex::from_records(labels).unwrap();
        let sigma = paraphrase_sigma(&verdicts, &index).unwrap();
        assert_eq!(sigma.n_groups, 2);
        assert!(!sigma.single_group_warning);
        assert!((sigma.sigma - 0.1).abs() < 1e-12, "{}", sigma.sigma);

        // Identical accuracy per paraphrase → 0.
        let mut even = Vec::new();
        let mut even_labels = Vec::new();
        for para in 0..4u8 {
            let prompt = format!("q{para}");
            even.extend(dual("c", &prompt, "m1", "m2", "m1", "m1", para));
            even_labels.push(winner("c", &prompt, "m1", "m2", "m1"));
        }
        let sigma = paraphrase_sigma(&even, &MajorityIndex::from_records(even_labels).unwrap())
            .unwrap();
        assert_eq!(sigma.sigma, 0.0);
        assert_eq!(sigma.n_groups, 4);

        // Single paraphrase → 0 with a warning.
        let mut single = Vec::new();
        single.extend(dual("c", "p1", "m1", "m2", "m1", "m1", 3));
        single.extend(dual("c", "p2", "m1", "m2", "m2", "m2", 3));
        let single_labels = MajorityIndex::from_records(vec![
            winner("c", "p1", "m1", "m2", "m1"),
            winner("c", "p2", "m1", "m2", "m1"),
        ])
        .unwrap();
        let sigma = paraphrase_sigma(&single, &single_labels).unwrap();
        assert_eq!(sigma.sigma, 0.0);
        assert!(sigma.single_group_warning);
        let score = s1_score(&single, &single_labels).unwrap();
        assert!(score.single_paraphrase_warning);
    }

    #[test]
    fn eight_group_sigma_matches_direct_computation() {
        let accs = [0.5, 0.625, 0.75, 0.5, 0.375, 0.625, 0.5, 0.875];
        let mut verdicts = Vec::new();
        let mut labels = Vec::new();
        for (para, acc) in accs.iter().enumerate() {
            let hits = (acc * 8.0) as usize;
            for p in 0..8 {
                let prompt = format!("p{para}x{p}");
                let chosen = if p < hits { "m1" } else { "m2" };
                verdicts.extend(dual("c", &prompt, "m1", "m2", chosen, chosen, para as u8));
                labels.push(winner("c", &prompt, "m1", "m2", "m1"));
            }
        }
        let sigma = paraphrase_sigma(&verdicts, &MajorityIndex::from_records(labels).unwrap())
            .unwrap();
        let expect = population_std(&accs).unwrap();
        assert!((sigma.sigma - expect).abs() < 1e-12);
        assert_eq!(sigma.n_groups, 8);
    }

    #[test]
    fn majority_labels_from_panels() {
        use crate::rank::Ranking;
        let panel = RankPanel::new(
            "p1",
            "c",
            vec!["r1".into(), "r2".into(), "r3".into()],
            vec!["m1".into(), "m2".into(), "m3".into()],
            vec![
                Ranking::from_ranks(vec![1, 2, 3]).unwrap(),
                Ranking::from_ranks(vec![1, 2, 3]).unwrap(),
                Ranking::from_ranks(vec![2, 1, 3]).unwrap(),
            ],
        )
        .unwrap();
        let labels = majority_labels(&[panel]);
        assert_eq!(labels.len(), 3);
        assert_eq!(labels[0].label, MajorityLabel::Winner("m1".into()));
        let even = RankPanel::new(
            "p2",
            "c",
            vec!["r1".into(), "r2".into()],
            vec!["m1".into(), "m2".into()],
            vec![
                Ranking::from_ranks(vec![1, 2]).unwrap(),
                Ranking::from_ranks(vec![2, 1]).unwrap(),
            ],
        )
        .unwrap();
        let labels = majority_labels(&[even]);
        assert_eq!(labels[0].label, MajorityLabel::Tie);
    }

    #[test]
    fn verdict_validation() {
        let mut bad = verdict(
            "c",
            "p",
            "m1",
            "m1",
            PairOrder::AB,
            VerdictChoice::FirstPosition,
            0,
        );
        assert!(bad.validate().is_err());
        bad.model_b = "m2".into();
        bad.paraphrase_id = 8;
        assert!(bad.validate().is_err());
        bad.paraphrase_id = 7;
        assert!(bad.validate().is_ok());
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(
            midranks(&[1.0, 2.0, 2.0, 3.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        assert_eq!(midranks(&[5.0, 1.0, 3.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_monotone_and_reversed() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let up = spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap();
        assert_eq!(up.rho, 1.0);
        // Only identity and full reversal reach |rho| = 1 at n = 4.
        assert!((up.exact_p.unwrap() - 2.0 / 24.0).abs() < 1e-15);
        let down = spearman(&x, &[9.0, 7.0, 5.0, 3.0]).unwrap();
        assert_eq!(down.rho, -1.0);
        assert!((down.exact_p.unwrap() - 2.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn spearman_rejects_bad_inputs() {
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        let err = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(err.is_undefined_procedure());
        assert!(spearman(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spearman_exact_matches_brute_force_oracle() {
        // Independent oracle: enumerate index permutations recursively and
        // recompute rho definitionally for each.
        fn oracle(x: &[f64], y: &[f64]) -> f64 {
            let rx = midranks(x);
            let ry = midranks(y);
            let obs = pearson(&rx, &ry).unwrap().abs();
            let n = y.len();
            let mut indices: Vec<usize> = (0..n).collect();
            let mut hits = 0u64;
            let mut total = 0u64;
            permute_indices(&mut indices, 0, &mut |perm| {
                let permuted: Vec<f64> = perm.iter().map(|&i| ry[i]).collect();
                let r = pearson(&rx, &permuted).unwrap();
                total += 1;
                if r.abs() >= obs - 1e-12 {
                    hits += 1;
                }
            });
            hits as f64 / total as f64
        }
        fn permute_indices(arr: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
            if k == arr.len() {
                f(arr);
                return;
            }
            for i in k..arr.len() {
                arr.swap(k, i);
                permute_indices(arr, k + 1, f);
                arr.swap(k, i);
            }
        }

        let cases: [(&[f64], &[f64]); 3] = [
            (&[1.0, 4.0, 2.0, 3.0, 5.0], &[2.0, 3.0, 1.0, 5.0, 4.0]),
            (&[1.0, 2.0, 2.0, 4.0], &[4.0, 3.0, 2.0, 1.0]), // tied x values
            (&[3.0, 1.0, 2.0, 5.0, 4.0, 6.0], &[1.0, 2.0, 3.0, 4.0, 6.0, 5.0]),
        ];
        for (x, y) in cases {
            let got = spearman(x, y).unwrap();
            let expect = oracle(x, y);
            assert!(
                (got.exact_p.unwrap() - expect).abs() < 1e-12,
                "{:?} vs {expect}",
                got
            );
        }
    }

    #[test]
    fn spearman_reproduces_judge_table_fixture() {
        let position_bias = [0.775, 0.679, 0.463, 0.439, 0.868, 0.551];
        let conditional = [0.630, 0.613, 0.567, 0.546, 0.656, 0.550];
        let result = spearman(&position_bias, &conditional).unwrap();
        assert!((result.rho - 33.0 / 35.0).abs() < 1e-12); // ≈ +0.94
        // Exact permutation view: 12 of 720 permutations reach |rho|.
        assert!((result.exact_p.unwrap() - 1.0 / 60.0).abs() < 1e-12);
        // t-approximation lands on ≈ 0.005 (two-sided).
        assert!((result.t_approx_p - 0.0048).abs() < 3e-4, "{}", result.t_approx_p);
        assert_eq!((result.t_approx_p * 1000.0).round() / 1000.0, 0.005);
    }
}
