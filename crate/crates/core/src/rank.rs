//! Core permutation math over strict rankings: Kendall tau, per-panel mean
//! tau, pairwise vote tallies, majority share, and Condorcet cycle detection
//! on majority tournaments.
//!
//! Rankings are rank vectors: `ranks[i]` is the rank of item `i`, with 1 the
//! best. The order-vector form (item indices listed best first) is available
//! through [`Ranking::from_order`] / [`Ranking::to_order`]; the two encodings
//! are bijective and the rank vector is the stored one.
//!
//! All statistics are exact rationals so that histogram bins land exactly on
//! null supports; callers convert to floats only when reporting.

use num::rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational statistic value.
pub type Rat = Ratio<i64>;

/// `C(n, 2)` as i64.
pub fn pairs_of(n: usize) -> i64 {
    (n as i64) * (n as i64 - 1) / 2
}

/// A strict ranking of `p` items: a permutation of ranks `1..=p`, 1 = best.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ranking {
    ranks: Vec<u32>,
}

impl Ranking {
    /// Build from a rank vector (`ranks[i]` = rank of item `i`).
    pub fn from_ranks(ranks: Vec<u32>) -> Result<Self> {
        let p = ranks.len();
        if p < 2 {
            return Err(Error::InvalidRanking(format!(
                "need at least 2 items, got {p}"
            )));
        }
        let mut seen = vec![false; p];
        for &r in &ranks {
            if r == 0 || r as usize > p {
                return Err(Error::InvalidRanking(format!(
                    "rank {r} outside 1..={p}"
                )));
            }
            if seen[r as usize - 1] {
                return Err(Error::InvalidRanking(format!("rank {r} repeated")));
            }
            seen[r as usize - 1] = true;
        }
        Ok(Ranking { ranks })
    }

    /// Build from an order vector: `order[pos]` is the item index at rank
    /// `pos + 1` (best first).
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let p = order.len();
        let mut ranks = vec![0u32; p];
        for (pos, &item) in order.iter().enumerate() {
            if item >= p {
                return Err(Error::InvalidRanking(format!(
                    "item index {item} outside 0..{p}"
                )));
            }
            if ranks[item] != 0 {
                return Err(Error::InvalidRanking(format!("item {item} repeated")));
            }
            ranks[item] = pos as u32 + 1;
        }
        Self::from_ranks(ranks)
    }

    /// Item indices listed best first.
    pub fn to_order(&self) -> Vec<usize> {
        let mut order = vec![0usize; self.ranks.len()];
        for (item, &r) in self.ranks.iter().enumerate() {
            order[r as usize - 1] = item;
        }
        order
    }

    pub fn item_count(&self) -> usize {
        self.ranks.len()
    }

    /// Rank of item `i` (1 = best).
    pub fn rank_of(&self, item: usize) -> u32 {
        self.ranks[item]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    /// The identity ranking (item 0 best, item p-1 worst).
    pub fn identity(p: usize) -> Result<Self> {
        Self::from_ranks((1..=p as u32).collect())
    }

    /// True if this ranking places item `a` above (better than) item `b`.
    pub fn prefers(&self, a: usize, b: usize) -> bool {
        self.ranks[a] < self.ranks[b]
    }
}

/// One prompt's rankings: `R` raters over the same `p` items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPanel {
    pub prompt_id: String,
    pub criterion: String,
    pub raters: Vec<String>,
    pub item_ids: Vec<String>,
    pub rankings: Vec<Ranking>,
}

impl RankPanel {
    pub fn new(
        prompt_id: impl Into<String>,
        criterion: impl Into<String>,
        raters: Vec<String>,
        item_ids: Vec<String>,
        rankings: Vec<Ranking>,
    ) -> Result<Self> {
        let panel = RankPanel {
            prompt_id: prompt_id.into(),
            criterion: criterion.into(),
            raters,
            item_ids,
            rankings,
        };
        panel.validate()?;
        Ok(panel)
    }

    fn validate(&self) -> Result<()> {
        let p = self.item_ids.len();
        let r = self.raters.len();
        if r < 2 {
            return Err(Error::InvalidPanel(format!(
                "prompt {}: need at least 2 raters, got {r}",
                self.prompt_id
            )));
        }
        if self.rankings.len() != r {
            return Err(Error::InvalidPanel(format!(
                "prompt {}: {r} raters but {} rankings",
                self.prompt_id,
                self.rankings.len()
            )));
        }
        for rk in &self.rankings {
            if rk.item_count() != p {
                return Err(Error::InvalidPanel(format!(
                    "prompt {}: ranking over {} items, panel has {p}",
                    self.prompt_id,
                    rk.item_count()
                )));
            }
        }
        let mut sorted_raters = self.raters.clone();
        sorted_raters.sort();
        sorted_raters.dedup();
        if sorted_raters.len() != r {
            return Err(Error::InvalidPanel(format!(
                "prompt {}: duplicate rater ids",
                self.prompt_id
            )));
        }
        let mut sorted_items = self.item_ids.clone();
        sorted_items.sort();
        sorted_items.dedup();
        if sorted_items.len() != p {
            return Err(Error::InvalidPanel(format!(
                "prompt {}: duplicate item ids",
                self.prompt_id
            )));
        }
        Ok(())
    }

    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    pub fn rater_count(&self) -> usize {
        self.raters.len()
    }
}

/// Pairwise vote tally for one unordered item pair, canonically ordered by
/// position in the panel's `item_ids`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTally {
    pub item_a: String,
    pub item_b: String,
    /// Raters placing `item_a` above `item_b`.
    pub k: u32,
    /// Total raters.
    pub r: u32,
}

impl PairTally {
    /// Majority share: `max(k/R, 1 - k/R)`, in `[1/2, 1]`.
    pub fn p_max(&self) -> Rat {
        p_max(self)
    }
}

/// Kendall tau between two strict rankings: (concordant - discordant) / C(p,2).
pub fn kendall_tau(a: &Ranking, b: &Ranking) -> Result<Rat> {
    let num = kendall_tau_numerator(a, b)?;
    Ok(Rat::new(num, pairs_of(a.item_count())))
}

/// Concordant-minus-discordant count; the tau numerator over denominator C(p,2).
pub fn kendall_tau_numerator(a: &Ranking, b: &Ranking) -> Result<i64> {
    let p = a.item_count();
    if b.item_count() != p {
        return Err(Error::ShapeMismatch {
            left: p,
            right: b.item_count(),
        });
    }
    let mut num = 0i64;
    for i in 0..p {
        for j in (i + 1)..p {
            let da = a.ranks[i] as i64 - a.ranks[j] as i64;
            let db = b.ranks[i] as i64 - b.ranks[j] as i64;
            num += if da * db > 0 { 1 } else { -1 };
        }
    }
    Ok(num)
}

/// Per-panel agreement: the mean Kendall tau over all C(R,2) rater pairs.
pub fn mean_pairwise_tau(panel: &RankPanel) -> Rat {
    mean_tau_of(&panel.rankings)
}

/// Mean pairwise tau over an arbitrary slice of same-length rankings.
pub fn mean_tau_of(rankings: &[Ranking]) -> Rat {
    let r = rankings.len();
    let p = rankings[0].item_count();
    let mut num = 0i64;
    for s in 0..r {
        for t in (s + 1)..r {
            // Shapes validated at panel construction.
            num += kendall_tau_numerator(&rankings[s], &rankings[t]).expect("same p");
        }
    }
    Rat::new(num, pairs_of(r) * pairs_of(p))
}

/// One tally per unordered item pair, C(p,2) total, pairs ordered by position
/// in `item_ids`.
pub fn pair_tallies(panel: &RankPanel) -> Vec<PairTally> {
    let p = panel.item_count();
    let r = panel.rater_count() as u32;
    let mut tallies = Vec::with_capacity(pairs_of(p) as usize);
    for i in 0..p {
        for j in (i + 1)..p {
            let k = panel
                .rankings
                .iter()
                .filter(|rk| rk.prefers(i, j))
                .count() as u32;
            tallies.push(PairTally {
                item_a: panel.item_ids[i].clone(),
                item_b: panel.item_ids[j].clone(),
                k,
                r,
            });
        }
    }
    tallies
}

/// Majority share for one pair: `max(k/R, 1 - k/R)`.
pub fn p_max(tally: &PairTally) -> Rat {
    let k = tally.k as i64;
    let r = tally.r as i64;
    Rat::new(k.max(r - k), r)
}

/// Direction of the majority on one unordered pair `(a, b)` with `a < b` in
/// panel item order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairDirection {
    /// The lower-indexed item wins the majority.
    FirstWins,
    /// The higher-indexed item wins the majority.
    SecondWins,
    /// Exactly R/2 votes each (possible only for even R).
    Tie,
}

/// Majority pairwise preferences over all unordered item pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MajorityTournament {
    pub item_ids: Vec<String>,
    /// One entry per unordered pair, in the order produced by iterating
    /// `i < j` over item indices.
    pub directions: Vec<PairDirection>,
}

/// What cycle detection does with majority ties (even R only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Refuse to evaluate a tournament containing ties.
    #[default]
    Error,
    /// Skip any triple touching a tied pair.
    ExcludeTriple,
    /// A triple touching a tied pair counts as acyclic.
    CountAsNoCycle,
}

impl MajorityTournament {
    pub fn item_count(&self) -> usize {
        self.item_ids.len()
    }

    pub fn has_ties(&self) -> bool {
        self.directions.contains(&PairDirection::Tie)
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        // index of (i, j) with i < j in row-major upper-triangle order
        debug_assert!(i < j);
        let p = self.item_count();
        i * p - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Majority direction as "does item `i` beat item `j`"; `None` on a tie.
    pub fn beats(&self, i: usize, j: usize) -> Option<bool> {
        let (lo, hi, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        match self.directions[self.pair_index(lo, hi)] {
            PairDirection::FirstWins => Some(!flip),
            PairDirection::SecondWins => Some(flip),
            PairDirection::Tie => None,
        }
    }
}

/// Build the majority tournament of a panel: a pair's direction goes to the
/// item preferred by more than R/2 raters, with an explicit tie marker when
/// the vote splits exactly (even R).
pub fn majority_tournament(panel: &RankPanel) -> MajorityTournament {
    MajorityTournament {
        item_ids: panel.item_ids.clone(),
        directions: tournament_directions(&panel.rankings),
    }
}

/// Majority directions straight from rankings; used by the Monte Carlo paths
/// that never materialize a panel.
pub fn tournament_directions(rankings: &[Ranking]) -> Vec<PairDirection> {
    let p = rankings[0].item_count();
    let r = rankings.len() as u32;
    let mut dirs = Vec::with_capacity(pairs_of(p) as usize);
    for i in 0..p {
        for j in (i + 1)..p {
            let k = rankings.iter().filter(|rk| rk.prefers(i, j)).count() as u32;
            dirs.push(if 2 * k > r {
                PairDirection::FirstWins
            } else if 2 * k < r {
                PairDirection::SecondWins
            } else {
                PairDirection::Tie
            });
        }
    }
    dirs
}

/// True iff some item triple is cyclic under the majority directions
/// (A beats B, B beats C, C beats A).
pub fn has_condorcet_cycle(t: &MajorityTournament, policy: TiePolicy) -> Result<bool> {
    if policy == TiePolicy::Error && t.has_ties() {
        return Err(Error::TournamentTies);
    }
    Ok(directions_have_cycle(t.item_count(), &t.directions))
}

/// Cycle check on raw pair directions; triples touching a tie never count as
/// cyclic (both non-error tie policies reduce to this for the boolean result).
pub(crate) fn directions_have_cycle(p: usize, dirs: &[PairDirection]) -> bool {
    let idx = |i: usize, j: usize| i * p - i * (i + 1) / 2 + (j - i - 1);
    let wins = |i: usize, j: usize| -> Option<bool> {
        match dirs[idx(i.min(j), i.max(j))] {
            PairDirection::FirstWins => Some(i < j),
            PairDirection::SecondWins => Some(i > j),
            PairDirection::Tie => None,
        }
    };
    for a in 0..p {
        for b in (a + 1)..p {
            for c in (b + 1)..p {
                let (Some(ab), Some(bc), Some(ac)) = (wins(a, b), wins(b, c), wins(a, c))
                else {
                    continue;
                };
                // a>b>c>a or the reverse orientation
                if (ab && bc && !ac) || (!ab && !bc && ac) {
                    return true;
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Zero;

    pub(crate) fn panel_from_rank_rows(rows: &[&[u32]]) -> RankPanel {
        let p = rows[0].len();
        let rankings = rows
            .iter()
            .map(|r| Ranking::from_ranks(r.to_vec()).unwrap())
            .collect();
        RankPanel::new(
            "prompt",
            "crit",
            (0..rows.len()).map(|i| format!("rater{i}")).collect(),
            (0..p).map(|i| format!("item{i}")).collect(),
            rankings,
        )
        .unwrap()
    }

    #[test]
    fn ranking_rejects_non_permutations() {
        assert!(Ranking::from_ranks(vec![1, 1, 2, 3]).is_err());
        assert!(Ranking::from_ranks(vec![1, 2, 3, 5]).is_err());
        assert!(Ranking::from_ranks(vec![0, 1, 2, 3]).is_err());
        assert!(Ranking::from_ranks(vec![1]).is_err());
    }

    #[test]
    fn order_vector_bijection() {
        let r = Ranking::from_ranks(vec![3, 1, 4, 2]).unwrap();
        assert_eq!(r.to_order(), vec![1, 3, 0, 2]);
        assert_eq!(Ranking::from_order(&r.to_order()).unwrap(), r);
    }

    #[test]
    fn tau_identical_is_one() {
        let a = Ranking::from_ranks(vec![1, 2, 3, 4]).unwrap();
        assert_eq!(kendall_tau(&a, &a).unwrap(), Rat::new(1, 1));
    }

    #[test]
    fn tau_reversed_is_minus_one() {
        let a = Ranking::from_ranks(vec![1, 2, 3, 4]).unwrap();
        let b = Ranking::from_ranks(vec![4, 3, 2, 1]).unwrap();
        assert_eq!(kendall_tau(&a, &b).unwrap(), Rat::new(-1, 1));
    }

    #[test]
    fn tau_single_swap() {
        // (1,2,3,4) vs (2,1,3,4): only the {0,1} pair is discordant,
        // so C=5, D=1, tau = 4/6 = 2/3.
        let a = Ranking::from_ranks(vec![1, 2, 3, 4]).unwrap();
        let b = Ranking::from_ranks(vec![2, 1, 3, 4]).unwrap();
        assert_eq!(kendall_tau(&a, &b).unwrap(), Rat::new(2, 3));
    }

    #[test]
    fn tau_shape_mismatch() {
        let a = Ranking::from_ranks(vec![1, 2, 3, 4]).unwrap();
        let b = Ranking::from_ranks(vec![1, 2, 3]).unwrap();
        assert!(matches!(
            kendall_tau(&a, &b),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn mean_tau_all_identical() {
        let row: &[u32] = &[1, 2, 3, 4];
        let panel = panel_from_rank_rows(&[row; 5]);
        assert_eq!(mean_pairwise_tau(&panel), Rat::new(1, 1));
    }

    #[test]
    fn mean_tau_identity_vs_reverse_split() {
        // 3 identity + 2 reversed: 3 within-identity pairs at +1, 1
        // within-reverse pair at +1, 6 cross pairs at -1 -> (4-6)/10 = -1/5.
        let panel = panel_from_rank_rows(&[
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[4, 3, 2, 1],
            &[4, 3, 2, 1],
        ]);
        assert_eq!(mean_pairwise_tau(&panel), Rat::new(-1, 5));
    }

    #[test]
    fn mean_tau_matches_pairwise_mean() {
        let panel = panel_from_rank_rows(&[
            &[2, 1, 4, 3],
            &[1, 3, 2, 4],
            &[4, 2, 1, 3],
            &[1, 2, 3, 4],
            &[3, 4, 1, 2],
        ]);
        let mut total = Rat::zero();
        let mut n = 0;
        for s in 0..5 {
            for t in (s + 1)..5 {
                total += kendall_tau(&panel.rankings[s], &panel.rankings[t]).unwrap();
                n += 1;
            }
        }
        assert_eq!(mean_pairwise_tau(&panel), total / Rat::new(n, 1));
    }

    #[test]
    fn tallies_unanimous_panel() {
        let row: &[u32] = &[1, 2, 3, 4];
        let panel = panel_from_rank_rows(&[row; 5]);
        let tallies = pair_tallies(&panel);
        assert_eq!(tallies.len(), 6);
        assert!(tallies.iter().all(|t| t.k == 0 || t.k == t.r));
    }

    #[test]
    fn tallies_three_of_five() {
        let panel = panel_from_rank_rows(&[
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[2, 1, 3, 4],
            &[2, 1, 3, 4],
        ]);
        let t = &pair_tallies(&panel)[0];
        assert_eq!((t.item_a.as_str(), t.item_b.as_str()), ("item0", "item1"));
        assert_eq!(t.k, 3);
    }

    #[test]
    fn tallies_conserve_votes() {
        let panel = panel_from_rank_rows(&[
            &[2, 1, 4, 3],
            &[1, 3, 2, 4],
            &[4, 2, 1, 3],
            &[1, 2, 3, 4],
            &[3, 4, 1, 2],
        ]);
        let total: u32 = pair_tallies(&panel).iter().map(|t| t.k + (t.r - t.k)).sum();
        assert_eq!(total, 5 * 6);
    }

    #[test]
    fn p_max_values() {
        let t = |k, r| PairTally {
            item_a: "a".into(),
            item_b: "b".into(),
            k,
            r,
        };
        assert_eq!(p_max(&t(3, 5)), Rat::new(3, 5));
        assert_eq!(p_max(&t(0, 5)), Rat::new(1, 1));
        assert_eq!(p_max(&t(2, 4)), Rat::new(1, 2));
    }

    #[test]
    fn tournament_transitive_no_cycle() {
        let row: &[u32] = &[1, 2, 3, 4];
        let panel = panel_from_rank_rows(&[row; 5]);
        let t = majority_tournament(&panel);
        assert!(!has_condorcet_cycle(&t, TiePolicy::Error).unwrap());
    }

    #[test]
    fn tournament_majority_directions() {
        let panel = panel_from_rank_rows(&[
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[1, 2, 3, 4],
            &[2, 1, 3, 4],
            &[2, 1, 3, 4],
        ]);
        let t = majority_tournament(&panel);
        assert_eq!(t.beats(0, 1), Some(true));
        assert_eq!(t.beats(1, 0), Some(false));
    }

    #[test]
    fn tournament_even_r_tie_marker() {
        let panel = panel_from_rank_rows(&[&[1, 2, 3, 4], &[2, 1, 3, 4]]);
        let t = majority_tournament(&panel);
        assert_eq!(t.beats(0, 1), None);
        assert!(t.has_ties());
        assert!(matches!(
            has_condorcet_cycle(&t, TiePolicy::Error),
            Err(Error::TournamentTies)
        ));
        assert!(!has_condorcet_cycle(&t, TiePolicy::ExcludeTriple).unwrap());
        assert!(!has_condorcet_cycle(&t, TiePolicy::CountAsNoCycle).unwrap());
    }

    #[test]
    fn cycle_detected() {
        // Majority: 0>1, 1>2, 2>0; item 3 dominated by all.
        // Rater rows chosen so each pair of {0,1,2} splits 2-1 cyclically.
        let panel = panel_from_rank_rows(&[&[1, 2, 3, 4], &[3, 1, 2, 4], &[2, 3, 1, 4]]);
        let t = majority_tournament(&panel);
        assert_eq!(t.beats(0, 1), Some(true));
        assert_eq!(t.beats(1, 2), Some(true));
        assert_eq!(t.beats(2, 0), Some(true));
        assert!(has_condorcet_cycle(&t, TiePolicy::Error).unwrap());
    }

    /// Exhaustive p=4: the cycle test agrees with "not a total order" on all
    /// 2^6 tie-free tournaments.
    #[test]
    fn cycle_equals_not_total_order_exhaustive() {
        for bits in 0u32..64 {
            let mut dirs = Vec::with_capacity(6);
            for b in 0..6 {
                dirs.push(if bits & (1 << b) != 0 {
                    PairDirection::FirstWins
                } else {
                    PairDirection::SecondWins
                });
            }
            let t = MajorityTournament {
                item_ids: (0..4).map(|i| format!("i{i}")).collect(),
                directions: dirs,
            };
            // A tournament is a total order iff its score sequence (win
            // counts) is a permutation of {0,1,2,3}.
            let mut wins = [0usize; 4];
            for i in 0..4 {
                for j in 0..4 {
                    if i != j && t.beats(i, j) == Some(true) {
                        wins[i] += 1;
                    }
                }
            }
            let mut sorted = wins;
            sorted.sort_unstable();
            let is_total_order = sorted == [0, 1, 2, 3];
            let cyclic = has_condorcet_cycle(&t, TiePolicy::Error).unwrap();
            assert_eq!(cyclic, !is_total_order, "bits={bits:06b} wins={wins:?}");
        }
    }

    #[test]
    fn p2_has_no_triples() {
        let panel = panel_from_rank_rows(&[&[1, 2], &[1, 2], &[2, 1]]);
        let t = majority_tournament(&panel);
        assert!(!has_condorcet_cycle(&t, TiePolicy::Error).unwrap());
    }
}
