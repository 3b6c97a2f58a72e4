//! Null distributions under the no-signal hypothesis: every rater ranks
//! independently and uniformly at random.
//!
//! Three statistics get nulls here:
//!
//! * pairwise Kendall tau — closed form from the Mahonian (inversion-count)
//!   numbers;
//! * per-panel mean pairwise tau — exact enumeration of all `(p!)^(R-1)`
//!   rank tuples (the first rater can be fixed to the identity because the
//!   statistic is invariant under relabeling items), or seeded Monte Carlo
//!   when that space exceeds the enumeration budget;
//! * majority share — a folded symmetric binomial over `R` votes;
//! * cycle presence in the majority tournament — exact enumeration or
//!   seeded Monte Carlo rate.
//!
//! Monte Carlo work is split into fixed-size chunks with one generator per
//! chunk, so estimates depend only on `(seed, sample count)`, not on the
//! number of worker threads.

use num::{BigInt, BigRational, BigUint, One};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mallows::{sample_panel, MallowsParams};
use crate::pmf::{McMeta, NullPmf, PmfMethod};
use crate::rank::{
    directions_have_cycle, pairs_of, tournament_directions, PairDirection, Ranking, TiePolicy,
};
use crate::rng::{chunk_rng, RNG_ALGORITHM};

/// Default cap on exhaustive enumeration: `(p!)^(R-1)` rank tuples.
pub const DEFAULT_ENUM_BUDGET: u64 = 10_000_000;

/// Monte Carlo iterations per generator chunk.
const MC_CHUNK: u64 = 4096;

/// Number of rank tuples an exact panel enumeration must visit, saturating.
pub fn enumeration_size(p: usize, r: usize) -> u128 {
    let mut fact: u128 = 1;
    for i in 2..=p as u128 {
        fact = fact.saturating_mul(i);
    }
    let mut total: u128 = 1;
    for _ in 1..r {
        total = total.saturating_mul(fact);
    }
    total
}

/// Counts of permutations of `p` items by inversion count `0..=C(p,2)`.
pub fn mahonian_counts(p: usize) -> Vec<BigUint> {
    let mut cur = vec![BigUint::one()];
    for i in 2..=p {
        // Convolve with the uniform kernel over {0, …, i-1}.
        let mut next = vec![BigUint::ZERO; cur.len() + i - 1];
        for (k, c) in cur.iter().enumerate() {
            for v in 0..i {
                next[k + v] += c;
            }
        }
        cur = next;
    }
    cur
}

/// Null PMF of Kendall tau between two independent uniform rankings of `p`
/// items. Support runs over `(C(p,2) - 2d) / C(p,2)` for inversion counts
/// `d`, with Mahonian weights.
pub fn tau_null(p: usize) -> Result<NullPmf> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!(
            "tau null needs at least 2 items, got {p}"
        )));
    }
    let c = pairs_of(p);
    let counts = mahonian_counts(p);
    let total: BigUint = counts.iter().sum();
    let denom = BigInt::from(total);
    let mut support = Vec::with_capacity(counts.len());
    let mut probs = Vec::with_capacity(counts.len());
    for d in (0..counts.len()).rev() {
        support.push(crate::rank::Rat::new(c - 2 * d as i64, c));
        probs.push(BigRational::new(
            BigInt::from(counts[d].clone()),
            denom.clone(),
        ));
    }
    NullPmf::new(support, probs, PmfMethod::ClosedForm, None)
}

/// Null PMF of the majority share `max(k, R-k)/R` when each of `R` raters
/// votes each way with probability 1/2.
pub fn pmax_null(r: usize) -> Result<NullPmf> {
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "majority-share null needs at least 2 raters, got {r}"
        )));
    }
    let two_r = BigInt::one() << r;
    let mut support = Vec::new();
    let mut probs = Vec::new();
    if r % 2 == 0 {
        support.push(crate::rank::Rat::new(1, 2));
        probs.push(BigRational::new(
            BigInt::from(binomial(r as u64, r as u64 / 2)),
            two_r.clone(),
        ));
    }
    for k in (r / 2 + 1)..=r {
        support.push(crate::rank::Rat::new(k as i64, r as i64));
        probs.push(BigRational::new(
            BigInt::from(2u32) * BigInt::from(binomial(r as u64, k as u64)),
            two_r.clone(),
        ));
    }
    NullPmf::new(support, probs, PmfMethod::ClosedForm, None)
}

fn binomial(n: u64, k: u64) -> BigUint {
    let mut out = BigUint::one();
    for i in 0..k.min(n - k) {
        out = out * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    out
}

fn validate_panel_shape(p: usize, r: usize) -> Result<()> {
    if p < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 items, got {p}"
        )));
    }
    if r < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 raters, got {r}"
        )));
    }
    Ok(())
}

/// Pair-preference bitmask of a ranking: bit `idx(i,j)` is set iff item `i`
/// is ranked above item `j`, pairs in `i < j` order. The tau numerator
/// between two rankings is then `C(p,2) - 2·popcount(a ^ b)`.
fn pref_mask(rk: &Ranking) -> u128 {
    let p = rk.item_count();
    let mut mask = 0u128;
    let mut idx = 0u32;
    for i in 0..p {
        for j in (i + 1)..p {
            if rk.prefers(i, j) {
                mask |= 1u128 << idx;
            }
            idx += 1;
        }
    }
    mask
}

/// All `p!` pair-preference masks, identity first (Heap's order).
fn perm_masks(p: usize) -> Vec<u128> {
    fn mask_of(order: &[usize]) -> u128 {
        let p = order.len();
        let mut pos = vec![0usize; p];
        for (i, &item) in order.iter().enumerate() {
            pos[item] = i;
        }
        let mut mask = 0u128;
        let mut idx = 0u32;
        for i in 0..p {
            for j in (i + 1)..p {
                if pos[i] < pos[j] {
                    mask |= 1u128 << idx;
                }
                idx += 1;
            }
        }
        mask
    }
    fn heap(k: usize, arr: &mut [usize], out: &mut Vec<u128>) {
        if k == 1 {
            out.push(mask_of(arr));
            return;
        }
        for i in 0..(k - 1) {
            heap(k - 1, arr, out);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
        heap(k - 1, arr, out);
    }
    let mut arr: Vec<usize> = (0..p).collect();
    let mut out = Vec::new();
    heap(p, &mut arr, &mut out);
    out
}

fn check_enum_budget(p: usize, r: usize, budget: u64) -> Result<()> {
    let required = enumeration_size(p, r);
    if required > budget as u128 {
        return Err(Error::EnumerationBudget {
            required,
            budget: budget as u128,
        });
    }
    if pairs_of(p) > 128 {
        return Err(Error::InvalidParameter(format!(
            "exact enumeration supports at most 16 items, got {p}"
        )));
    }
    Ok(())
}

/// Exact null PMF of the per-panel mean pairwise tau for `p` items and `r`
/// raters, by enumerating all `(p!)^(r-1)` tuples with the first rater fixed
/// to the identity. Errors if that exceeds `budget`.
pub fn t_null_exact(p: usize, r: usize, budget: u64) -> Result<NullPmf> {
    validate_panel_shape(p, r)?;
    check_enum_budget(p, r, budget)?;
    let masks = perm_masks(p);
    let n_pairs = pairs_of(p);
    let max_s = pairs_of(r) * n_pairs;
    let mut counts = vec![0u64; (2 * max_s + 1) as usize];
    let mut chosen = vec![masks[0]]; // identity: every i < j bit set
    rec_t(&masks, &mut chosen, r, n_pairs, 0, max_s, &mut counts);
    pmf_from_numerator_counts(&counts, max_s, PmfMethod::ExactEnumeration, None)
}

fn rec_t(
    masks: &[u128],
    chosen: &mut Vec<u128>,
    r: usize,
    n_pairs: i64,
    acc: i64,
    max_s: i64,
    counts: &mut [u64],
) {
    if chosen.len() == r {
        counts[(acc + max_s) as usize] += 1;
        return;
    }
    for &x in masks {
        let mut delta = 0i64;
        for &c in chosen.iter() {
            delta += n_pairs - 2 * (c ^ x).count_ones() as i64;
        }
        chosen.push(x);
        rec_t(masks, chosen, r, n_pairs, acc + delta, max_s, counts);
        chosen.pop();
    }
}

fn pmf_from_numerator_counts(
    counts: &[u64],
    max_s: i64,
    method: PmfMethod,
    mc_meta: Option<McMeta>,
) -> Result<NullPmf> {
    let support: Vec<crate::rank::Rat> = (0..counts.len())
        .map(|idx| crate::rank::Rat::new(idx as i64 - max_s, max_s))
        .collect();
    NullPmf::from_counts(support, counts, method, mc_meta)
}

/// Monte Carlo null PMF of the per-panel mean pairwise tau: `samples`
/// synthetic panels of `r` uniform rankings, probabilities as exact sample
/// fractions.
pub fn t_null_mc(p: usize, r: usize, samples: u64, seed: u64) -> Result<NullPmf> {
    validate_panel_shape(p, r)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least 1 sample".into()));
    }
    let n_pairs = pairs_of(p);
    let max_s = pairs_of(r) * n_pairs;
    let params = MallowsParams::uniform(p)?;
    let n_chunks = samples.div_ceil(MC_CHUNK);
    let hist_len = (2 * max_s + 1) as usize;
    let counts = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = chunk_rng(seed, ci);
            let len = MC_CHUNK.min(samples - ci * MC_CHUNK);
            let mut hist = vec![0u64; hist_len];
            for _ in 0..len {
                let panel = sample_panel(&params, r, &mut rng);
                hist[(panel_numerator_sum(&panel) + max_s) as usize] += 1;
            }
            hist
        })
        .reduce(
            || vec![0u64; hist_len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );
    pmf_from_numerator_counts(&counts, max_s, PmfMethod::MonteCarlo, Some(mc_meta(seed, samples)))
}

/// Monte Carlo provenance stamp with the chunking scheme spelled out.
fn mc_meta(seed: u64, samples: u64) -> McMeta {
    McMeta {
        seed,
        sample_count: samples,
        algorithm: format!("{RNG_ALGORITHM}/chunk={MC_CHUNK}"),
    }
}

/// Sum of tau numerators over all rater pairs of a panel.
fn panel_numerator_sum(rankings: &[Ranking]) -> i64 {
    let p = rankings[0].item_count();
    let n_pairs = pairs_of(p);
    if n_pairs <= 128 {
        let masks: Vec<u128> = rankings.iter().map(pref_mask).collect();
        let mut s = 0i64;
        for a in 0..masks.len() {
            for b in (a + 1)..masks.len() {
                s += n_pairs - 2 * (masks[a] ^ masks[b]).count_ones() as i64;
            }
        }
        s
    } else {
        let mut s = 0i64;
        for a in 0..rankings.len() {
            for b in (a + 1)..rankings.len() {
                s += crate::rank::kendall_tau_numerator(&rankings[a], &rankings[b])
                    .expect("same p");
            }
        }
        s
    }
}

/// Null PMF of the per-panel mean pairwise tau: exact when the enumeration
/// fits in `budget`, otherwise Monte Carlo with `mc_samples` draws.
pub fn t_null_auto(
    p: usize,
    r: usize,
    budget: u64,
    mc_samples: u64,
    seed: u64,
) -> Result<NullPmf> {
    if enumeration_size(p, r) <= budget as u128 && pairs_of(p) <= 128 {
        t_null_exact(p, r, budget)
    } else {
        t_null_mc(p, r, mc_samples, seed)
    }
}

/// Null rate of majority-tournament cycles, as a count over a sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleNull {
    /// Panels containing at least one cyclic item triple.
    pub cyclic: u64,
    /// Panels examined (tuples for exact enumeration, draws for Monte Carlo).
    pub samples: u64,
    pub method: PmfMethod,
    /// Seed, for the Monte Carlo method only.
    pub seed: Option<u64>,
}

impl CycleNull {
    /// Exact cycle rate.
    pub fn rate(&self) -> BigRational {
        BigRational::new(BigInt::from(self.cyclic), BigInt::from(self.samples))
    }

    pub fn rate_f64(&self) -> f64 {
        self.cyclic as f64 / self.samples as f64
    }

    /// Binomial standard error of the rate: `sqrt(rate·(1-rate)/samples)`.
    /// Zero for exact enumeration, which has no sampling error.
    pub fn stderr(&self) -> f64 {
        if self.method == PmfMethod::ExactEnumeration {
            return 0.0;
        }
        let r = self.rate_f64();
        (r * (1.0 - r) / self.samples as f64).sqrt()
    }
}

fn check_cycle_shape(p: usize, r: usize, policy: TiePolicy) -> Result<()> {
    validate_panel_shape(p, r)?;
    if policy == TiePolicy::Error && r % 2 == 0 {
        // An even panel ties some pair with positive probability, so the
        // strict policy cannot evaluate the null at all.
        return Err(Error::EvenRaterCount(r));
    }
    Ok(())
}

/// Exact probability that the majority tournament of `r` uniform rankings
/// over `p` items contains a cyclic triple, by enumeration with the first
/// rater fixed to the identity.
pub fn cycle_null_exact(p: usize, r: usize, policy: TiePolicy, budget: u64) -> Result<CycleNull> {
    check_cycle_shape(p, r, policy)?;
    check_enum_budget(p, r, budget)?;
    let masks = perm_masks(p);
    let n_pairs = pairs_of(p) as usize;
    let mut votes = vec![0u32; n_pairs];
    for (b, v) in votes.iter_mut().enumerate() {
        *v = ((masks[0] >> b) & 1) as u32; // identity's votes
    }
    let mut scratch = vec![PairDirection::Tie; n_pairs];
    let mut cyclic = 0u64;
    rec_cycle(&masks, 1, r, p, &mut votes, &mut scratch, &mut cyclic);
    Ok(CycleNull {
        cyclic,
        samples: u64::try_from(enumeration_size(p, r)).expect("within budget"),
        method: PmfMethod::ExactEnumeration,
        seed: None,
    })
}

fn rec_cycle(
    masks: &[u128],
    level: usize,
    r: usize,
    p: usize,
    votes: &mut [u32],
    scratch: &mut [PairDirection],
    cyclic: &mut u64,
) {
    if level == r {
        let r = r as u32;
        for (b, d) in scratch.iter_mut().enumerate() {
            let v = votes[b];
            *d = if 2 * v > r {
                PairDirection::FirstWins
            } else if 2 * v < r {
                PairDirection::SecondWins
            } else {
                PairDirection::Tie
            };
        }
        if directions_have_cycle(p, scratch) {
            *cyclic += 1;
        }
        return;
    }
    for &x in masks {
        for (b, v) in votes.iter_mut().enumerate() {
            *v += ((x >> b) & 1) as u32;
        }
        rec_cycle(masks, level + 1, r, p, votes, scratch, cyclic);
        for (b, v) in votes.iter_mut().enumerate() {
            *v -= ((x >> b) & 1) as u32;
        }
    }
}

/// Monte Carlo estimate of the null cycle rate: `samples` synthetic panels
/// of `r` uniform rankings each.
pub fn cycle_null_mc(
    p: usize,
    r: usize,
    policy: TiePolicy,
    samples: u64,
    seed: u64,
) -> Result<CycleNull> {
    check_cycle_shape(p, r, policy)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least 1 sample".into()));
    }
    let params = MallowsParams::uniform(p)?;
    let n_chunks = samples.div_ceil(MC_CHUNK);
    let cyclic = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = chunk_rng(seed, ci);
            let len = MC_CHUNK.min(samples - ci * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                let panel = sample_panel(&params, r, &mut rng);
                let dirs = tournament_directions(&panel);
                // Ties (even r only) make their triples non-cyclic under
                // both non-strict policies; the strict policy was rejected
                // up front.
                if directions_have_cycle(p, &dirs) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    Ok(CycleNull {
        cyclic,
        samples,
        method: PmfMethod::MonteCarlo,
        seed: Some(seed),
    })
}

/// Null cycle rate: exact when enumeration fits in `budget`, else Monte
/// Carlo with `mc_samples` draws.
pub fn cycle_null_auto(
    p: usize,
    r: usize,
    policy: TiePolicy,
    budget: u64,
    mc_samples: u64,
    seed: u64,
) -> Result<CycleNull> {
    if enumeration_size(p, r) <= budget as u128 && pairs_of(p) <= 128 {
        cycle_null_exact(p, r, policy, budget)
    } else {
        cycle_null_mc(p, r, policy, mc_samples, seed)
    }
}
