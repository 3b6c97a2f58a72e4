//! Randomized invariant checks spanning the whole library: symmetries of the
//! concordance statistics, structural facts about the exact null
//! distributions, and consistency of the aggregation and agreement
//! procedures under relabeling, scaling, and input reordering.

use num::{BigRational, One, Zero};
use proptest::prelude::*;
use ranksignal::aggregate::{
    bt_fit, bucketize, ceilings, pairwise_to_ranking, soft_labels, PairwiseRecord, WinMatrix,
    DEFAULT_BT_EPSILON,
};
use ranksignal::agreement::{krippendorff_alpha, AlphaMetric, FlagMatrix, FlagRecord};
use ranksignal::judge::{midranks, spearman};
use ranksignal::mallows::MallowsParams;
use ranksignal::nulls::{mahonian_counts, pmax_null, t_null_exact, tau_null, DEFAULT_ENUM_BUDGET};
use ranksignal::rank::{
    has_condorcet_cycle, kendall_tau, kendall_tau_numerator, majority_tournament, mean_tau_of,
    pair_tallies, pairs_of, TiePolicy,
};
use ranksignal::stats::histogram_on_support;
use ranksignal::{Ranking, RankPanel, Rat};

// --- strategies ---------------------------------------------------------

/// A uniform-ish random permutation of `0..p`, built by sorting random keys
/// (index tie-break keeps it a valid permutation even on key collisions).
fn permutation(p: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(any::<u32>(), p).prop_map(|keys| {
        let mut perm: Vec<usize> = (0..keys.len()).collect();
        perm.sort_by_key(|&i| (keys[i], i));
        perm
    })
}

fn ranking(p: usize) -> impl Strategy<Value = Ranking> {
    permutation(p).prop_map(|order| Ranking::from_order(&order).unwrap())
}

fn ranking_pair() -> impl Strategy<Value = (Ranking, Ranking)> {
    (2usize..7).prop_flat_map(|p| (ranking(p), ranking(p)))
}

fn panel(p: usize, r: usize) -> impl Strategy<Value = RankPanel> {
    prop::collection::vec(ranking(p), r).prop_map(move |rankings| {
        RankPanel::new(
            "prompt-0",
            "criterion-0",
            (0..r).map(|i| format!("rater{i}")).collect(),
            (0..p).map(|i| format!("item{i}")).collect(),
            rankings,
        )
        .unwrap()
    })
}

fn sized_panel(ps: std::ops::Range<usize>, rs: std::ops::Range<usize>) -> BoxedStrategy<RankPanel> {
    (ps, rs).prop_flat_map(|(p, r)| panel(p, r)).boxed()
}

fn odd_panel() -> BoxedStrategy<RankPanel> {
    (2usize..6, prop_oneof![Just(3usize), Just(5usize)])
        .prop_flat_map(|(p, r)| panel(p, r))
        .boxed()
}

/// Rename item `i` to `sigma[i]` inside a ranking.
fn relabel(rk: &Ranking, sigma: &[usize]) -> Ranking {
    let mut ranks = vec![0u32; sigma.len()];
    for (i, &target) in sigma.iter().enumerate() {
        ranks[target] = rk.rank_of(i);
    }
    Ranking::from_ranks(ranks).unwrap()
}

/// Reverse a ranking: rank r becomes p + 1 − r.
fn reversed(rk: &Ranking) -> Ranking {
    let p = rk.item_count() as u32;
    Ranking::from_ranks(rk.ranks().iter().map(|&r| p + 1 - r).collect()).unwrap()
}

/// All orderings of `0..p`, for brute-force enumeration at small `p`.
fn all_orders(p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for tail in all_orders(p - 1) {
        for slot in 0..=tail.len() {
            let mut order = tail.clone();
            order.insert(slot, p - 1);
            out.push(order);
        }
    }
    out
}

// --- deterministic structural facts -------------------------------------

#[test]
fn mahonian_counts_are_palindromic_and_sum_to_factorial() {
    for p in 1..=8usize {
        let counts = mahonian_counts(p);
        assert_eq!(counts.len(), pairs_of(p) as usize + 1);
        let n = counts.len();
        for i in 0..n {
            assert_eq!(counts[i], counts[n - 1 - i], "p={p} index {i}");
        }
        let total: num::BigUint = counts.iter().sum();
        let factorial: num::BigUint = (1..=p as u64).map(num::BigUint::from).product();
        assert_eq!(total, factorial, "p={p}");
    }
}

#[test]
fn pairwise_tau_null_is_symmetric_about_zero() {
    for p in 2..=6usize {
        let null = tau_null(p).unwrap();
        let n = null.len();
        for i in 0..n {
            assert_eq!(null.support()[i], -null.support()[n - 1 - i], "p={p}");
            assert_eq!(null.probs()[i], null.probs()[n - 1 - i], "p={p}");
        }
        let total: BigRational = null.probs().iter().sum();
        assert!(total.is_one(), "p={p}");
        assert!(null.mean().is_zero(), "p={p}");
    }
}

#[test]
fn panel_mean_null_has_exact_zero_mean_at_small_shapes() {
    // The panel-mean statistic always has null mean zero, even for shapes
    // where its distribution is NOT symmetric (e.g. p=2, r=3: support
    // {-1/3, +1/3, +1} — the two-item panel mean is skewed).
    for (p, r) in [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (4, 2)] {
        let null = t_null_exact(p, r, DEFAULT_ENUM_BUDGET).unwrap();
        assert!(null.mean().is_zero(), "shape ({p},{r})");
        let total: BigRational = null.probs().iter().sum();
        assert!(total.is_one(), "shape ({p},{r})");
    }
}

#[test]
fn majority_share_null_lives_on_the_majority_half() {
    for r in [3usize, 5, 7, 9] {
        let null = pmax_null(r).unwrap();
        let half = Rat::new(1, 2);
        let one = Rat::new(1, 1);
        for w in null.support().windows(2) {
            assert!(w[0] < w[1], "support must be strictly ascending");
        }
        for &x in null.support() {
            assert!(x > half && x <= one, "r={r} value {x}");
        }
        let total: BigRational = null.probs().iter().sum();
        assert!(total.is_one(), "r={r}");
    }
}

// --- cheap randomized invariants ----------------------------------------

proptest! {
    #[test]
    fn tau_is_symmetric_bounded_and_parity_consistent((a, b) in ranking_pair()) {
        let t_ab = kendall_tau(&a, &b).unwrap();
        let t_ba = kendall_tau(&b, &a).unwrap();
        prop_assert_eq!(t_ab, t_ba);
        let one = Rat::new(1, 1);
        prop_assert!(t_ab >= -one && t_ab <= one);
        // C − D and C + D = C(p,2) have the same parity.
        let num = kendall_tau_numerator(&a, &b).unwrap();
        let pairs = pairs_of(a.item_count());
        prop_assert_eq!((num - pairs).rem_euclid(2), 0);
    }

    #[test]
    fn tau_is_invariant_under_common_relabeling(
        (a, b, sigma) in (2usize..7).prop_flat_map(|p| (ranking(p), ranking(p), permutation(p)))
    ) {
        let direct = kendall_tau(&a, &b).unwrap();
        let renamed = kendall_tau(&relabel(&a, &sigma), &relabel(&b, &sigma)).unwrap();
        prop_assert_eq!(direct, renamed);
    }

    #[test]
    fn tau_hits_its_extremes(a in (2usize..7).prop_flat_map(ranking)) {
        prop_assert_eq!(kendall_tau(&a, &a).unwrap(), Rat::new(1, 1));
        prop_assert_eq!(kendall_tau(&a, &reversed(&a)).unwrap(), Rat::new(-1, 1));
    }

    #[test]
    fn panel_mean_stays_within_bounds(panel in sized_panel(2..6, 2..6)) {
        let t = mean_tau_of(&panel.rankings);
        let one = Rat::new(1, 1);
        prop_assert!(t >= -one && t <= one);
    }

    #[test]
    fn unanimous_panel_scores_one(
        (rk, r) in (2usize..6, 2usize..6).prop_flat_map(|(p, r)| (ranking(p), Just(r)))
    ) {
        let copies: Vec<Ranking> = (0..r).map(|_| rk.clone()).collect();
        prop_assert_eq!(mean_tau_of(&copies), Rat::new(1, 1));
    }

    #[test]
    fn observed_statistics_land_on_the_exact_null_support(
        panels in (2usize..4, 2usize..4).prop_flat_map(|(p, r)| {
            prop::collection::vec(panel(p, r), 1..8)
        })
    ) {
        let p = panels[0].item_count();
        let r = panels[0].rater_count();
        // Every observable panel mean sits on the exact support, so the
        // histogram never drops a value.
        let t_null = t_null_exact(p, r, DEFAULT_ENUM_BUDGET).unwrap();
        let values: Vec<Rat> = panels.iter().map(|pl| mean_tau_of(&pl.rankings)).collect();
        let hist = histogram_on_support(&t_null, &values).unwrap();
        prop_assert_eq!(hist.iter().sum::<u64>(), panels.len() as u64);
        // Same for per-pair majority shares when a majority must exist.
        if r % 2 == 1 {
            let share_null = pmax_null(r).unwrap();
            let shares: Vec<Rat> = panels
                .iter()
                .flat_map(|pl| pair_tallies(pl).iter().map(|t| t.p_max()).collect::<Vec<_>>())
                .collect();
            let hist = histogram_on_support(&share_null, &shares).unwrap();
            prop_assert_eq!(
                hist.iter().sum::<u64>(),
                (panels.len() as u64) * pairs_of(p) as u64
            );
        }
    }

    #[test]
    fn odd_panels_always_have_a_decidable_cycle_check(panel in odd_panel()) {
        let t = majority_tournament(&panel);
        prop_assert!(!t.has_ties());
        prop_assert!(has_condorcet_cycle(&t, TiePolicy::Error).is_ok());
    }

    #[test]
    fn expected_counts_total_the_sample_size(n in 1u64..10_000) {
        let null = tau_null(4).unwrap();
        let total: f64 = null.expected_counts(n).iter().sum();
        prop_assert!((total - n as f64).abs() <= 1e-9 * n as f64 + 1e-9);
    }

    #[test]
    fn midranks_are_a_permutation_weighting(values in prop::collection::vec(-5i32..5, 1..12)) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let n = values.len() as f64;
        let total: f64 = midranks(&values).iter().sum();
        prop_assert!((total - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rank_correlation_is_bounded_with_probabilities(
        (x, y) in (3usize..9).prop_flat_map(|n| {
            (
                prop::collection::vec(-10i32..10, n),
                prop::collection::vec(-10i32..10, n),
            )
        })
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        prop_assume!(x.iter().any(|v| *v != x[0]));
        prop_assume!(y.iter().any(|v| *v != y[0]));
        let res = spearman(&x, &y).unwrap();
        prop_assert!(res.rho.abs() <= 1.0 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&res.p_value));
        let exact = res.exact_p.unwrap();
        prop_assert!(exact > 0.0 && exact <= 1.0);
        prop_assert!((0.0..=1.0).contains(&res.t_approx_p));
    }
}

// --- heavier randomized invariants (fewer cases) -------------------------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strength_fit_is_invariant_when_counts_and_smoothing_scale_together(
        (p, cells, scale) in (2usize..5).prop_flat_map(|p| {
            let n_pairs = pairs_of(p) as usize;
            (
                Just(p),
                prop::collection::vec((0u64..6, 0u64..6, any::<bool>()), n_pairs),
                2u64..5,
            )
        })
    ) {
        let items: Vec<String> = (0..p).map(|i| format!("m{i}")).collect();
        let mut base = WinMatrix::new(items.clone());
        let mut idx = 0;
        for i in 0..p {
            for j in (i + 1)..p {
                let (a, b, flip) = cells[idx];
                idx += 1;
                let (mut wa, wb) = if flip { (b, a) } else { (a, b) };
                if wa + wb == 0 {
                    wa = 1; // every pair needs at least one comparison
                }
                base.wins[i][j] = wa;
                base.wins[j][i] = wb;
            }
        }
        let mut scaled = base.clone();
        for row in &mut scaled.wins {
            for w in row.iter_mut() {
                *w *= scale;
            }
        }
        // Multiplying every count and the smoothing constant by the same
        // factor leaves the likelihood equations unchanged, so the fitted
        // strengths must agree to numerical precision.
        let fit_a = bt_fit(&base, DEFAULT_BT_EPSILON).unwrap();
        let fit_b = bt_fit(&scaled, DEFAULT_BT_EPSILON * scale as f64).unwrap();
        prop_assert!(fit_a.converged && fit_b.converged);
        for i in 0..p {
            let (x, y) = (fit_a.strengths[i], fit_b.strengths[i]);
            prop_assert!((x - y).abs() <= 1e-6 * x.max(y), "item {i}: {x} vs {y}");
        }
    }

    #[test]
    fn consistent_pairwise_records_round_trip_in_any_order(
        (rk, shuffle) in (2usize..6).prop_flat_map(|p| {
            let n_pairs = pairs_of(p) as usize;
            (ranking(p), permutation(n_pairs))
        })
    ) {
        let p = rk.item_count();
        let items: Vec<String> = (0..p).map(|i| format!("item{i}")).collect();
        let mut records = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                let winner = if rk.prefers(i, j) { &items[i] } else { &items[j] };
                records.push(PairwiseRecord {
                    criterion: "c".into(),
                    prompt_id: "q".into(),
                    rater_id: "r".into(),
                    item_a: items[i].clone(),
                    item_b: items[j].clone(),
                    winner: winner.clone(),
                });
            }
        }
        let shuffled: Vec<PairwiseRecord> =
            shuffle.iter().map(|&i| records[i].clone()).collect();
        let converted = pairwise_to_ranking(&shuffled, DEFAULT_BT_EPSILON).unwrap();
        prop_assert_eq!(&converted.items, &items);
        prop_assert_eq!(&converted.ranking, &rk);
        prop_assert!(!converted.tie_broken);
        prop_assert_eq!(converted.cyclic_triples, 0);
    }

    #[test]
    fn ceiling_fractions_partition_the_pairs(panel in odd_panel()) {
        let buckets = bucketize(&panel).unwrap();
        prop_assert_eq!(buckets.len() as i64, pairs_of(panel.item_count()));
        let half = Rat::new(1, 2);
        let one = Rat::new(1, 1);
        for b in &buckets {
            prop_assert!(b.loo > half && b.loo <= one);
            prop_assert_eq!(
                b.votes.0 + b.votes.1,
                panel.rater_count() as u32
            );
        }
        let summary = ceilings(&buckets).unwrap();
        let (fu, fm, fs) = summary.fractions();
        prop_assert_eq!(fu + fm + fs, one);
        // All-split panels sit exactly at the 1/2 floor.
        prop_assert!(summary.cap >= half && summary.cap <= one);
        prop_assert!(summary.mean_loo > half && summary.mean_loo <= one);
        // Labels mirror the same tallies: win rates and weights agree.
        let labels = soft_labels(&panel);
        prop_assert_eq!(labels.len(), buckets.len());
        for (label, bucket) in labels.iter().zip(&buckets) {
            let r = panel.rater_count() as i64;
            prop_assert_eq!(label.win_rate, Rat::new(bucket.votes.0 as i64, r));
            prop_assert_eq!(label.agreement_weight, bucket.loo);
        }
    }

    #[test]
    fn reliability_is_invariant_under_relabeling(
        flags in (2usize..4, 2usize..4, 1usize..3).prop_flat_map(|(r, np, ni)| {
            prop::collection::vec(0u8..3, r * np * ni).prop_map(move |vals| {
                let mut records = Vec::new();
                let mut k = 0;
                for rater in 0..r {
                    for prompt in 0..np {
                        for item in 0..ni {
                            records.push(FlagRecord {
                                prompt_id: format!("p{prompt}"),
                                rater_id: format!("u{rater}"),
                                item_id: format!("i{item}"),
                                flag: vals[k],
                            });
                            k += 1;
                        }
                    }
                }
                records
            })
        })
    ) {
        let matrix = FlagMatrix::new(flags.clone()).unwrap();
        // Rename raters and units; reliability must not move.
        let renamed: Vec<FlagRecord> = flags
            .iter()
            .map(|f| FlagRecord {
                prompt_id: format!("zz-{}", f.prompt_id),
                rater_id: format!("renamed-{}", f.rater_id),
                item_id: f.item_id.clone(),
                flag: f.flag,
            })
            .collect();
        let renamed_matrix = FlagMatrix::new(renamed).unwrap();
        for metric in [AlphaMetric::Ordinal, AlphaMetric::Nominal, AlphaMetric::Interval] {
            let a = krippendorff_alpha(&matrix, metric);
            let b = krippendorff_alpha(&renamed_matrix, metric);
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "undefinedness diverged: {x:?} vs {y:?}"),
            }
        }
    }

    #[test]
    fn model_probabilities_normalize(
        (p, theta) in (2usize..5, 0.0f64..2.0)
    ) {
        let params = MallowsParams::new(Ranking::identity(p).unwrap(), theta).unwrap();
        let total: f64 = all_orders(p)
            .iter()
            .map(|o| params.prob_of(&Ranking::from_order(o).unwrap()).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "total {total}");
    }

    #[test]
    fn exact_probabilities_survive_serialization(
        (p, r) in (2usize..4, 2usize..4)
    ) {
        let null = t_null_exact(p, r, DEFAULT_ENUM_BUDGET).unwrap();
        let json = serde_json::to_string(&null).unwrap();
        let back: ranksignal::pmf::NullPmf = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back.support(), null.support());
        prop_assert_eq!(back.probs(), null.probs());
        // The round trip preserves exact arithmetic, not an approximation.
        prop_assert_eq!(back.mean(), null.mean());
    }
}
