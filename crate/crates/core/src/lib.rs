//! Statistics for deciding whether multi-rater preference data carries
//! learnable signal.
//!
//! The question this crate answers: when several raters rank the same
//! items and agree only weakly, is the disagreement pure noise, or is
//! there a shared preference underneath? The tools here compare observed
//! agreement statistics against *exact* null distributions derived from
//! the hypothesis that every rater ranks uniformly at random, so small
//! effects are detectable without simulation error.
//!
//! The pieces:
//!
//! - [`rank`] — strict rankings, Kendall τ, per-panel agreement `T`,
//!   majority share `p_max`, and Condorcet-cycle detection, all in exact
//!   rational arithmetic.
//! - [`nulls`] — exact null distributions (Mahonian τ null, the `T` null
//!   by full enumeration, folded-binomial `p_max` null, cycle rates) with
//!   a seeded, worker-count-independent Monte Carlo fallback.
//! - [`mallows`] — a distance-decay ranking model for power studies and
//!   calibration: the null's natural alternative.
//! - [`stats`] — χ² goodness-of-fit with deterministic expected-count
//!   pooling, exact-style two-sided binomial tests, Bonferroni
//!   adjustment, and small numeric summaries.
//! - [`aggregate`] — Bradley–Terry collapsing of pairwise judgments into
//!   strict rankings, agreement buckets, and the LOO/CAP accuracy
//!   ceilings.
//! - [`agreement`] — rater–rater correlation matrices and Krippendorff's
//!   α over ordinal severity flags.
//! - [`anchors`] — subsampling external rating datasets into
//!   fixed-shape reference panels for context.
//! - [`judge`] — dual-order scoring of automated judges against the
//!   rater majority, with position-bias diagnostics.
//!
//! Determinism is a design requirement throughout: rationals wherever
//! values are exact by construction, explicit seeds and counted RNG
//! streams wherever sampling is unavoidable, and stable tie-breaking
//! everywhere order matters.

pub mod aggregate;
pub mod agreement;
pub mod anchors;
pub mod error;
pub mod judge;
pub mod mallows;
pub mod nulls;
pub mod pmf;
pub mod rank;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use rank::{Ranking, RankPanel, Rat};
