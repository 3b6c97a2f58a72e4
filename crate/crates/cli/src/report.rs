//! The signal-validation report: schema, verdict rules, and renderers.
//!
//! A report is one JSON document per run. Every statistic that is exact in
//! the library stays exact here ("11/16" strings next to float
//! conveniences), and the run's conventions — tie handling, test
//! directions, the RNG identifier — are embedded so a report can be
//! interpreted without the producing binary. Reports are byte-deterministic
//! for fixed inputs and seed except for the `metadata` block, which carries
//! the generation timestamp.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use ranksignal::nulls::CycleNull;
use ranksignal::pmf::{big_to_f64, NullPmf, PmfMethod};
use ranksignal::rng::RNG_ALGORITHM;
use ranksignal::stats::{AdjustedP, BinomResult, GofResult};
use ranksignal::Rat;

pub const SCHEMA_VERSION: u32 = 1;

/// An exact rational alongside its float approximation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatValue {
    pub exact: String,
    pub value: f64,
}

impl From<Rat> for RatValue {
    fn from(x: Rat) -> Self {
        RatValue {
            exact: x.to_string(),
            value: *x.numer() as f64 / *x.denom() as f64,
        }
    }
}

/// Top-level report document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignalReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub params: RunParams,
    /// Null distributions used, keyed by panel shape (`"p4r5"`).
    pub null_provenance: BTreeMap<String, ShapeNulls>,
    /// The conventions this run was computed under. Fixed per tool
    /// version; recorded so archived reports stay interpretable.
    pub conventions: Vec<String>,
    pub criteria: BTreeMap<String, CriterionReport>,
    /// Not covered by the determinism guarantee.
    pub metadata: Metadata,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunParams {
    pub alpha: f64,
    pub seed: u64,
    pub mc_samples: u64,
    pub enumeration_budget: u64,
    /// Bonferroni family: criteria × two goodness-of-fit tests.
    pub family_size: usize,
    pub tie_policy: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub generated_at: String,
}

/// Provenance of the nulls for one panel shape.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeNulls {
    pub items_per_prompt: usize,
    pub raters_per_prompt: usize,
    pub pairwise_tau: NullDescription,
    pub panel_mean: NullDescription,
    pub majority_share: NullDescription,
    pub cycle: CycleDescription,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullDescription {
    pub method: String,
    pub support_size: usize,
    /// Exact null mean, e.g. "11/16".
    pub mean: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc: Option<ranksignal::pmf::McMeta>,
}

impl NullDescription {
    pub fn of(pmf: &NullPmf) -> Self {
        NullDescription {
            method: method_name(pmf.method()),
            support_size: pmf.len(),
            mean: pmf.mean().to_string(),
            mc: pmf.mc_meta().cloned(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleDescription {
    pub method: String,
    pub rate_exact: String,
    pub rate: f64,
    pub samples: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CycleDescription {
    pub fn of(cycle: &CycleNull) -> Self {
        CycleDescription {
            method: method_name(cycle.method),
            rate_exact: cycle.rate().to_string(),
            rate: cycle.rate_f64(),
            samples: cycle.samples,
            seed: cycle.seed,
        }
    }
}

pub fn method_name(method: PmfMethod) -> String {
    serde_json::to_value(method)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .expect("method serializes to a string")
}

/// Everything measured and tested for one criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub n_prompts: usize,
    pub items_per_prompt: usize,
    pub raters_per_prompt: usize,
    /// Lower median of per-prompt mean pairwise τ.
    pub median_panel_mean: RatValue,
    pub mean_pairwise_tau: RatValue,
    pub mean_majority_share: RatValue,
    pub cycle_rate: RatValue,
    pub cycles_observed: u64,
    pub panel_mean_gof: GofReport,
    pub majority_share_gof: GofReport,
    pub cycle_test: CycleTestReport,
    pub verdict: Verdict,
}

/// A goodness-of-fit test with its Bonferroni adjustment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GofReport {
    #[serde(flatten)]
    pub gof: GofResult,
    pub adjusted: AdjustedP,
}

/// Cycle-prevalence test against the null rate. Unadjusted: it feeds the
/// factional warning, not the signal verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleTestReport {
    #[serde(flatten)]
    pub test: BinomResult,
    pub reject: bool,
    /// Observed rate strictly above the null rate.
    pub above_null: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// At least one adjusted goodness-of-fit test rejected uniformity.
    Signal,
    /// Nothing distinguishes the data from rater-independent uniformity.
    NoSignal,
    /// Cycles are significantly more common than chance: raters disagree
    /// in a structured, factional way that averaging would hide.
    FactionalWarning,
}

/// Combine the test outcomes into a verdict. A factional warning takes
/// precedence over a plain signal verdict: elevated cycle prevalence means
/// a single consensus ranking misrepresents the raters even where marginal
/// signal exists.
pub fn decide_verdict(
    panel_mean: &AdjustedP,
    majority_share: &AdjustedP,
    cycle: &CycleTestReport,
) -> Verdict {
    if cycle.reject && cycle.above_null {
        Verdict::FactionalWarning
    } else if panel_mean.reject || majority_share.reject {
        Verdict::Signal
    } else {
        Verdict::NoSignal
    }
}

/// The conventions block embedded in every report.
pub fn conventions() -> Vec<String> {
    vec![
        "rankings are strict total orders; tied or partial inputs are rejected at parse time".into(),
        "majority tournaments: ties are an error under the default tie policy, so the cycle \
         statistic requires an odd rater count".into(),
        "per-pair majority share is max(k, R-k)/R over the R raters of a prompt".into(),
        "binomial p-values sum per-tail outcome probabilities; the two-sided value is the \
         minimum-likelihood sum with 1e-7 relative slack".into(),
        "goodness-of-fit bins pool adjacent support points to expected count >= 5 \
         (chi-squared validity); reported histograms keep the unpooled support".into(),
        "multiple comparisons: Bonferroni over criteria x {panel-mean GOF, majority-share GOF}; \
         the cycle-prevalence test is reported unadjusted and only feeds the factional warning".into(),
        "verdict precedence: factional-warning overrides signal when both trigger".into(),
        format!("monte carlo RNG: {RNG_ALGORITHM}; work is chunked so results are independent of \
         thread count"),
        "exact enumeration is used whenever (p!)^(R-1) fits the enumeration budget; otherwise \
         seeded Monte Carlo with the recorded sample count".into(),
    ]
}

impl SignalReport {
    /// Full document, pretty-printed, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// The document minus the `metadata` block — the byte-deterministic
    /// part, for reproducibility comparisons.
    pub fn deterministic_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value.as_object_mut().expect("report is an object").remove("metadata");
        let mut s = serde_json::to_string_pretty(&value).expect("report serializes");
        s.push('\n');
        s
    }

    /// Human-oriented one-table summary.
    pub fn markdown(&self) -> String {
        let mut md = String::new();
        md.push_str("# Signal validation report\n\n");
        md.push_str(&format!(
            "Tool version {}. alpha = {}, Bonferroni family = {} \
             (criteria x 2 goodness-of-fit tests).\n\n",
            self.tool_version, self.params.alpha, self.params.family_size
        ));
        md.push_str(
            "| criterion | prompts | median T | mean tau | mean share | cycle rate | \
             T-GOF p | share-GOF p | cycle p | verdict |\n",
        );
        md.push_str("|---|---:|---:|---:|---:|---:|---:|---:|---:|---|\n");
        for (name, c) in &self.criteria {
            md.push_str(&format!(
                "| {} | {} | {:+.3} | {:+.3} | {:.3} | {:.3} | {} | {} | {} | {} |\n",
                name,
                c.n_prompts,
                c.median_panel_mean.value,
                c.mean_pairwise_tau.value,
                c.mean_majority_share.value,
                c.cycle_rate.value,
                sci(c.panel_mean_gof.gof.p_value),
                sci(c.majority_share_gof.gof.p_value),
                sci(c.cycle_test.test.p_value),
                verdict_name(c.verdict),
            ));
        }
        md.push_str(
            "\nVerdicts: `signal` needs at least one Bonferroni-adjusted goodness-of-fit \
             rejection; `factional-warning` means cycles are significantly above the null \
             rate and overrides `signal`; `no-signal` otherwise.\n",
        );
        md
    }
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Signal => "signal",
        Verdict::NoSignal => "no-signal",
        Verdict::FactionalWarning => "factional-warning",
    }
}

/// Compact p-value formatting for tables.
fn sci(p: f64) -> String {
    if p == 0.0 {
        "0".into()
    } else if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        format!("{p:.4}")
    }
}

// --- histogram exports ----------------------------------------------------

/// One unpooled histogram row: a support point with observed and expected
/// counts.
#[derive(Debug, Clone, Serialize)]
pub struct HistRow {
    pub criterion: String,
    pub value: String,
    pub value_approx: f64,
    pub observed: u64,
    pub expected: f64,
}

pub fn hist_rows(criterion: &str, null: &NullPmf, observed: &[u64]) -> Vec<HistRow> {
    let expected = null.expected_counts(observed.iter().sum());
    null.support()
        .iter()
        .zip(null.probs())
        .zip(observed.iter().zip(&expected))
        .map(|((value, _prob), (&obs, &exp))| HistRow {
            criterion: criterion.to_string(),
            value: value.to_string(),
            value_approx: *value.numer() as f64 / *value.denom() as f64,
            observed: obs,
            expected: exp,
        })
        .collect()
}

/// Render rows to CSV with headers.
pub fn rows_to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).expect("csv-serializable row");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
}

/// One criterion's cycle tally for the cycle-count export.
#[derive(Debug, Clone, Serialize)]
pub struct CycleRow {
    pub criterion: String,
    pub cycles: u64,
    pub prompts: u64,
    pub rate: f64,
    pub null_rate: f64,
    pub p_value: f64,
}

/// Exact mean of a PMF as a float, for quick display.
pub fn pmf_mean_f64(pmf: &NullPmf) -> f64 {
    big_to_f64(&pmf.mean())
}
