//! The full validation pipeline: descriptive concordance statistics,
//! exact-null goodness-of-fit tests, cycle prevalence, and a per-criterion
//! verdict.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ranksignal::nulls::{cycle_null_auto, pmax_null, t_null_auto, tau_null, CycleNull};
use ranksignal::pmf::NullPmf;
use ranksignal::rank::{
    has_condorcet_cycle, majority_tournament, mean_pairwise_tau, pair_tallies, TiePolicy,
};
use ranksignal::stats::{
    binom_test, bonferroni, chisq_gof, histogram_on_support, rat_lower_median, rat_mean,
    TestDirection,
};
use ranksignal::{RankPanel, Rat};

use crate::cache::{cached_cycle, cached_pmf};
use crate::error::{read_file, write_file, CliError};
use crate::formats::{panels_by_criterion, parse_ranking_rows, FieldMap};
use crate::report::{
    conventions, decide_verdict, hist_rows, rows_to_csv, CriterionReport, CycleDescription,
    CycleRow, CycleTestReport, GofReport, Metadata, NullDescription, RatValue, RunParams,
    ShapeNulls, SignalReport, SCHEMA_VERSION,
};

#[derive(Debug, Clone)]
pub struct ValidateOptions {
    pub rankings: PathBuf,
    pub field_map: Option<PathBuf>,
    /// If set, every criterion must have exactly this many items per prompt.
    pub p: Option<usize>,
    /// If set, every criterion must have exactly this many raters per prompt.
    pub r: Option<usize>,
    pub alpha: f64,
    pub seed: u64,
    pub mc_samples: u64,
    pub enum_budget: u64,
    pub tie_policy: TiePolicy,
    pub out: PathBuf,
}

/// Everything the pipeline produces, before any file is written.
#[derive(Debug, Clone)]
pub struct ValidateArtifacts {
    pub report: SignalReport,
    pub summary_md: String,
    pub panel_mean_hist_csv: String,
    pub majority_share_hist_csv: String,
    pub cycle_csv: String,
}

impl ValidateArtifacts {
    /// Write the artifact set into a directory; returns the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let files = [
            ("report.json", self.report.to_json()),
            ("summary.md", self.summary_md.clone()),
            ("panel_mean_hist.csv", self.panel_mean_hist_csv.clone()),
            ("majority_share_hist.csv", self.majority_share_hist_csv.clone()),
            ("cycle_counts.csv", self.cycle_csv.clone()),
        ];
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            write_file(&path, &contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

struct ShapeNullSet {
    panel_mean: NullPmf,
    majority_share: NullPmf,
    cycle: CycleNull,
    /// Kept for provenance only; the pairwise null is not directly tested.
    pairwise_tau: NullPmf,
}

impl ShapeNullSet {
    fn build(p: usize, r: usize, opts: &ValidateOptions) -> Result<Self, CliError> {
        let pairwise_tau = tau_null(p)?;
        let panel_mean = cached_pmf(&format!("panel_mean_p{p}_r{r}"), || {
            t_null_auto(p, r, opts.enum_budget, opts.mc_samples, opts.seed)
        })?;
        let majority_share = pmax_null(r)?;
        let cycle = cached_cycle(&format!("cycle_p{p}_r{r}"), || {
            cycle_null_auto(p, r, opts.tie_policy, opts.enum_budget, opts.mc_samples, opts.seed)
        })?;
        Ok(ShapeNullSet { panel_mean, majority_share, cycle, pairwise_tau })
    }
}

fn load_field_map(path: Option<&Path>) -> Result<FieldMap, CliError> {
    match path {
        None => Ok(FieldMap::default()),
        Some(p) => {
            let text = read_file(p)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: invalid field map: {e}", p.display())))
        }
    }
}

fn enforce_shape_flags(
    by_criterion: &BTreeMap<String, Vec<RankPanel>>,
    p: Option<usize>,
    r: Option<usize>,
) -> Result<(), CliError> {
    for (criterion, panels) in by_criterion {
        let (got_p, got_r) = (panels[0].item_count(), panels[0].rater_count());
        if let Some(want) = p {
            if got_p != want {
                return Err(CliError::Input(format!(
                    "criterion {criterion}: expected {want} items per prompt (--p), found {got_p}"
                )));
            }
        }
        if let Some(want) = r {
            if got_r != want {
                return Err(CliError::Input(format!(
                    "criterion {criterion}: expected {want} raters per prompt (--R), found {got_r}"
                )));
            }
        }
    }
    Ok(())
}

pub fn run(opts: &ValidateOptions) -> Result<ValidateArtifacts, CliError> {
    let text = read_file(&opts.rankings)?;
    let field_map = load_field_map(opts.field_map.as_deref())?;
    let rows = parse_ranking_rows(&text, &field_map)?;
    let by_criterion = panels_by_criterion(&rows)?;
    enforce_shape_flags(&by_criterion, opts.p, opts.r)?;

    // One null set per distinct panel shape.
    let mut shape_nulls: BTreeMap<(usize, usize), ShapeNullSet> = BTreeMap::new();
    for panels in by_criterion.values() {
        let key = (panels[0].item_count(), panels[0].rater_count());
        if !shape_nulls.contains_key(&key) {
            shape_nulls.insert(key, ShapeNullSet::build(key.0, key.1, opts)?);
        }
    }

    // Descriptive statistics and unadjusted tests, criterion by criterion.
    struct Partial {
        shape: (usize, usize),
        n_prompts: usize,
        t_values: Vec<Rat>,
        share_values: Vec<Rat>,
        cycles: u64,
        t_hist: Vec<u64>,
        share_hist: Vec<u64>,
    }
    let mut partials: BTreeMap<String, Partial> = BTreeMap::new();
    for (criterion, panels) in &by_criterion {
        let shape = (panels[0].item_count(), panels[0].rater_count());
        let nulls = &shape_nulls[&shape];
        let t_values: Vec<Rat> = panels.iter().map(mean_pairwise_tau).collect();
        let share_values: Vec<Rat> = panels
            .iter()
            .flat_map(|panel| pair_tallies(panel).iter().map(|t| t.p_max()).collect::<Vec<_>>())
            .collect();
        let mut cycles = 0u64;
        for panel in panels {
            if has_condorcet_cycle(&majority_tournament(panel), opts.tie_policy)? {
                cycles += 1;
            }
        }
        let t_hist = histogram_on_support(&nulls.panel_mean, &t_values)?;
        let share_hist = histogram_on_support(&nulls.majority_share, &share_values)?;
        partials.insert(
            criterion.clone(),
            Partial {
                shape,
                n_prompts: panels.len(),
                t_values,
                share_values,
                cycles,
                t_hist,
                share_hist,
            },
        );
    }

    // Goodness-of-fit tests, then one Bonferroni family over all of them.
    let mut gofs = BTreeMap::new();
    let mut p_values = Vec::new();
    for (criterion, partial) in &partials {
        let nulls = &shape_nulls[&partial.shape];
        let t_gof = chisq_gof(&partial.t_hist, &nulls.panel_mean)?;
        let share_gof = chisq_gof(&partial.share_hist, &nulls.majority_share)?;
        p_values.push(t_gof.p_value);
        p_values.push(share_gof.p_value);
        gofs.insert(criterion.clone(), (t_gof, share_gof));
    }
    let family_size = p_values.len();
    let adjusted = bonferroni(&p_values, family_size, opts.alpha)?;

    // Assemble the per-criterion reports and histogram exports.
    let mut criteria = BTreeMap::new();
    let mut t_rows = Vec::new();
    let mut share_rows = Vec::new();
    let mut cycle_rows = Vec::new();
    for (idx, (criterion, partial)) in partials.iter().enumerate() {
        let nulls = &shape_nulls[&partial.shape];
        let (t_gof, share_gof) = gofs[criterion].clone();
        let t_adjusted = adjusted[2 * idx];
        let share_adjusted = adjusted[2 * idx + 1];

        let n = partial.n_prompts as u64;
        let cycle_binom = binom_test(
            partial.cycles,
            n,
            nulls.cycle.rate_f64(),
            TestDirection::TwoSided,
        )?;
        let cycle_rate = Rat::new(partial.cycles as i64, n as i64);
        let cycle_test = CycleTestReport {
            reject: cycle_binom.p_value < opts.alpha,
            above_null: (partial.cycles as f64 / n as f64) > nulls.cycle.rate_f64(),
            test: cycle_binom,
        };

        let mut sorted_t = partial.t_values.clone();
        sorted_t.sort();
        let median_t = rat_lower_median(&sorted_t).expect("at least one prompt");
        let mean_t = rat_mean(&partial.t_values).expect("at least one prompt");
        let mean_share = rat_mean(&partial.share_values).expect("at least one pair");

        let verdict = decide_verdict(&t_adjusted, &share_adjusted, &cycle_test);
        t_rows.extend(hist_rows(criterion, &nulls.panel_mean, &partial.t_hist));
        share_rows.extend(hist_rows(criterion, &nulls.majority_share, &partial.share_hist));
        cycle_rows.push(CycleRow {
            criterion: criterion.clone(),
            cycles: partial.cycles,
            prompts: n,
            rate: partial.cycles as f64 / n as f64,
            null_rate: nulls.cycle.rate_f64(),
            p_value: cycle_test.test.p_value,
        });

        criteria.insert(
            criterion.clone(),
            CriterionReport {
                n_prompts: partial.n_prompts,
                items_per_prompt: partial.shape.0,
                raters_per_prompt: partial.shape.1,
                median_panel_mean: RatValue::from(median_t),
                mean_pairwise_tau: RatValue::from(mean_t),
                mean_majority_share: RatValue::from(mean_share),
                cycle_rate: RatValue::from(cycle_rate),
                cycles_observed: partial.cycles,
                panel_mean_gof: GofReport { gof: t_gof, adjusted: t_adjusted },
                majority_share_gof: GofReport { gof: share_gof, adjusted: share_adjusted },
                cycle_test,
                verdict,
            },
        );
    }

    let null_provenance = shape_nulls
        .iter()
        .map(|(&(p, r), nulls)| {
            (
                format!("p{p}r{r}"),
                ShapeNulls {
                    items_per_prompt: p,
                    raters_per_prompt: r,
                    pairwise_tau: NullDescription::of(&nulls.pairwise_tau),
                    panel_mean: NullDescription::of(&nulls.panel_mean),
                    majority_share: NullDescription::of(&nulls.majority_share),
                    cycle: CycleDescription::of(&nulls.cycle),
                },
            )
        })
        .collect();

    let report = SignalReport {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        params: RunParams {
            alpha: opts.alpha,
            seed: opts.seed,
            mc_samples: opts.mc_samples,
            enumeration_budget: opts.enum_budget,
            family_size,
            tie_policy: tie_policy_name(opts.tie_policy),
        },
        null_provenance,
        conventions: conventions(),
        criteria,
        metadata: Metadata {
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        },
    };

    let summary_md = report.markdown();
    Ok(ValidateArtifacts {
        summary_md,
        panel_mean_hist_csv: rows_to_csv(&t_rows),
        majority_share_hist_csv: rows_to_csv(&share_rows),
        cycle_csv: rows_to_csv(&cycle_rows),
        report,
    })
}

pub fn tie_policy_name(policy: TiePolicy) -> String {
    serde_json::to_value(policy)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .expect("tie policy serializes to a string")
}
