//! Inter-rater agreement: rater × rater concordance matrices, rater
//! rankings, and (given flag data) reliability, split profiles, and
//! per-rater major-flag rates.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ranksignal::agreement::{
    krippendorff_alpha_unit, major_rates, rank_raters, rater_matrix, split_profile, AlphaMetric,
    AlphaUnit, FlagMatrix, FlagRecord, MajorRate, RankedRater, SplitProfile,
};

use crate::error::{read_file, write_file, CliError};
use crate::formats::{panels_by_criterion, parse_jsonl_records, parse_ranking_rows, slug, FieldMap};

#[derive(Debug, Clone)]
pub struct AgreementOptions {
    pub rankings: PathBuf,
    pub flags: Option<PathBuf>,
    pub alpha_unit: AlphaUnit,
    pub field_map: Option<FieldMap>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub criteria: BTreeMap<String, CriterionAgreement>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<FlagReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionAgreement {
    pub raters: Vec<String>,
    /// Mean pairwise correlation per rater pair; `null` on the diagonal.
    /// Exact values as strings, row-major in `raters` order.
    pub matrix: Vec<Vec<Option<String>>>,
    pub per_rater_mean: Vec<String>,
    pub least_agreeing_pair: [String; 2],
    pub most_agreeing_pair: [String; 2],
    pub ranked: Vec<RankedRater>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlagReport {
    pub unit: String,
    pub alpha_ordinal: f64,
    pub alpha_nominal: f64,
    pub alpha_interval: f64,
    pub split_profile: SplitProfile,
    pub major_rates: Vec<MajorRate>,
}

pub struct AgreementArtifacts {
    pub report: AgreementReport,
    /// One rater × rater CSV grid per criterion, keyed by file name.
    pub heatmaps: BTreeMap<String, String>,
}

impl AgreementArtifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        let report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        let path = dir.join("agreement.json");
        write_file(&path, &(report + "\n"))?;
        written.push(path);
        for (name, contents) in &self.heatmaps {
            let path = dir.join(name);
            write_file(&path, contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(opts: &AgreementOptions) -> Result<AgreementArtifacts, CliError> {
    let text = read_file(&opts.rankings)?;
    let field_map = opts.field_map.clone().unwrap_or_default();
    let rows = parse_ranking_rows(&text, &field_map)?;
    let by_criterion = panels_by_criterion(&rows)?;

    let mut criteria = BTreeMap::new();
    let mut heatmaps = BTreeMap::new();
    for (criterion, panels) in &by_criterion {
        let matrix = rater_matrix(panels)
            .map_err(|e| CliError::Input(format!("criterion {criterion}: {e}")))?;
        let ranked = rank_raters(&matrix);
        let (min_a, min_b) = matrix.min_pair_ids();
        let (max_a, max_b) = matrix.max_pair_ids();

        heatmaps.insert(format!("agreement_{}.csv", slug(criterion)), heatmap_csv(&matrix));
        criteria.insert(
            criterion.clone(),
            CriterionAgreement {
                raters: matrix.raters.clone(),
                matrix: matrix
                    .entries
                    .iter()
                    .map(|row| row.iter().map(|cell| cell.map(|x| x.to_string())).collect())
                    .collect(),
                per_rater_mean: matrix.per_rater_mean.iter().map(|x| x.to_string()).collect(),
                least_agreeing_pair: [min_a.to_string(), min_b.to_string()],
                most_agreeing_pair: [max_a.to_string(), max_b.to_string()],
                ranked,
            },
        );
    }

    let flags = match &opts.flags {
        None => None,
        Some(path) => {
            let flag_text = read_file(path)?;
            let records: Vec<FlagRecord> = parse_jsonl_records(&flag_text, "flag")?;
            let matrix = FlagMatrix::new(records)?;
            Some(FlagReport {
                unit: unit_name(opts.alpha_unit),
                alpha_ordinal: krippendorff_alpha_unit(&matrix, AlphaMetric::Ordinal, opts.alpha_unit)?,
                alpha_nominal: krippendorff_alpha_unit(&matrix, AlphaMetric::Nominal, opts.alpha_unit)?,
                alpha_interval: krippendorff_alpha_unit(&matrix, AlphaMetric::Interval, opts.alpha_unit)?,
                split_profile: split_profile(&matrix),
                major_rates: major_rates(&matrix),
            })
        }
    };

    Ok(AgreementArtifacts { report: AgreementReport { criteria, flags }, heatmaps })
}

fn unit_name(unit: AlphaUnit) -> String {
    serde_json::to_value(unit)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .expect("unit serializes to a string")
}

/// The rater × rater mean-correlation grid as CSV, floats for tooling,
/// empty diagonal.
fn heatmap_csv(matrix: &ranksignal::agreement::RaterAgreementMatrix) -> String {
    let mut out = String::from("rater");
    for rater in &matrix.raters {
        out.push(',');
        out.push_str(rater);
    }
    out.push('\n');
    for (i, rater) in matrix.raters.iter().enumerate() {
        out.push_str(rater);
        for j in 0..matrix.raters.len() {
            out.push(',');
            if let Some(x) = matrix.entries[i][j] {
                let v = *x.numer() as f64 / *x.denom() as f64;
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}
