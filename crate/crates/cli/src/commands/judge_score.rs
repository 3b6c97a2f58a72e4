//! Score automatic judges against rater-panel majority labels.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ranksignal::judge::{majority_labels, s1_score, JudgeScore, MajorityIndex, VerdictRecord};

use crate::error::{read_file, write_file, CliError};
use crate::formats::{flatten_panels, panels_by_criterion, parse_jsonl_records, parse_ranking_rows, FieldMap};

#[derive(Debug, Clone)]
pub struct JudgeScoreOptions {
    pub verdicts: PathBuf,
    pub rankings: PathBuf,
    pub field_map: Option<FieldMap>,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct JudgeScoreReport {
    pub n_majority_labels: usize,
    pub judges: Vec<JudgeScore>,
}

/// One judge × criterion accuracy cell for the CSV export.
#[derive(Debug, Clone, Serialize)]
struct AccuracyRow {
    judge_id: String,
    criterion: String,
    accuracy: f64,
}

pub struct JudgeScoreArtifacts {
    pub report: JudgeScoreReport,
    pub accuracy_csv: String,
}

impl JudgeScoreArtifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        let files = [
            ("judge_scores.json", report + "\n"),
            ("judge_accuracy.csv", self.accuracy_csv.clone()),
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

pub fn run(opts: &JudgeScoreOptions) -> Result<JudgeScoreArtifacts, CliError> {
    let verdict_text = read_file(&opts.verdicts)?;
    let verdicts: Vec<VerdictRecord> = parse_jsonl_records(&verdict_text, "verdict")?;
    for (idx, verdict) in verdicts.iter().enumerate() {
        verdict.validate().map_err(|e| CliError::Input(format!("line-order record {}: {e}", idx + 1)))?;
    }

    let ranking_text = read_file(&opts.rankings)?;
    let field_map = opts.field_map.clone().unwrap_or_default();
    let rows = parse_ranking_rows(&ranking_text, &field_map)?;
    let panels = flatten_panels(&panels_by_criterion(&rows)?);
    let labels = MajorityIndex::from_records(majority_labels(&panels))?;

    let mut by_judge: BTreeMap<String, Vec<VerdictRecord>> = BTreeMap::new();
    for verdict in verdicts {
        by_judge.entry(verdict.judge_id.clone()).or_default().push(verdict);
    }

    let mut judges = Vec::new();
    let mut accuracy_rows = Vec::new();
    for (judge_id, group) in &by_judge {
        let score = s1_score(group, &labels)
            .map_err(|e| match e {
                // Undefined statistics keep their exit-code class; everything
                // else gets the judge attached for context.
                e if e.is_undefined_procedure() => CliError::Stat(e),
                e => CliError::Input(format!("judge {judge_id}: {e}")),
            })?;
        for (criterion, accuracy) in &score.per_criterion_acc {
            accuracy_rows.push(AccuracyRow {
                judge_id: judge_id.clone(),
                criterion: criterion.clone(),
                accuracy: *accuracy,
            });
        }
        judges.push(score);
    }

    Ok(JudgeScoreArtifacts {
        report: JudgeScoreReport { n_majority_labels: labels.len(), judges },
        accuracy_csv: crate::report::rows_to_csv(&accuracy_rows),
    })
}
