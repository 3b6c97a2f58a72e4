//! Convert per-rater pairwise comparisons into strict rankings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ranksignal::aggregate::{pairwise_to_ranking, PairwiseRecord};

use crate::error::{read_file, write_file, CliError};
use crate::formats::parse_jsonl_records;

#[derive(Debug, Clone)]
pub struct AggregateOptions {
    pub pairwise: PathBuf,
    pub epsilon: f64,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateSummary {
    /// Distinct (criterion, prompt, rater) groups converted.
    pub groups: u64,
    /// Groups where near-equal fitted strengths were broken by item order.
    pub tie_broken_groups: u64,
    /// Cyclic item triples observed across all groups.
    pub cyclic_triples: u64,
}

pub struct AggregateArtifacts {
    pub rankings_jsonl: String,
    pub summary: AggregateSummary,
}

impl AggregateArtifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let summary = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        let files =
            [("rankings.jsonl", self.rankings_jsonl.clone()), ("aggregate_summary.json", summary + "\n")];
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            write_file(&path, &contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(opts: &AggregateOptions) -> Result<AggregateArtifacts, CliError> {
    let text = read_file(&opts.pairwise)?;
    let records: Vec<PairwiseRecord> = parse_jsonl_records(&text, "pairwise")?;
    for (idx, record) in records.iter().enumerate() {
        record.validate().map_err(|e| CliError::Input(format!("record {}: {e}", idx + 1)))?;
    }

    let mut groups: BTreeMap<(String, String, String), Vec<PairwiseRecord>> = BTreeMap::new();
    for record in records {
        groups
            .entry((record.criterion.clone(), record.prompt_id.clone(), record.rater_id.clone()))
            .or_default()
            .push(record);
    }

    #[derive(Serialize)]
    struct Row<'a> {
        criterion: &'a str,
        prompt_id: &'a str,
        rater_id: &'a str,
        ranking: Vec<&'a str>,
        tie_broken: bool,
        cyclic_triples: u64,
    }

    let mut rankings_jsonl = String::new();
    let mut summary =
        AggregateSummary { groups: 0, tie_broken_groups: 0, cyclic_triples: 0 };
    for ((criterion, prompt_id, rater_id), group) in &groups {
        let converted = pairwise_to_ranking(group, opts.epsilon).map_err(|e| {
            CliError::Input(format!(
                "criterion {criterion} prompt {prompt_id} rater {rater_id}: {e}"
            ))
        })?;
        summary.groups += 1;
        summary.tie_broken_groups += u64::from(converted.tie_broken);
        summary.cyclic_triples += converted.cyclic_triples;
        let order = converted.item_order();
        let row = Row {
            criterion,
            prompt_id,
            rater_id,
            ranking: order.iter().map(String::as_str).collect(),
            tie_broken: converted.tie_broken,
            cyclic_triples: converted.cyclic_triples,
        };
        rankings_jsonl.push_str(&serde_json::to_string(&row).expect("row serializes"));
        rankings_jsonl.push('\n');
    }
    Ok(AggregateArtifacts { rankings_jsonl, summary })
}
