//! Draw reference ranking panels from an external rating table and report
//! their concordance statistics.

use std::path::{Path, PathBuf};

use serde::Serialize;

use ranksignal::anchors::{anchor_stats, subsample_panels, AnchorRecipe, AnchorStats, RatingTable, ValueKind};
use ranksignal::rank::TiePolicy;

use crate::error::{read_file, write_file, CliError};
use crate::formats::{panels_to_jsonl, parse_rating_records};

#[derive(Debug, Clone)]
pub struct AnchorOptions {
    pub table: PathBuf,
    pub recipe: PathBuf,
    pub value_kind: ValueKind,
    pub tie_policy: TiePolicy,
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnchorReport {
    pub recipe_name: String,
    pub requested_panels: u64,
    pub stats: AnchorStats,
    /// Rater draws abandoned after the redraw budget.
    pub skipped_rater_draws: u64,
    /// Item-subset redraws forced by rating ties.
    pub tie_redraws: u64,
    /// Subsets whose surviving ties were broken by the seeded stream.
    pub tie_breaks: u64,
}

pub struct AnchorArtifacts {
    pub rankings_jsonl: String,
    pub report: AnchorReport,
}

impl AnchorArtifacts {
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let report = serde_json::to_string_pretty(&self.report).expect("report serializes");
        let files =
            [("rankings.jsonl", self.rankings_jsonl.clone()), ("anchor_stats.json", report + "\n")];
        let mut written = Vec::new();
        for (name, contents) in files {
            let path = dir.join(name);
            write_file(&path, &contents)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn run(opts: &AnchorOptions) -> Result<AnchorArtifacts, CliError> {
    let table_text = read_file(&opts.table)?;
    let records = parse_rating_records(&table_text, &opts.table)?;
    let table = RatingTable::new(opts.value_kind, records)?;

    let recipe_text = read_file(&opts.recipe)?;
    let recipe: AnchorRecipe = serde_json::from_str(&recipe_text)
        .map_err(|e| CliError::Input(format!("{}: invalid recipe: {e}", opts.recipe.display())))?;
    recipe.validate()?;

    let outcome = subsample_panels(&table, &recipe)?;
    let stats = anchor_stats(&outcome.panels, opts.tie_policy)?;
    let report = AnchorReport {
        recipe_name: recipe.name.clone(),
        requested_panels: recipe.requested_panels(),
        stats,
        skipped_rater_draws: outcome.skipped_rater_draws,
        tie_redraws: outcome.tie_redraws,
        tie_breaks: outcome.tie_breaks,
    };
    Ok(AnchorArtifacts { rankings_jsonl: panels_to_jsonl(&outcome.panels), report })
}
