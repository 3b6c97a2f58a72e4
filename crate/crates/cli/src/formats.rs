//! Input and output file formats.
//!
//! Everything row-shaped is JSONL: one JSON object per line, blank lines
//! ignored, parse errors reported with their line number. Ranking tables
//! additionally accept a field-name mapping so exports with different
//! column names load without rewriting. Rating tables (user, item, value)
//! load from either CSV with headers or JSONL.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use ranksignal::anchors::RatingRecord;
use ranksignal::{RankPanel, Ranking};

use crate::error::CliError;

// --- generic JSONL -------------------------------------------------------

/// Parse one typed record per line, attributing failures to line numbers.
pub fn parse_jsonl_records<T: DeserializeOwned>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(trimmed).map_err(|e| {
            CliError::Input(format!("line {}: invalid {what} record: {e}", idx + 1))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Input(format!("no {what} records found")));
    }
    Ok(records)
}

/// Serialize records as JSONL (one compact object per line).
pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("serializable record"));
        out.push('\n');
    }
    out
}

// --- ranking tables ------------------------------------------------------

/// Field-name mapping for ranking rows. Defaults match this tool's own
/// output; point individual entries at differently named columns to load
/// third-party exports as-is.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    pub criterion: String,
    pub prompt_id: String,
    pub rater_id: String,
    /// Array of item ids, best first.
    pub ranking: String,
    /// Object mapping item id to 1-based rank.
    pub ranks: String,
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            criterion: "criterion".into(),
            prompt_id: "prompt_id".into(),
            rater_id: "rater_id".into(),
            ranking: "ranking".into(),
            ranks: "ranks".into(),
        }
    }
}

/// One rater's ranking of one prompt's items, in either wire encoding.
#[derive(Debug, Clone)]
pub struct RankingRow {
    pub criterion: String,
    pub prompt_id: String,
    pub rater_id: String,
    pub entry: RankingEntry,
}

#[derive(Debug, Clone)]
pub enum RankingEntry {
    /// Item ids, best first.
    Order(Vec<String>),
    /// Item id → 1-based rank.
    Ranks(BTreeMap<String, u32>),
}

/// Parse ranking rows from JSONL, resolving field names through `map`.
pub fn parse_ranking_rows(text: &str, map: &FieldMap) -> Result<Vec<RankingRow>, CliError> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(trimmed)
            .map_err(|e| CliError::Input(format!("line {line_no}: invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Input(format!("line {line_no}: expected a JSON object")))?;

        let get_str = |field: &str| -> Result<String, CliError> {
            obj.get(field).and_then(|v| v.as_str()).map(str::to_owned).ok_or_else(|| {
                CliError::Input(format!("line {line_no}: missing string field `{field}`"))
            })
        };
        let criterion = get_str(&map.criterion)?;
        let prompt_id = get_str(&map.prompt_id)?;
        let rater_id = get_str(&map.rater_id)?;

        let entry = match (obj.get(&map.ranking), obj.get(&map.ranks)) {
            (Some(_), Some(_)) => {
                return Err(CliError::Input(format!(
                    "line {line_no}: give `{}` or `{}`, not both",
                    map.ranking, map.ranks
                )));
            }
            (Some(order), None) => {
                let ids = order
                    .as_array()
                    .and_then(|a| {
                        a.iter().map(|v| v.as_str().map(str::to_owned)).collect::<Option<Vec<_>>>()
                    })
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "line {line_no}: `{}` must be an array of item-id strings",
                            map.ranking
                        ))
                    })?;
                RankingEntry::Order(ids)
            }
            (None, Some(ranks)) => {
                let pairs = ranks
                    .as_object()
                    .and_then(|m| {
                        m.iter()
                            .map(|(k, v)| v.as_u64().map(|r| (k.clone(), r as u32)))
                            .collect::<Option<BTreeMap<_, _>>>()
                    })
                    .ok_or_else(|| {
                        CliError::Input(format!(
                            "line {line_no}: `{}` must map item ids to integer ranks",
                            map.ranks
                        ))
                    })?;
                RankingEntry::Ranks(pairs)
            }
            (None, None) => {
                return Err(CliError::Input(format!(
                    "line {line_no}: missing `{}` (or `{}`) field",
                    map.ranking, map.ranks
                )));
            }
        };
        rows.push(RankingRow { criterion, prompt_id, rater_id, entry });
    }
    if rows.is_empty() {
        return Err(CliError::Input("no ranking rows found".into()));
    }
    Ok(rows)
}

fn ranking_from_entry(entry: &RankingEntry, item_ids: &[String]) -> Result<Ranking, String> {
    match entry {
        RankingEntry::Order(ids) => {
            let mut sorted = ids.clone();
            sorted.sort();
            if sorted != item_ids {
                return Err(format!(
                    "item set [{}] differs from the panel's [{}]",
                    ids.join(", "),
                    item_ids.join(", ")
                ));
            }
            let order: Vec<usize> = ids
                .iter()
                .map(|id| item_ids.binary_search(id).expect("id checked above"))
                .collect();
            Ranking::from_order(&order).map_err(|e| e.to_string())
        }
        RankingEntry::Ranks(map) => {
            let keys: Vec<String> = map.keys().cloned().collect();
            if keys != item_ids {
                return Err(format!(
                    "item set [{}] differs from the panel's [{}]",
                    keys.join(", "),
                    item_ids.join(", ")
                ));
            }
            let ranks: Vec<u32> = item_ids.iter().map(|id| map[id]).collect();
            Ranking::from_ranks(ranks).map_err(|e| e.to_string())
        }
    }
}

/// Group rows into per-prompt panels, keyed and ordered by criterion.
///
/// Item and rater orders inside each panel are lexicographic, so the same
/// rows in any order produce identical panels. Every prompt of a criterion
/// must present the same (items, raters) shape.
pub fn panels_by_criterion(
    rows: &[RankingRow],
) -> Result<BTreeMap<String, Vec<RankPanel>>, CliError> {
    let mut groups: BTreeMap<(String, String), BTreeMap<String, &RankingEntry>> = BTreeMap::new();
    for row in rows {
        let slot = groups.entry((row.criterion.clone(), row.prompt_id.clone())).or_default();
        if slot.insert(row.rater_id.clone(), &row.entry).is_some() {
            return Err(CliError::Input(format!(
                "criterion {} prompt {}: duplicate row for rater {}",
                row.criterion, row.prompt_id, row.rater_id
            )));
        }
    }

    let mut out: BTreeMap<String, Vec<RankPanel>> = BTreeMap::new();
    for ((criterion, prompt_id), raters) in groups {
        let first = raters.values().next().expect("group has at least one row");
        let mut item_ids: Vec<String> = match first {
            RankingEntry::Order(ids) => ids.clone(),
            RankingEntry::Ranks(map) => map.keys().cloned().collect(),
        };
        item_ids.sort();

        let mut rater_ids = Vec::with_capacity(raters.len());
        let mut rankings = Vec::with_capacity(raters.len());
        for (rater_id, entry) in &raters {
            let ranking = ranking_from_entry(entry, &item_ids).map_err(|msg| {
                CliError::Input(format!(
                    "criterion {criterion} prompt {prompt_id} rater {rater_id}: {msg}"
                ))
            })?;
            rater_ids.push(rater_id.clone());
            rankings.push(ranking);
        }
        let panel = RankPanel::new(prompt_id, criterion.clone(), rater_ids, item_ids, rankings)?;
        out.entry(criterion).or_default().push(panel);
    }

    for (criterion, panels) in &out {
        let (p0, r0) = (panels[0].item_count(), panels[0].rater_count());
        for panel in panels {
            if panel.item_count() != p0 || panel.rater_count() != r0 {
                return Err(CliError::Input(format!(
                    "criterion {criterion}: mixed panel shapes — prompt {} has \
                     {} items × {} raters, prompt {} has {p0} × {r0}",
                    panel.prompt_id,
                    panel.item_count(),
                    panel.rater_count(),
                    panels[0].prompt_id
                )));
            }
        }
    }
    Ok(out)
}

/// Serialize panels back to ranking rows (best-first item-id arrays).
pub fn panels_to_jsonl(panels: &[RankPanel]) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        criterion: &'a str,
        prompt_id: &'a str,
        rater_id: &'a str,
        ranking: Vec<&'a str>,
    }
    let mut out = String::new();
    for panel in panels {
        for (rater_idx, rater_id) in panel.raters.iter().enumerate() {
            let order = panel.rankings[rater_idx].to_order();
            let row = Row {
                criterion: &panel.criterion,
                prompt_id: &panel.prompt_id,
                rater_id,
                ranking: order.iter().map(|&i| panel.item_ids[i].as_str()).collect(),
            };
            out.push_str(&serde_json::to_string(&row).expect("serializable row"));
            out.push('\n');
        }
    }
    out
}

// --- rating tables -------------------------------------------------------

/// Parse `(user, item, value)` rating records from CSV (with a header) or
/// JSONL, chosen by the file extension (`.csv` means CSV).
pub fn parse_rating_records(text: &str, path: &Path) -> Result<Vec<RatingRecord>, CliError> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if !is_csv {
        return parse_jsonl_records(text, "rating");
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut records = Vec::new();
    for (idx, row) in reader.deserialize::<RatingRecord>().enumerate() {
        let record = row.map_err(|e| {
            CliError::Input(format!("csv record {}: {e}", idx + 1))
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Input("no rating records found".into()));
    }
    Ok(records)
}

/// Flatten a criterion-keyed panel map, preserving criterion order.
pub fn flatten_panels(by_criterion: &BTreeMap<String, Vec<RankPanel>>) -> Vec<RankPanel> {
    by_criterion.values().flat_map(|v| v.iter().cloned()).collect()
}

/// A filesystem-safe slug for a criterion name.
pub fn slug(name: &str) -> String {
    let mut out: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c.to_ascii_lowercase() } else { '-' })
        .collect();
    while out.contains("--") {
        out = out.replace("--", "-");
    }
    out.trim_matches('-').to_string()
}

/// Distinct criterion names, in report order.
pub fn criterion_names(by_criterion: &BTreeMap<String, Vec<RankPanel>>) -> BTreeSet<String> {
    by_criterion.keys().cloned().collect()
}
