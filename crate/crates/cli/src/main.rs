use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ranksignal::anchors::ValueKind;
use ranksignal::nulls::DEFAULT_ENUM_BUDGET;
use ranksignal::rank::TiePolicy;

use ranksignal_cli::commands::{aggregate, agreement, anchor, judge_score, nulls, validate};
use ranksignal_cli::error::{write_file, CliError};

#[derive(Parser)]
#[command(
    name = "ranksignal",
    version,
    about = "Decide whether a multi-rater ranking dataset carries learnable preference signal"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    /// Print the JSON report.
    Json,
    /// Print the markdown summary.
    Md,
    /// Print the panel-mean histogram CSV.
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ValueKindArg {
    /// Higher values are better (ratings).
    ScalarRating,
    /// Lower values are better (rank positions).
    RankPosition,
}

impl From<ValueKindArg> for ValueKind {
    fn from(v: ValueKindArg) -> Self {
        match v {
            ValueKindArg::ScalarRating => ValueKind::ScalarRating,
            ValueKindArg::RankPosition => ValueKind::RankPosition,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlphaUnitArg {
    /// Each (prompt, item) cell is one reliability unit.
    PromptItem,
    /// Each prompt pools its items into one unit.
    Prompt,
}

impl From<AlphaUnitArg> for ranksignal::agreement::AlphaUnit {
    fn from(v: AlphaUnitArg) -> Self {
        match v {
            AlphaUnitArg::PromptItem => ranksignal::agreement::AlphaUnit::PromptItem,
            AlphaUnitArg::Prompt => ranksignal::agreement::AlphaUnit::Prompt,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the signal-validation pipeline over a rankings table.
    Validate {
        /// Rankings JSONL: one rater-ranking per line.
        rankings: PathBuf,
        /// JSON field-name mapping for differently named columns.
        #[arg(long)]
        field_map: Option<PathBuf>,
        /// Require this many items per prompt.
        #[arg(long)]
        p: Option<usize>,
        /// Require this many raters per prompt.
        #[arg(long = "R")]
        r: Option<usize>,
        /// Significance level before Bonferroni adjustment.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Seed for any Monte Carlo nulls.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte Carlo sample count when exact enumeration is infeasible.
        #[arg(long, default_value_t = 200_000)]
        mc_samples: u64,
        /// Outcome-tuple budget for exact enumeration.
        #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
        enum_budget: u64,
        /// Output directory for the report, summary, and histograms.
        #[arg(long)]
        out: PathBuf,
        /// What to print on stdout.
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
    /// Print the null distributions for a (p items, R raters) panel shape.
    Nulls {
        #[arg(long)]
        p: usize,
        #[arg(long = "R")]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200_000)]
        mc_samples: u64,
        #[arg(long, default_value_t = DEFAULT_ENUM_BUDGET)]
        enum_budget: u64,
        /// Write the bundle here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert per-rater pairwise comparisons into strict rankings.
    Aggregate {
        /// Pairwise-comparison JSONL.
        pairwise: PathBuf,
        /// Smoothing pseudo-count added to every directed pair.
        #[arg(long, default_value_t = ranksignal::aggregate::DEFAULT_BT_EPSILON)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw reference ranking panels from a (user, item, value) table.
    Anchor {
        /// Rating table: CSV with a header or JSONL.
        table: PathBuf,
        /// Draw recipe JSON.
        recipe: PathBuf,
        #[arg(long, value_enum, default_value_t = ValueKindArg::ScalarRating)]
        value_kind: ValueKindArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score automatic judges against rater-majority labels.
    JudgeScore {
        /// Judge verdict JSONL (both presentation orders per pair).
        verdicts: PathBuf,
        /// Rankings JSONL from which majority labels are derived.
        rankings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rater-to-rater agreement matrices and flag reliability.
    Agreement {
        rankings: PathBuf,
        /// Per-(prompt, rater, item) flag JSONL enabling the reliability
        /// section.
        #[arg(long)]
        flags: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = AlphaUnitArg::PromptItem)]
        alpha_unit: AlphaUnitArg,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate {
            rankings,
            field_map,
            p,
            r,
            alpha,
            seed,
            mc_samples,
            enum_budget,
            out,
            format,
        } => {
            let artifacts = validate::run(&validate::ValidateOptions {
                rankings,
                field_map,
                p,
                r,
                alpha,
                seed,
                mc_samples,
                enum_budget,
                tie_policy: TiePolicy::Error,
                out: out.clone(),
            })?;
            artifacts.write_to(&out)?;
            match format {
                OutputFormat::Json => print!("{}", artifacts.report.to_json()),
                OutputFormat::Md => print!("{}", artifacts.summary_md),
                OutputFormat::Csv => print!("{}", artifacts.panel_mean_hist_csv),
            }
            Ok(())
        }
        Command::Nulls { p, r, seed, mc_samples, enum_budget, out } => {
            let bundle = nulls::run(&nulls::NullsOptions {
                p,
                r,
                seed,
                mc_samples,
                enum_budget,
                tie_policy: TiePolicy::Error,
                out: out.clone(),
            })?;
            let mut text = serde_json::to_string_pretty(&bundle).expect("bundle serializes");
            text.push('\n');
            match out {
                Some(path) => write_file(&path, &text)?,
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Aggregate { pairwise, epsilon, out } => {
            let artifacts = aggregate::run(&aggregate::AggregateOptions {
                pairwise,
                epsilon,
                out: out.clone(),
            })?;
            artifacts.write_to(&out)?;
            let mut text =
                serde_json::to_string_pretty(&artifacts.summary).expect("summary serializes");
            text.push('\n');
            print!("{text}");
            Ok(())
        }
        Command::Anchor { table, recipe, value_kind, out } => {
            let artifacts = anchor::run(&anchor::AnchorOptions {
                table,
                recipe,
                value_kind: value_kind.into(),
                tie_policy: TiePolicy::Error,
                out: out.clone(),
            })?;
            artifacts.write_to(&out)?;
            let mut text =
                serde_json::to_string_pretty(&artifacts.report).expect("report serializes");
            text.push('\n');
            print!("{text}");
            Ok(())
        }
        Command::JudgeScore { verdicts, rankings, out } => {
            let artifacts = judge_score::run(&judge_score::JudgeScoreOptions {
                verdicts,
                rankings,
                field_map: None,
                out: out.clone(),
            })?;
            artifacts.write_to(&out)?;
            let mut text =
                serde_json::to_string_pretty(&artifacts.report).expect("report serializes");
            text.push('\n');
            print!("{text}");
            Ok(())
        }
        Command::Agreement { rankings, flags, alpha_unit, out } => {
            let artifacts = agreement::run(&agreement::AgreementOptions {
                rankings,
                flags,
                alpha_unit: alpha_unit.into(),
                field_map: None,
                out: out.clone(),
            })?;
            artifacts.write_to(&out)?;
            let mut text =
                serde_json::to_string_pretty(&artifacts.report).expect("report serializes");
            text.push('\n');
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
