use thiserror::Error;

/// Errors produced by the statistics core.
///
/// Variants are split into two broad families so callers can map them onto
/// process exit codes: malformed or inconsistent *input* versus a statistical
/// procedure that is *undefined* for an otherwise valid input (degenerate
/// tests, exceeded enumeration budgets). [`Error::is_undefined_procedure`]
/// reports the family.
#[derive(Debug, Error)]
pub enum Error {
    #[error("ranking length mismatch: {left} vs {right} items")]
    ShapeMismatch { left: usize, right: usize },

    #[error("invalid ranking: {0}")]
    InvalidRanking(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("majority tournament contains ties and the tie policy is `error`")]
    TournamentTies,

    #[error("even rater count {0}: majority pairs can tie; this operation requires odd R")]
    EvenRaterCount(usize),

    #[error(
        "exact enumeration needs {required} rank tuples, over the budget of {budget}; \
         use the monte-carlo mode instead"
    )]
    EnumerationBudget { required: u128, budget: u128 },

    #[error("a reproducibility seed is required for monte-carlo sampling")]
    MissingSeed,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("observed value {0} is not on the null support")]
    ValueOffSupport(String),

    #[error("goodness-of-fit test undefined: pooling left {0} bin(s), need at least 2")]
    DegenerateGof(usize),

    #[error("{0} is undefined: {1}")]
    UndefinedStatistic(&'static str, String),

    #[error("item {0} appears in no comparison")]
    UncomparedItem(String),

    #[error("missing pairwise records for pairs: {0}")]
    MissingPairs(String),

    #[error("duplicate pairwise record for ({0}, {1})")]
    DuplicatePair(String, String),

    #[error("inconsistent rater sets across panels: {0}")]
    RaterSetMismatch(String),

    #[error("invalid flag value {0}: flags must be 0, 1, or 2")]
    InvalidFlag(u8),

    #[error("verdict records incomplete: missing second image order for pairs: {0}")]
    MissingVerdictOrder(String),

    #[error("duplicate verdict for pair {0} in the same image order")]
    DuplicateVerdict(String),

    #[error("no designer-majority label for pair {0}")]
    MissingMajorityLabel(String),

    #[error("rating table: duplicate value for user {user} on item {item}")]
    DuplicateRating { user: String, item: String },

    #[error("anchor recipe: {0}")]
    InvalidRecipe(String),

    #[error("not enough items: need {needed}, table offers {available}")]
    InsufficientItems { needed: usize, available: usize },

    #[error("pmf: {0}")]
    InvalidPmf(String),
}

impl Error {
    /// True for errors that mean "the statistic is undefined here", as opposed
    /// to malformed input.
    pub fn is_undefined_procedure(&self) -> bool {
        matches!(
            self,
            Error::DegenerateGof(_)
                | Error::UndefinedStatistic(_, _)
                | Error::EnumerationBudget { .. }
                | Error::TournamentTies
                | Error::EvenRaterCount(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
