use crate::guidance::ValidationErrors;

#[derive(Debug, thiserror::Error)]
pub enum GuidanceError {
    #[error("malformed ruleset document: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("ruleset failed validation:\n{0}")]
    Invalid(ValidationErrors),
    #[error("draft belongs to community `{found}` but ruleset is for `{expected}`")]
    CommunityMismatch { expected: String, found: String },
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("community `{community}` ruleset: {source}")]
    Ruleset {
        community: String,
        #[source]
        source: GuidanceError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed simulation config: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum OutcomeError {
    #[error("user `{user}` in `{community}`: {kind} event at t={timestamp} has no enrollment")]
    NotEnrolled { user: String, community: String, kind: &'static str, timestamp: i64 },
    #[error(
        "user `{user}` in `{community}`: {kind} event at t={timestamp} falls outside the follow-up window [{start}, {end})"
    )]
    OutsideWindow { user: String, community: String, kind: &'static str, timestamp: i64, start: i64, end: i64 },
    #[error("user `{user}` enrolled twice in `{community}`")]
    DuplicateEnrollment { user: String, community: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error, serde::Serialize, serde::Deserialize)]
#[serde(tag = "error", content = "detail", rename_all = "snake_case")]
pub enum AnalysisError {
    #[error("design cell {cell} has no observations")]
    EmptyCell { cell: String },
    #[error("design cell {cell} has an all-zero outcome; its coefficient is not identified")]
    ZeroCell { cell: String },
    #[error("outcome vector has a negative or non-finite value at row {row}")]
    InvalidOutcome { row: usize },
    #[error("design and outcome lengths differ ({design} vs {outcome})")]
    LengthMismatch { design: usize, outcome: usize },
    #[error("information matrix is singular; collinear columns: {}", columns.join(", "))]
    Singular { columns: Vec<String> },
    #[error("not identifiable: {0}")]
    NotIdentifiable(String),
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}
