//! Error classification behind the documented exit codes:
//! 2 = I/O or schema, 3 = empty or degenerate data, 4 = broken invariant.

use std::fmt;
use std::path::{Path, PathBuf};

use triage_core::assign::AssignError;
use triage_core::eval::EvalError;
use triage_core::ingest::IngestError;
use triage_core::scoring::ScoreError;
use triage_core::text::TextError;
use triage_core::topics::TopicError;

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Config { path: PathBuf, message: String },
    Schema(String),
    Degenerate(String),
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config { .. } | CliError::Schema(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Invariant(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Config { path, message } => {
                write!(f, "invalid config {}: {message}", path.display())
            }
            CliError::Schema(message) => write!(f, "{message}"),
            CliError::Degenerate(message) => write!(f, "{message}"),
            CliError::Invariant(message) => write!(f, "internal invariant violated: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::EmptyDataset => {
                CliError::Degenerate("empty dataset after filtering".into())
            }
            IngestError::MissingDuration { .. } => CliError::Degenerate(e.to_string()),
            IngestError::SchemaMismatch { .. }
            | IngestError::MalformedRows(_)
            | IngestError::InvalidMinFixes
            | IngestError::Io(_) => CliError::Schema(e.to_string()),
        }
    }
}

impl From<TextError> for CliError {
    fn from(e: TextError) -> Self {
        match e {
            TextError::EmptyCorpus | TextError::EmptyVocabulary => {
                CliError::Degenerate(e.to_string())
            }
            TextError::InvalidMinDf => CliError::Schema(e.to_string()),
        }
    }
}

impl From<TopicError> for CliError {
    fn from(e: TopicError) -> Self {
        match e {
            TopicError::EmptyCorpus | TopicError::EmptyDocument { .. } => {
                CliError::Degenerate(e.to_string())
            }
            TopicError::InvalidConfig(_) | TopicError::InvalidRange { .. } => {
                CliError::Schema(e.to_string())
            }
            TopicError::SchemaVersion { .. } | TopicError::VocabularyMismatch { .. } => {
                CliError::Schema(e.to_string())
            }
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::EmptyTraining => CliError::Degenerate(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<AssignError> for CliError {
    fn from(e: AssignError) -> Self {
        match e {
            AssignError::NoBugs | AssignError::NoDevelopers => {
                CliError::Degenerate(e.to_string())
            }
            AssignError::Score(inner) => CliError::from(inner),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::DatasetTooSmall { .. } | EvalError::NoEligibleDevelopers { .. } => {
                CliError::Degenerate(e.to_string())
            }
            EvalError::InvalidFold { .. } => CliError::Invariant(e.to_string()),
            EvalError::Ingest(inner) => inner.into(),
            EvalError::Text(inner) => inner.into(),
            EvalError::Topic(inner) => inner.into(),
            EvalError::Score(inner) => inner.into(),
            EvalError::Assign(inner) => inner.into(),
        }
    }
}
