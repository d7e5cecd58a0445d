use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("duplicate vote by annotator `{annotator}` on question `{question}` (line {line})")]
    DuplicateVote {
        question: String,
        annotator: String,
        line: u64,
    },
    #[error("option {option} out of range for {num_options} declared options (line {line})")]
    OptionOutOfRange {
        option: usize,
        num_options: usize,
        line: u64,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("question `{question}` has {have} votes, {need} required")]
    InsufficientVotes {
        question: String,
        have: usize,
        need: usize,
    },
    #[error("cannot remove option {0}: it is out of range or the only option")]
    InvalidClass(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("assignment is not hard (one-hot)")]
    NotHard,
    #[error("empty vote list")]
    EmptyVotes,
    #[error("unknown question `{0}` in gold labels")]
    UnknownQuestion(String),
    #[error("unknown option label `{0}`")]
    UnknownOption(String),
    #[error("gold labels cover no questions")]
    EmptyGold,
    #[error("algorithm `{0}` not present in sweep")]
    MissingAlgorithm(String),
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("plot: {0}")]
    Plot(String),
}

/// Reads an input file, tagging failures as input errors.
pub(crate) fn read_input(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read { path: path.to_owned(), source })
}

impl Error {
    /// Errors caused by bad user input (files, flags, configuration).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::Plot(_))
    }
}
