use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("time {t} s outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("timestamps not strictly increasing at index {index} ({prev} s then {next} s)")]
    Ordering { index: usize, prev: f64, next: f64 },

    #[error("underdetermined: need at least {needed} ranges, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error("degenerate anchor geometry: {0}")]
    DegenerateGeometry(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: u64, msg: String },

    #[error("{file}:{line}: unknown anchor id {anchor_id}")]
    UnknownAnchor { file: String, line: u64, anchor_id: u32 },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Config(_) => 2,
            Error::Numerical(_) => 4,
            _ => 3,
        }
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
