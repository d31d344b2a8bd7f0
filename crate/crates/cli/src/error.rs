use std::fmt;
use std::path::Path;

/// Exit statuses. Clap reports its own parse errors with [`USAGE`] too.
pub const USAGE: i32 = 2;
pub const IO: i32 = 3;
pub const DATA: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::Io(_) => IO,
            CliError::Data(_) => DATA,
        }
    }

    /// Undecodable input is a data problem, not an I/O failure.
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        let msg = format!("{}: {err}", path.display());
        match err.kind() {
            std::io::ErrorKind::InvalidData => CliError::Data(msg),
            _ => CliError::Io(msg),
        }
    }

    /// Wraps a library error that arose while processing `path`.
    pub fn in_file(path: &Path, err: bpetrim::Error) -> Self {
        let mut e = CliError::from(err);
        match &mut e {
            CliError::Usage(m) | CliError::Io(m) | CliError::Data(m) => {
                *m = format!("{}: {m}", path.display());
            }
        }
        e
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
        }
    }
}

impl From<bpetrim::Error> for CliError {
    fn from(err: bpetrim::Error) -> Self {
        use bpetrim::Error as E;
        match err {
            E::Io(e) => CliError::Io(e.to_string()),
            E::InvalidSize { .. } | E::InvalidArgument(_) => CliError::Usage(err.to_string()),
            E::EmptyCorpus
            | E::ConfigMismatch(_)
            | E::MarkerInWord { .. }
            | E::Inconsistent(_)
            | E::Parse { .. } => CliError::Data(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
