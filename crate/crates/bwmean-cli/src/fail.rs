use std::fmt;

/// Everything that can stop a subcommand, keyed to the exit codes documented
/// in `--help`: 2 config, 3 I/O, 4 domain, 5 invariant.
#[derive(Debug)]
pub enum Failure {
    /// Unparseable or invalid configuration (bad flag value, bad config
    /// file, unknown or missing key).
    Config(String),
    /// Filesystem trouble reading the config or writing the output.
    Io(String),
    /// A library precondition rejected the requested computation.
    Domain(bwmean::Error),
    /// The computation ran, but a numerical check it promises did not hold.
    Invariant(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Domain(_) => 4,
            Failure::Invariant(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(msg) => write!(f, "config error: {msg}"),
            Failure::Io(msg) => write!(f, "i/o error: {msg}"),
            Failure::Domain(e) => write!(f, "domain error: {e}"),
            Failure::Invariant(msg) => write!(f, "invariant failure: {msg}"),
        }
    }
}

impl From<bwmean::Error> for Failure {
    fn from(e: bwmean::Error) -> Failure {
        Failure::Domain(e)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;
