use std::io;
use std::path::PathBuf;

use kmerco::metrics::MetricsError;
use kmerco::oracle::OracleError;
use kmerco::{FormatError, KmerError, ParseError, PipelineError, PlanError};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Input(#[from] ParseError),
    #[error("{path}: {source}")]
    Filter { path: PathBuf, source: FormatError },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("cannot build report: {0}")]
    Metrics(#[from] MetricsError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Io { .. }
            | CliError::Input(_)
            | CliError::Metrics(_) => EXIT_INPUT,
            CliError::Filter { source, .. } => match source {
                FormatError::Io(_) => EXIT_INPUT,
                _ => EXIT_INTEGRITY,
            },
            CliError::Pipeline(e) => match e {
                PipelineError::Kmer(_) | PipelineError::ZeroTau => EXIT_USAGE,
                PipelineError::Integrity { .. } => EXIT_INTEGRITY,
                _ => EXIT_INPUT,
            },
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<KmerError> for CliError {
    fn from(e: KmerError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Kmer(e) => e.into(),
            OracleError::Input(e) => e.into(),
        }
    }
}
