use std::fmt;
use std::path::Path;

use unlearn_eval_core::cka::CkaError;
use unlearn_eval_core::datagen::{GenError, TableError};
use unlearn_eval_core::datamodel::RecordError;
use unlearn_eval_core::judge::JudgeError;
use unlearn_eval_core::nmix::NMixError;
use unlearn_eval_core::refmetrics::LossAuditError;
use unlearn_eval_core::synth::SynthError;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_SCHEMA: u8 = 4;
pub const EXIT_NETWORK: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
    }

    pub fn schema(path: &Path, err: impl fmt::Display) -> Self {
        Self { code: EXIT_SCHEMA, message: format!("{}: {err}", path.display()) }
    }

    pub fn records(path: &Path, err: RecordError) -> Self {
        match err {
            RecordError::Io { source, .. } => Self::io(path, source),
            other => Self::schema(path, other),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = Result<T, CliError>;

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        let code = if matches!(e, TableError::Io { .. }) { EXIT_IO } else { EXIT_SCHEMA };
        Self { code, message: e.to_string() }
    }
}

impl From<CkaError> for CliError {
    fn from(e: CkaError) -> Self {
        let code = match e {
            CkaError::Io { .. } => EXIT_IO,
            CkaError::Parse { .. } | CkaError::Shape { .. } | CkaError::NonFinite { .. } => EXIT_SCHEMA,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<JudgeError> for CliError {
    fn from(e: JudgeError) -> Self {
        let code = match e {
            JudgeError::AllRequestsFailed { .. } => EXIT_NETWORK,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

macro_rules! usage_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::usage(e.to_string())
            }
        })*
    };
}

usage_from!(GenError, SynthError, NMixError, LossAuditError);
