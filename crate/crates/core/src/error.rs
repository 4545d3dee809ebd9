// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: cycle {cycle} does not follow previous cycle {previous}")]
    NonMonotonicCycle {
        line: usize,
        cycle: u64,
        previous: u64,
    },

    #[error("address {address:#x} does not fit in {width} address bits")]
    AddressOutOfRange { address: u64, width: u32 },

    #[error("invalid calibration: {0}")]
    Calibration(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("no base delay for {kind} with fanin {fanin}")]
    MissingGateDelay { kind: String, fanin: usize },

    #[error(
        "degradation overflow: threshold shift {delta_vth:.4} V reaches the overdrive {overdrive:.4} V"
    )]
    DegradationOverflow { delta_vth: f64, overdrive: f64 },

    #[error("empty trace")]
    EmptyTrace,

    #[error("search did not converge: {0}")]
    Convergence(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attach the file a nested error came from.
    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping file context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::File { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::Calibration(_) | Error::OutOfRange(_) => 2,
            Error::MissingGateDelay { .. } => 2,
            Error::Parse { .. }
            | Error::NonMonotonicCycle { .. }
            | Error::AddressOutOfRange { .. }
            | Error::EmptyTrace => 3,
            Error::Convergence(_) => 4,
            Error::DegradationOverflow { .. } => 5,
            Error::Io(_) | Error::Json(_) | Error::Csv(_) | Error::File { .. } => 1,
        }
    }
}
