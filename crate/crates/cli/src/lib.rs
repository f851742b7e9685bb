// Copyright 2026 The itree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Command line front end: sampling, exact distributions, basis solving,
//! QASM export, λ sweeps and histograms.

pub mod args;
pub mod commands;
pub mod manifest;

use std::fmt;

use serde::Serialize;

/// A failed command: exit code plus a machine-readable error.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOO_LARGE: i32 = 3;
pub const EXIT_NOT_DECOUPLABLE: i32 = 4;
pub const EXIT_INCONSISTENT: i32 = 5;

impl CliError {
    pub fn new(code: i32, kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(EXIT_CONFIG, "ConfigError", message)
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Self::new(
            EXIT_FAILURE,
            "IoError",
            format!("{}: {}", path.display(), err),
        )
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            code: i32,
            message: &'a str,
        }
        serde_json::to_string(&Line {
            error: &self.kind,
            code: self.code,
            message: &self.message,
        })
        .expect("error line serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<itree::Error> for CliError {
    fn from(err: itree::Error) -> Self {
        use itree::Error as E;
        let (code, kind) = match &err {
            E::OutOfRange { .. } => (EXIT_CONFIG, "OutOfRange"),
            E::NonFinite(_) => (EXIT_CONFIG, "NonFinite"),
            E::LengthMismatch { .. } => (EXIT_CONFIG, "LengthMismatch"),
            E::Parse(_) => (EXIT_CONFIG, "ParseError"),
            E::TooLarge { .. } => (EXIT_TOO_LARGE, "TooLarge"),
            E::NotDecouplable(_) => (EXIT_NOT_DECOUPLABLE, "NotDecouplable"),
            E::InconsistentAmplitudes { .. } => (EXIT_INCONSISTENT, "InconsistentAmplitudes"),
            E::DegenerateDenominator => (EXIT_FAILURE, "DegenerateDenominator"),
            E::UnsupportedGate(_) => (EXIT_FAILURE, "UnsupportedGate"),
            E::InvalidGate(_) => (EXIT_FAILURE, "InvalidGate"),
            E::DegenerateBranch(_) => (EXIT_FAILURE, "DegenerateBranch"),
            E::KeyMismatch(_) => (EXIT_FAILURE, "KeyMismatch"),
            E::EmptyStream => (EXIT_FAILURE, "EmptyStream"),
            E::InsufficientExpected { .. } => (EXIT_FAILURE, "InsufficientExpected"),
        };
        CliError::new(code, kind, err.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parse arguments and run one command inside a pool of the requested size.
pub fn run<I, T>(argv: I) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{}", e);
                return Ok(());
            }
            return Err(CliError::new(
                EXIT_CONFIG,
                "UsageError",
                e.to_string().trim().to_string(),
            ));
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.threads {
        pool = pool.num_threads(threads);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::new(EXIT_FAILURE, "ThreadPool", e.to_string()))?;
    pool.install(|| commands::dispatch(&cli.command))
}
