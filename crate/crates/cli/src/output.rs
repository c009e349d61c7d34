//! Exit codes, run manifests and small file helpers.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sourcetrace::evaluation::EvaluationError;
use sourcetrace::generators::GeneratorError;
use sourcetrace::{EstimationError, GraphError};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }

    pub fn input(message: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }

    pub fn infeasible(message: impl fmt::Display) -> Self {
        CliError {
            code: EXIT_INFEASIBLE,
            message: message.to_string(),
        }
    }
}

fn estimation_code(e: &EstimationError) -> u8 {
    match e {
        EstimationError::TooLarge { .. }
        | EstimationError::Disconnected
        | EstimationError::NoSingleSource
        | EstimationError::SourceCount { .. }
        | EstimationError::Absorbed
        | EstimationError::Unreachable { .. } => EXIT_INFEASIBLE,
        _ => EXIT_INPUT,
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        CliError {
            code: estimation_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::input(e)
    }
}

impl From<GeneratorError> for CliError {
    fn from(e: GeneratorError) -> Self {
        match e {
            GeneratorError::Unattainable { .. } => CliError::infeasible(e),
            GeneratorError::Invalid(_) => CliError::input(e),
        }
    }
}

impl From<EvaluationError> for CliError {
    fn from(e: EvaluationError) -> Self {
        let code = match &e {
            EvaluationError::Method { source, .. } | EvaluationError::Simulation { source, .. } => {
                estimation_code(source)
            }
            EvaluationError::Generator(GeneratorError::Unattainable { .. }) => EXIT_INFEASIBLE,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written as `manifest.json` into every output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<InputDigest>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn input(mut self, path: &Path) -> CliResult<Self> {
        let digest = Sha256::digest(read_file(path)?);
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(digest),
        });
        Ok(self)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_file(&dir.join("manifest.json"), json + "\n")
    }
}
