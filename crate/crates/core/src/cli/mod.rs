//! Pipelines behind the `dimlab` binary: configuration, artifact writing
//! with provenance sidecars, and one function per subcommand.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use commands::{
    compose_demo, decode_cmd, encode_cmd, experiment, extract_cmd, gen, guard_demo, profile_cmd, ComposeDemoSummary,
    EncodeSummary, ExtractInput, ExtractOutcome, GuardDemoSummary, ProfileSummary, SummaryRow,
};
pub use config::{
    load_config_file, ComposeDemoConfig, ConfigFile, ExperimentConfig, GridSpec, GuardDemoConfig, SCHEMA_VERSION,
};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configs or input files.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Extract(#[from] crate::extractor::ExtractError),
    #[error(transparent)]
    Codec(#[from] crate::codec::CodecError),
    #[error(transparent)]
    Dim(#[from] crate::dimension::DimError),
    #[error(transparent)]
    Gen(#[from] crate::generators::GenError),
    #[error(transparent)]
    Reduction(#[from] crate::reductions::ReductionError),
}

impl CliError {
    /// 2 for usage errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Gen(_) => 2,
            _ => 1,
        }
    }
}

impl From<crate::seqcore::SeqFileError> for CliError {
    fn from(e: crate::seqcore::SeqFileError) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Hash of the canonical JSON form of a command's configuration.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("configs serialize"))
}

/// Where outputs go and what the sidecars record.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
    command: String,
    config_sha256: String,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: &'a str,
    file: &'a str,
    sha256: String,
}

impl Artifacts {
    pub fn new<T: Serialize>(dir: &Path, command: &str, config: &T) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self { dir: dir.to_path_buf(), command: command.to_string(), config_sha256: config_hash(config) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn config_sha256(&self) -> &str {
        &self.config_sha256
    }

    /// Writes `name` and `name.meta.json` atomically.
    pub fn write(&self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        crate::seqcore::write_atomic(&path, bytes).map_err(io_err(&path))?;
        let meta = Sidecar {
            tool: "dimlab",
            version: TOOL_VERSION,
            command: &self.command,
            config_sha256: &self.config_sha256,
            file: name,
            sha256: sha256_hex(bytes),
        };
        let mut json = serde_json::to_vec_pretty(&meta).expect("sidecar serializes");
        json.push(b'\n');
        let side = self.dir.join(format!("{name}.meta.json"));
        crate::seqcore::write_atomic(&side, &json).map_err(io_err(&side))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut json = serde_json::to_vec_pretty(value).expect("reports serialize");
        json.push(b'\n');
        self.write(name, &json)
    }

    pub fn write_seq(&self, name: &str, bits: &[bool]) -> CliResult<PathBuf> {
        self.write(name, &crate::seqcore::pack(bits))
    }
}

/// Splits an output file path into an artifact directory and file name.
pub fn split_out(path: &Path) -> CliResult<(PathBuf, String)> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{}: not a file path", path.display())))?
        .to_string_lossy()
        .into_owned();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
    Ok((dir, name))
}
