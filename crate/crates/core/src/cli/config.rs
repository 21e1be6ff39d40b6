use std::path::Path;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use super::{CliError, CliResult};
use crate::complexity::ComplexityOracle;
use crate::dimension::default_grid_ratio;
use crate::extractor::ExtractOverrides;
use crate::generators::GeneratorSpec;
use crate::ratio::serde_ratio;
use crate::reductions::{GuardSchedule, MachineSpec};

pub const SCHEMA_VERSION: u32 = 1;

/// Geometric sample grid, plus explicit extra points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_grid_start")]
    pub start: u64,
    #[serde(default = "default_grid_ratio", with = "serde_ratio")]
    pub ratio: Rational64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<u64>,
    /// Defaults to `max(256, ⌈N/32⌉)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_start: Option<u64>,
}

fn default_grid_start() -> u64 {
    64
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { start: default_grid_start(), ratio: default_grid_ratio(), extra: Vec::new(), tail_start: None }
    }
}

impl GridSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.ratio <= Rational64::from_integer(1) {
            return Err(CliError::Usage(format!("grid ratio {} must exceed 1", self.ratio)));
        }
        Ok(())
    }

    pub fn points(&self, n: u64) -> Vec<u64> {
        crate::dimension::geometric_grid(self.start.min(n).max(1), self.ratio, n, &self.extra)
    }
}

/// One pipeline run: generate, profile, encode, extract, re-profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub generator: GeneratorSpec,
    /// Source prefix length.
    pub n: u64,
    #[serde(default)]
    pub oracle: ComplexityOracle,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(with = "serde_ratio")]
    pub epsilon: Rational64,
    /// Source bits `R′` must cover; defaults to `n − n/20`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_n: Option<u64>,
    #[serde(default)]
    pub extractor: ExtractOverrides,
    /// Relative to the config file unless absolute; defaults to the name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn target_n(&self) -> u64 {
        self.target_n.unwrap_or(self.n - self.n / 20)
    }

    pub fn validate(&self) -> CliResult<()> {
        check_version(self.schema_version)?;
        let bad = |m: String| Err(CliError::Usage(format!("experiment {:?}: {m}", self.name)));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad("name must be a plain, non-empty file name".into());
        }
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.epsilon <= Rational64::from_integer(0) || self.epsilon >= Rational64::from_integer(1) {
            return bad("epsilon must lie in (0, 1)".into());
        }
        if self.target_n() == 0 || self.target_n() > self.n {
            return bad(format!("target_n must lie in [1, {}]", self.n));
        }
        self.grid.validate()
    }
}

/// A config file holds one experiment or a list of them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub experiments: Vec<ExperimentConfig>,
}

fn check_version(v: u32) -> CliResult<()> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Usage(format!("unsupported schema_version {v} (this build reads {SCHEMA_VERSION})")));
    }
    Ok(())
}

fn read_json(path: &Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn from_value<T: for<'de> Deserialize<'de>>(path: &Path, v: serde_json::Value) -> CliResult<T> {
    serde_json::from_value(v).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Reads an experiment file, validating every entry.
pub fn load_config_file(path: &Path) -> CliResult<ConfigFile> {
    let v = read_json(path)?;
    let file = if v.get("experiments").is_some() {
        from_value::<ConfigFile>(path, v)?
    } else {
        let one: ExperimentConfig = from_value(path, v)?;
        ConfigFile { schema_version: one.schema_version, experiments: vec![one] }
    };
    check_version(file.schema_version)?;
    for e in &file.experiments {
        e.validate()?;
    }
    let mut names: Vec<&str> = file.experiments.iter().map(|e| e.name.as_str()).collect();
    names.sort_unstable();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(CliError::Usage(format!("duplicate experiment name {:?}", w[0])));
    }
    Ok(file)
}

fn default_law_n() -> u64 {
    10_000
}

fn default_budget() -> u64 {
    200_000_000
}

/// Composition-law and double-encoding demo.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComposeDemoConfig {
    pub schema_version: u32,
    pub source: GeneratorSpec,
    /// Source length for the double-encoding run (rounded up to whole blocks).
    pub n: u64,
    #[serde(default)]
    pub oracle: ComplexityOracle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_start: Option<u64>,
    /// Output bits checked for each machine pair.
    #[serde(default = "default_law_n")]
    pub law_n: u64,
    /// `[first, second]` pairs run on the encoded source.
    #[serde(default = "ComposeDemoConfig::default_pairs")]
    pub pairs: Vec<[MachineSpec; 2]>,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

impl ComposeDemoConfig {
    pub fn default_pairs() -> Vec<[MachineSpec; 2]> {
        let codec = MachineSpec::CodecDecode { oracle: ComplexityOracle::proxy() };
        vec![
            [codec.clone(), MachineSpec::Identity],
            [codec.clone(), MachineSpec::PairXor],
            [codec, MachineSpec::FirstBit],
            [MachineSpec::Identity, MachineSpec::by_name("double").expect("registry")],
            [MachineSpec::by_name("double").expect("registry"), MachineSpec::Negate],
        ]
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let c: Self = from_value(path, read_json(path)?)?;
        check_version(c.schema_version)?;
        Ok(c)
    }
}

/// Guard combinator demo.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardDemoConfig {
    pub schema_version: u32,
    pub source: GeneratorSpec,
    /// Source length available to the machines.
    pub n: u64,
    /// Output bits requested.
    pub output_len: u64,
    pub machine: MachineSpec,
    #[serde(with = "serde_ratio")]
    pub alpha_prime: Rational64,
    #[serde(default)]
    pub oracle: ComplexityOracle,
    #[serde(default)]
    pub schedule: GuardSchedule,
    #[serde(default = "default_budget")]
    pub step_budget: u64,
}

impl GuardDemoConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let c: Self = from_value(path, read_json(path)?)?;
        check_version(c.schema_version)?;
        let zero = Rational64::from_integer(0);
        if c.alpha_prime <= zero || c.alpha_prime >= Rational64::from_integer(1) {
            return Err(CliError::Usage("alpha_prime must lie in (0, 1)".into()));
        }
        Ok(c)
    }
}
