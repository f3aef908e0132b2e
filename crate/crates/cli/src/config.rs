//! Layered run configuration: defaults, then a TOML file, then `--set`
//! overrides, then explicit flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use gradrev::adversarial::AdversarialConfig;
use gradrev::datasets::ToyShiftConfig;
use gradrev::experiments::{ExperimentMode, NetConfig};
use gradrev::pose::{PoseSpec, DEFAULT_FIT_THRESHOLD};

pub const ECHO_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    /// `[yaw, pitch, roll]` in degrees.
    pub poses: Vec<[f64; 3]>,
    pub fit_threshold: f64,
    /// 9-line `x y z` model file; the bundled model when unset.
    pub model: Option<PathBuf>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            poses: PoseSpec::default_grid()
                .iter()
                .map(|p| [p.yaw, p.pitch, p.roll])
                .collect(),
            fit_threshold: DEFAULT_FIT_THRESHOLD,
            model: None,
        }
    }
}

impl SynthConfig {
    pub fn pose_specs(&self) -> Result<Vec<PoseSpec>> {
        self.poses
            .iter()
            .map(|p| PoseSpec::new(p[0], p[1], p[2]).map_err(Into::into))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixConfig {
    pub seeds: Vec<u64>,
    pub modes: Vec<ExperimentMode>,
}

impl Default for MatrixConfig {
    fn default() -> Self {
        Self {
            seeds: vec![1, 2, 3, 4, 5],
            modes: ExperimentMode::ALL.to_vec(),
        }
    }
}

/// Everything a command needs. `data.seed` always follows the top-level
/// `seed`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub seed: u64,
    pub data: ToyShiftConfig,
    pub net: NetConfig,
    pub train: AdversarialConfig,
    pub synth: SynthConfig,
    pub matrix: MatrixConfig,
}

/// Parses a right-hand side as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| anyhow!("empty key in '{key}'"))?;
    let mut cursor = table;
    for part in parts {
        cursor = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("'{part}' in '{key}' is not a section"))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

impl CliConfig {
    /// Defaults overlaid with `file` (if any) and `key=value` overrides.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match file {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", path.display()))?
            }
            None => toml::Table::new(),
        };
        for (key, raw) in overrides {
            set_path(&mut table, key, parse_value(raw))?;
        }
        let mut config: CliConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| anyhow!("invalid configuration: {}", e.message()))?;
        config.data.seed = config.seed;
        Ok(config)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.data.seed = seed;
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    /// Writes the effective configuration into `dir`.
    pub fn echo(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(ECHO_FILE);
        std::fs::write(&path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }
}

/// Splits `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    if k.trim().is_empty() {
        return Err(format!("missing key in '{s}'"));
    }
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// `"yaw,pitch,roll"`.
pub fn parse_pose(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad angle '{p}' in pose '{s}'"))
        })
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [y, p, r] => Ok([*y, *p, *r]),
        _ => Err(format!("pose '{s}' must be yaw,pitch,roll")),
    }
}

pub fn ensure_valid(config: &CliConfig) -> Result<()> {
    config.data.validate()?;
    config.train.validate()?;
    config.synth.pose_specs()?;
    if config.synth.fit_threshold <= 0.0 {
        bail!("synth.fit_threshold must be positive");
    }
    Ok(())
}
