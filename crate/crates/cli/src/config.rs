//! Run configuration: TOML sections per subcommand, unknown keys rejected.

use std::fs;
use std::path::Path;

use cavity_cluster::LatticeConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub lattice: LatticeSection,
    pub gamma_sweep: Option<SweepSection>,
    pub cluster: Option<ClusterSection>,
    pub oracle: Option<OracleSection>,
    pub mbqc: Option<MbqcSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    pub preset: Option<String>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    #[serde(default = "default_dim")]
    pub m: usize,
    #[serde(default = "default_dim")]
    pub n: usize,
    #[serde(default = "default_j")]
    pub j: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_g")]
    pub g: f64,
    #[serde(default = "default_true")]
    pub periodic: bool,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { m: default_dim(), n: default_dim(), j: default_j(), delta: 0.0, g: default_g(), periodic: true }
    }
}

impl LatticeSection {
    pub fn to_config(&self) -> Result<LatticeConfig, CliError> {
        LatticeConfig::with_coupling(self.m, self.n, self.g, self.j, self.delta).map_err(|e| CliError::Config(format!("[lattice]: {e}")))
    }
}

/// Grids are either explicit (`*_values`) or `start`, `stop`, `step`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Interaction time of the detuning sweep.
    #[serde(default = "default_sweep_tau")]
    pub tau: f64,
    pub delta_start: Option<f64>,
    pub delta_stop: Option<f64>,
    pub delta_step: Option<f64>,
    pub delta_values: Option<Vec<f64>>,
    pub tau_start: Option<f64>,
    pub tau_stop: Option<f64>,
    pub tau_step: Option<f64>,
    pub tau_values: Option<Vec<f64>>,
    #[serde(default = "default_separations")]
    pub separations: Vec<[i64; 2]>,
}

impl SweepSection {
    pub fn delta_grid(&self) -> Result<Vec<f64>, CliError> {
        grid("delta", self.delta_values.as_deref(), self.delta_start, self.delta_stop, self.delta_step)
    }

    pub fn tau_grid(&self) -> Result<Vec<f64>, CliError> {
        grid("tau", self.tau_values.as_deref(), self.tau_start, self.tau_stop, self.tau_step)
    }
}

fn grid(name: &str, values: Option<&[f64]>, start: Option<f64>, stop: Option<f64>, step: Option<f64>) -> Result<Vec<f64>, CliError> {
    let empty = || CliError::Config(format!("[gamma_sweep]: {name} grid is empty"));
    let points = match (values, start, stop, step) {
        (Some(v), None, None, None) => v.to_vec(),
        (None, Some(a), Some(b), Some(h)) => {
            if !(a.is_finite() && b.is_finite() && h.is_finite()) {
                return Err(CliError::Config(format!("[gamma_sweep]: {name} grid bounds must be finite")));
            }
            if h <= 0.0 || b < a {
                return Err(empty());
            }
            let count = ((b - a) / h + 1e-9).floor() as usize + 1;
            (0..count).map(|i| a + i as f64 * h).collect()
        }
        (None, None, None, None) => Vec::new(),
        _ => {
            return Err(CliError::Config(format!(
                "[gamma_sweep]: give either {name}_values or all of {name}_start, {name}_stop, {name}_step"
            )))
        }
    };
    if points.is_empty() {
        return Err(empty());
    }
    if points.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("[gamma_sweep]: {name} grid has a non-finite point")));
    }
    Ok(points)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    /// Interaction time; solved for `4 Gamma_nn = pi` when absent.
    pub tau: Option<f64>,
    #[serde(default)]
    pub selection: Selection,
    /// Exit with status 1 when the fidelity falls below this.
    pub min_fidelity: Option<f64>,
    #[serde(default = "default_true")]
    pub snapshot: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    #[default]
    Nn,
    Full,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    /// Interaction time; solved for `4 Gamma_nn = pi` when absent.
    pub tau: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_oracle_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_phase_tolerance")]
    pub phase_tolerance: f64,
    #[serde(default = "default_residual_limit")]
    pub residual_limit: f64,
    #[serde(default = "default_true")]
    pub reset_time_origin: bool,
    /// Leave one site out of `S_z` and expect the identities to fail.
    #[serde(default)]
    pub corrupt_identity: bool,
    /// Second truncation whose pair phases are compared with `n_max`.
    pub drift_n_max: Option<usize>,
    #[serde(default = "default_drift_tolerance")]
    pub drift_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MbqcSection {
    #[serde(default)]
    pub source: Source,
    /// Pattern file, used when `--pattern` is not given.
    pub pattern: Option<String>,
    #[serde(default)]
    pub target: Target,
    /// Rotation angles for `target = "euler"`.
    #[serde(default)]
    pub angles: Vec<f64>,
    #[serde(default = "default_mbqc_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    #[default]
    Reference,
    Generated,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    None,
    Identity,
    Hadamard,
    Cnot,
    Euler,
}

fn default_dim() -> usize {
    19
}
fn default_j() -> f64 {
    0.1
}
fn default_g() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}
fn default_sweep_tau() -> f64 {
    3.0
}
fn default_separations() -> Vec<[i64; 2]> {
    vec![[1, 0], [1, 1], [2, 0], [2, 1], [3, 0]]
}
fn default_n_max() -> usize {
    4
}
fn default_oracle_tolerance() -> f64 {
    1e-10
}
fn default_phase_tolerance() -> f64 {
    1e-6
}
fn default_residual_limit() -> f64 {
    1e-8
}
fn default_drift_tolerance() -> f64 {
    1e-7
}
fn default_mbqc_tolerance() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e: toml::de::Error| {
            let message = e.message().to_string();
            match e.span() {
                Some(span) => {
                    let (line, column) = line_column(text, span.start);
                    CliError::Config(format!("line {line}, column {column}: {message}"))
                }
                None => CliError::Config(message),
            }
        })
    }

    /// The configuration as TOML, for output headers.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, column)
}
