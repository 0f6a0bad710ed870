//! On-disk run configuration (JSON) and flag overrides.

use std::path::{Path, PathBuf};

use mellin_qfe::simkit::{ExperimentSpec, PenaltySource, RunMode, Setting};
use mellin_qfe::{DensitySpec, KGrid, QuadratureRule, Smoothness, WeightSpec};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    /// Overridden by `--out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            formats: default_formats(),
            dir: None,
        }
    }
}

impl OutputOptions {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Inputs of the `oracle` command beyond the laws themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleOptions {
    /// Cut-off for `θ_k`, `Λ(k)` and the MSE bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Smoothness of the signal; enables the oracle cut-off search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<Smoothness>,
    /// Exponent of the risk weight `(1 + t²)^{a/2}`.
    #[serde(default)]
    pub a: f64,
}

/// Everything a command needs. Unknown keys are rejected so that typos fail
/// loudly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Required by `simulate` and `oracle`, and by `partial` penalties.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<DensitySpec>,
    pub error: DensitySpec,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub weight: WeightSpec,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_grid")]
    pub grid: KGrid,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub penalty: PenaltySource,
    #[serde(default)]
    pub quadrature: QuadratureRule,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub oracle: OracleOptions,
    /// 0 is silent; 1 reports progress on stderr.
    #[serde(default)]
    pub verbosity: u8,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

fn default_c() -> f64 {
    mellin_qfe::DEFAULT_C
}

fn default_kappa() -> f64 {
    mellin_qfe::DEFAULT_KAPPA
}

fn default_n_list() -> Vec<usize> {
    vec![100, 500]
}

fn default_replications() -> usize {
    50
}

fn default_grid() -> KGrid {
    KGrid::arithmetic(0.1, 0.1, 2.0).expect("static grid")
}

impl RunConfig {
    /// Parses JSON text after applying `key.path=value` overrides. Values
    /// are read as JSON when they parse, as strings otherwise.
    pub fn from_json_with_overrides(text: &str, overrides: &[String]) -> CliResult<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| CliError::usage(format!("config: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        serde_json::from_value(value).map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json_with_overrides(&text, overrides)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn require_signal(&self) -> CliResult<DensitySpec> {
        self.signal
            .ok_or_else(|| CliError::usage("config: this command needs a `signal` law"))
    }

    /// Named simulation setting when the pair is one of the three standard
    /// ones, `signal~error` otherwise.
    pub fn setting_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let Some(signal) = self.signal else {
            return format!("sample~{}", self.error);
        };
        Setting::ALL
            .iter()
            .find(|s| s.signal() == signal && s.error() == self.error)
            .map(|s| s.label().to_string())
            .unwrap_or_else(|| format!("{signal}~{}", self.error))
    }

    pub fn experiment(&self) -> CliResult<ExperimentSpec> {
        let spec = ExperimentSpec {
            label: Some(self.setting_label()),
            signal: self.require_signal()?,
            error: self.error,
            c: self.c,
            weight: self.weight,
            n_list: self.n_list.clone(),
            replications: self.replications,
            grid: self.grid.clone(),
            kappa: self.kappa,
            seed: self.seed,
            mode: self.mode,
            penalty: self.penalty,
            quadrature: self.quadrature,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn apply_override(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("override `{assignment}` is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::usage(format!("override `{path}`: `{key}` is not inside an object")))?;
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), parsed);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Err(CliError::usage("empty override path"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"signal": {"law": "beta21"}, "error": {"law": "pareto1"}}"#;

    #[test]
    fn defaults_fill_in() {
        let c = RunConfig::from_json_with_overrides(MINIMAL, &[]).unwrap();
        assert_eq!(c.c, 0.5);
        assert_eq!(c.kappa, 1e-5);
        assert_eq!(c.n_list, vec![100, 500]);
        assert_eq!(c.grid.len(), 20);
        assert_eq!(c.setting_label(), "os-os");
    }

    #[test]
    fn round_trip() {
        let mut c = RunConfig::from_json_with_overrides(MINIMAL, &[]).unwrap();
        c.oracle.smoothness = Some(Smoothness::Ordinary { s: 0.5 });
        c.output.dir = Some("out".into());
        let back = RunConfig::from_json_with_overrides(&c.to_json(), &[]).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn overrides_nested_and_scalar() {
        let c = RunConfig::from_json_with_overrides(
            MINIMAL,
            &[
                "kappa=0.5".into(),
                "quadrature.nodes_per_unit=64".into(),
                "label=mine".into(),
                "error.law=no_error".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.kappa, 0.5);
        assert_eq!(c.quadrature.nodes_per_unit, 64);
        assert_eq!(c.setting_label(), "mine");
        assert_eq!(c.error, DensitySpec::NoError);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::from_json_with_overrides(MINIMAL, &["kapa=1".into()]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }
}
