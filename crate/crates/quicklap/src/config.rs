//! Run configuration: a TOML file with sections mirroring the library
//! modules, plus dotted-path overrides from the command line (`--set a.b=v`)
//! and the environment (`QUICKLAP_SET_a__b=v`). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{default_utterances, Algorithm, SweepConfig};
use crate::fusion::Hyperparameters;
use crate::language::BackendConfig;
use crate::planner::PlannerConfig;

pub const ENV_OVERRIDE_PREFIX: &str = "QUICKLAP_SET_";

/// `[experiment]` section: the sweep grid and episode shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub scenarios: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub utterances: Vec<String>,
    pub horizons: Vec<usize>,
    pub seeds: Vec<u64>,
    pub episode_length: usize,
    pub intervention_windows: Vec<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_weights: Option<Vec<f64>>,
    pub workers: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let sweep = SweepConfig::default();
        Self {
            scenarios: sweep.scenarios,
            algorithms: sweep.algorithms,
            utterances: default_utterances(),
            horizons: sweep.horizons,
            seeds: sweep.seeds,
            episode_length: sweep.episode_length,
            intervention_windows: sweep.intervention_windows,
            initial_weights: None,
            workers: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Whole-run configuration. Section names mirror the library modules;
/// `[backend]` and `[hyperparameters]` are accepted aliases for `[language]`
/// and `[fusion]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentSection,
    pub planner: PlannerConfig,
    #[serde(alias = "hyperparameters")]
    pub fusion: Hyperparameters,
    #[serde(alias = "backend")]
    pub language: BackendConfig,
}

impl RunConfig {
    pub fn to_sweep(&self) -> SweepConfig {
        SweepConfig {
            scenarios: self.experiment.scenarios.clone(),
            algorithms: self.experiment.algorithms.clone(),
            utterances: self.experiment.utterances.clone(),
            horizons: self.experiment.horizons.clone(),
            seeds: self.experiment.seeds.clone(),
            episode_length: self.experiment.episode_length,
            intervention_windows: self.experiment.intervention_windows.clone(),
            planner: self.planner,
            hyperparameters: self.fusion,
            backend: self.language.clone(),
            initial_weights: self.experiment.initial_weights.clone(),
            workers: self.experiment.workers,
        }
    }

    pub fn from_sweep(sweep: &SweepConfig) -> Self {
        Self {
            experiment: ExperimentSection {
                scenarios: sweep.scenarios.clone(),
                algorithms: sweep.algorithms.clone(),
                utterances: sweep.utterances.clone(),
                horizons: sweep.horizons.clone(),
                seeds: sweep.seeds.clone(),
                episode_length: sweep.episode_length,
                intervention_windows: sweep.intervention_windows.clone(),
                initial_weights: sweep.initial_weights.clone(),
                workers: sweep.workers,
                out_dir: PathBuf::from("out"),
            },
            planner: sweep.planner,
            fusion: sweep.hyperparameters,
            language: sweep.backend.clone(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| Error::InvalidConfig(format!("serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.fusion.validate()?;
        if self.experiment.episode_length == 0 {
            return Err(Error::InvalidConfig("experiment.episode_length must be positive".into()));
        }
        Ok(())
    }
}

/// Map the accepted section aliases onto canonical field names.
fn canonical_path(path: &str) -> String {
    let mut parts: Vec<&str> = path.split('.').collect();
    if let Some(first) = parts.first_mut() {
        match *first {
            "backend" => *first = "language",
            "hyperparameters" => *first = "fusion",
            _ => {}
        }
    }
    parts.join(".")
}

fn parse_override_value(raw: &str) -> toml::Value {
    // values are TOML fragments; bare words fall back to strings
    #[derive(Deserialize)]
    struct Wrapper {
        v: toml::Value,
    }
    match toml::from_str::<Wrapper>(&format!("v = {raw}")) {
        Ok(w) => w.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(root: &mut toml::Value, path: &str, raw: &str) -> Result<()> {
    let path = canonical_path(path);
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidConfig(format!("invalid override path `{path}`")));
    }
    let mut node = root;
    for segment in &segments[..segments.len() - 1] {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::InvalidConfig(format!("override path `{path}` crosses a non-table value"))
        })?;
        node = table
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node.as_table_mut().ok_or_else(|| {
        Error::InvalidConfig(format!("override path `{path}` crosses a non-table value"))
    })?;
    table.insert(
        segments.last().unwrap().to_string(),
        parse_override_value(raw),
    );
    Ok(())
}

fn split_key_value(spec: &str) -> Result<(String, String)> {
    match spec.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::InvalidConfig(format!(
            "override `{spec}` must have the form key.path=value"
        ))),
    }
}

/// Environment overrides, sorted for determinism: `QUICKLAP_SET_a__b=v`
/// becomes `a.b=v`.
fn env_overrides() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::env::vars()
        .filter_map(|(k, v)| {
            k.strip_prefix(ENV_OVERRIDE_PREFIX)
                .map(|path| (path.replace("__", "."), v))
        })
        .collect();
    out.sort();
    out
}

/// Parse a config string, applying environment overrides then explicit ones.
pub fn parse_run_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut value: toml::Value =
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for (path, raw) in env_overrides() {
        apply_override(&mut value, &path, &raw)?;
    }
    for spec in overrides {
        let (path, raw) = split_key_value(spec)?;
        apply_override(&mut value, &path, &raw)?;
    }
    let config: RunConfig = value
        .try_into()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

/// Load a config file with overrides.
pub fn load_run_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
        path: path.to_path_buf(),
        source,
    })?;
    parse_run_config(&text, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::BackendKind;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = parse_run_config("", &[]).unwrap();
        assert_eq!(cfg.experiment.episode_length, 220);
        assert_eq!(cfg.planner.horizon, 5);
        assert_eq!(cfg.fusion.alpha, 1.0);
        assert_eq!(cfg.language.kind, BackendKind::Mock);
        assert_eq!(cfg.experiment.utterances.len(), 6);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_run_config("[experiment]\nnot_a_key = 1\n", &[]).is_err());
        assert!(parse_run_config("[nope]\nx = 1\n", &[]).is_err());
    }

    #[test]
    fn hyperparameter_names_parse() {
        let text = r#"
[fusion]
base_learning_rate = 2.0
language_confidence_scale = 1.0
numerical_stability = 1e-4
prior_stability = 1e-6
variance_stability = 1e-3
capping_factor = 5.0
beta_power = 2.0
"#;
        let cfg = parse_run_config(text, &[]).unwrap();
        assert_eq!(cfg.fusion.alpha, 2.0);
        assert_eq!(cfg.fusion.k, 1.0);
    }

    #[test]
    fn backend_alias_section_and_override_path() {
        let text = "[backend]\nkind = \"oracle\"\n";
        let cfg = parse_run_config(text, &[]).unwrap();
        assert_eq!(cfg.language.kind, BackendKind::Oracle);

        let cfg = parse_run_config("", &["backend.kind=replay".into()]).unwrap();
        assert_eq!(cfg.language.kind, BackendKind::Replay);
    }

    #[test]
    fn overrides_parse_toml_fragments() {
        let cfg = parse_run_config(
            "",
            &[
                "experiment.seeds=[3, 4]".into(),
                "planner.population=128".into(),
                "language.kind=mock".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.experiment.seeds, vec![3, 4]);
        assert_eq!(cfg.planner.population, 128);
        assert_eq!(cfg.language.kind, BackendKind::Mock);
    }

    #[test]
    fn bad_override_shapes_error() {
        assert!(parse_run_config("", &["justakey".into()]).is_err());
        assert!(parse_run_config("", &["experiment.seeds=notalist".into()]).is_err());
    }

    #[test]
    fn sweep_roundtrip_preserves_grid() {
        let cfg = parse_run_config("", &["experiment.horizons=[3, 12]".into()]).unwrap();
        let sweep = cfg.to_sweep();
        let back = RunConfig::from_sweep(&sweep);
        assert_eq!(back.experiment.horizons, vec![3, 12]);
        assert_eq!(back.to_sweep(), sweep);
    }

    #[test]
    fn manifest_toml_roundtrips() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        let reparsed = parse_run_config(&text, &[]).unwrap();
        assert_eq!(cfg, reparsed);
    }
}
