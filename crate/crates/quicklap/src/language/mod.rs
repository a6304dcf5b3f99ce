//! Dual-model language pipeline.
//!
//! An utterance is interpreted in two sequential calls: an attention model
//! yields a per-feature gate, then a preference model (given that gate)
//! yields a shift and confidence per feature. Responses are strict JSON and
//! validated centrally; every request/response is appended to a cache file
//! that a replay backend can serve later with zero network calls.

mod backends;
mod cache;
mod parse;
mod prompts;
mod remote;

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::LanguageSignal;
use crate::world::{Feature, World};

pub use backends::{Backend, LmRequest, LmRole, MockBackend, MockRule, OracleBackend, ReplayBackend, RuleTable, SpecialTarget};
pub use cache::{prompt_key, CacheRecord, LanguageCache};
pub use parse::{parse_att_response, parse_pref_response};
pub use prompts::{build_att_prompt, build_pref_prompt, ATT_SYSTEM, PREF_SYSTEM};
pub use remote::{RemoteBackend, API_KEY_ENV};

/// Everything a model invocation can see about the intervention.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageContext {
    pub utterance: String,
    pub dphi: Vec<f64>,
    pub theta_t: Vec<f64>,
    pub environment_description: String,
    pub features: Vec<Feature>,
}

impl LanguageContext {
    pub fn new(
        utterance: impl Into<String>,
        world: &World,
        dphi: Vec<f64>,
        theta_t: Vec<f64>,
    ) -> Self {
        Self {
            utterance: utterance.into(),
            dphi,
            theta_t,
            environment_description: world.description().to_string(),
            features: world.active_features().to_vec(),
        }
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        self.features.iter().map(|f| f.name()).collect()
    }
}

/// A rendered system/user message pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Mock,
    Replay,
    /// Calibrated ground-truth teacher for ceiling experiments.
    Oracle,
}

impl std::str::FromStr for BackendKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "remote" => Ok(BackendKind::Remote),
            "mock" => Ok(BackendKind::Mock),
            "replay" => Ok(BackendKind::Replay),
            "oracle" => Ok(BackendKind::Oracle),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown backend kind `{other}` (expected remote, mock, replay or oracle)"
            ))),
        }
    }
}

/// Backend selection and transport settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub model_name: String,
    pub temperature_att: f64,
    pub temperature_pref: f64,
    pub base_url: String,
    pub timeout_secs: f64,
    pub max_retries: usize,
    /// Request/response log; required for replay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_path: Option<PathBuf>,
    /// Optional mock rule-table file; the built-in table applies when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_table: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Mock,
            model_name: "gpt-4o".into(),
            temperature_att: 0.1,
            temperature_pref: 0.3,
            base_url: "https://api.openai.com/v1".into(),
            timeout_secs: 30.0,
            max_retries: 3,
            cache_path: None,
            rule_table: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LanguageError {
    #[error("invalid language context: {0}")]
    InvalidContext(String),

    #[error("response parse error: {0}")]
    Parse(#[from] ParseError),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: usize, last: String },

    #[error("replay cache has no record for prompt {key}")]
    CacheMiss { key: String },

    #[error("replay backend requires a cache_path")]
    MissingCachePath,

    #[error("remote backend requires the {} environment variable", API_KEY_ENV)]
    MissingApiKey,

    #[error("cache error: {0}")]
    Cache(String),

    #[error("invalid language signal: {0}")]
    InvalidSignal(String),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(String),

    #[error("wrong key set: expected {{{expected}}}, got {{{got}}}")]
    WrongKeys { expected: String, got: String },

    #[error("key `{key}` has length {got}, expected {expected}")]
    WrongLength {
        key: String,
        expected: usize,
        got: usize,
    },

    #[error("key `{key}`[{index}] = {value} outside [{min}, {max}]")]
    OutOfRange {
        key: String,
        index: usize,
        value: f64,
        min: f64,
        max: f64,
    },
}

/// A configured backend plus its cache, ready to interpret interventions.
pub struct LanguagePipeline {
    backend: Backend,
    config: BackendConfig,
    cache: Option<Arc<LanguageCache>>,
}

impl LanguagePipeline {
    /// Build a pipeline from configuration. `theta_star` feeds the oracle
    /// backend; other kinds ignore it.
    pub fn from_config(config: &BackendConfig, theta_star: &[f64]) -> Result<Self, LanguageError> {
        let cache = config
            .cache_path
            .as_ref()
            .map(|p| Arc::new(LanguageCache::new(p.clone())));
        Self::with_shared_cache(config, theta_star, cache, None)
    }

    /// Build a pipeline sharing a cache handle (and optionally a pre-loaded
    /// replay map) across concurrent episodes.
    pub fn with_shared_cache(
        config: &BackendConfig,
        theta_star: &[f64],
        cache: Option<Arc<LanguageCache>>,
        replay_records: Option<Arc<std::collections::HashMap<String, String>>>,
    ) -> Result<Self, LanguageError> {
        let backend = match config.kind {
            BackendKind::Mock => {
                let table = match &config.rule_table {
                    Some(path) => RuleTable::load(path)?,
                    None => RuleTable::builtin(),
                };
                Backend::Mock(MockBackend::new(table))
            }
            BackendKind::Oracle => Backend::Oracle(OracleBackend::new(theta_star.to_vec())),
            BackendKind::Replay => {
                let records = match replay_records {
                    Some(r) => r,
                    None => {
                        let path = config
                            .cache_path
                            .as_ref()
                            .ok_or(LanguageError::MissingCachePath)?;
                        Arc::new(LanguageCache::load_map(path)?)
                    }
                };
                Backend::Replay(ReplayBackend::new(records))
            }
            BackendKind::Remote => Backend::Remote(RemoteBackend::new(config)?),
        };
        Ok(Self {
            backend,
            config: config.clone(),
            cache,
        })
    }

    pub fn kind(&self) -> BackendKind {
        self.config.kind
    }

    fn call<T>(
        &self,
        role: LmRole,
        prompt: &PromptPair,
        ctx: &LanguageContext,
        gate: Option<&[f64]>,
        parse: impl Fn(&str) -> Result<T, ParseError>,
    ) -> Result<T, LanguageError> {
        let temperature = match role {
            LmRole::Attention => self.config.temperature_att,
            LmRole::Preference => self.config.temperature_pref,
        };
        let req = LmRequest {
            role,
            prompt,
            ctx,
            gate,
            model: &self.config.model_name,
            temperature,
        };
        let attempts = if self.backend.retryable() {
            1 + self.config.max_retries
        } else {
            1
        };
        let mut last_error = String::new();
        for _ in 0..attempts {
            match self.backend.complete(&req) {
                Ok(raw) => {
                    if self.backend.records_to_cache() {
                        if let Some(cache) = &self.cache {
                            cache.append(prompt, &self.config.model_name, temperature, &raw)?;
                        }
                    }
                    match parse(&raw) {
                        Ok(value) => return Ok(value),
                        Err(e) => {
                            last_error = e.to_string();
                            if !self.backend.retryable() {
                                return Err(LanguageError::Parse(e));
                            }
                        }
                    }
                }
                Err(e) => {
                    if !self.backend.retryable() {
                        return Err(e);
                    }
                    last_error = e.to_string();
                }
            }
        }
        Err(LanguageError::RetriesExhausted {
            attempts,
            last: last_error,
        })
    }

    /// Run the two-step interpretation: attention gate, then shift and
    /// confidence. The returned signal always satisfies the signal invariants.
    pub fn interpret(&self, ctx: &LanguageContext) -> Result<LanguageSignal, LanguageError> {
        let d = ctx.features.len();
        let att_prompt = build_att_prompt(ctx)?;
        let gate = self.call(LmRole::Attention, &att_prompt, ctx, None, |raw| {
            parse_att_response(raw, d)
        })?;
        let pref_prompt = build_pref_prompt(ctx, &gate)?;
        let (mu, confidence) =
            self.call(LmRole::Preference, &pref_prompt, ctx, Some(&gate), |raw| {
                parse_pref_response(raw, d)
            })?;
        let signal = LanguageSignal {
            gate,
            mu,
            confidence,
        };
        signal
            .validate(d)
            .map_err(|e| LanguageError::InvalidSignal(e.to_string()))?;
        Ok(signal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{build_scenario, ScenarioId};

    fn context(utterance: &str) -> LanguageContext {
        let world = build_scenario(ScenarioId::C);
        LanguageContext::new(
            utterance,
            &world,
            vec![-0.05, -0.31, 0.0, 0.42],
            vec![1.0; 4],
        )
    }

    #[test]
    fn mock_interprets_cone_utterance() {
        let config = BackendConfig::default();
        let pipeline = LanguagePipeline::from_config(&config, &[]).unwrap();
        let sig = pipeline.interpret(&context("Steer clear of the cone.")).unwrap();
        assert_eq!(sig.gate, vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(sig.confidence[3], 0.9);
        assert!(sig.mu[3] > 0.0);
    }

    #[test]
    fn mock_interpretation_is_deterministic() {
        let config = BackendConfig::default();
        let pipeline = LanguagePipeline::from_config(&config, &[]).unwrap();
        let ctx = context("Be careful.");
        assert_eq!(
            pipeline.interpret(&ctx).unwrap(),
            pipeline.interpret(&ctx).unwrap()
        );
    }

    #[test]
    fn record_then_replay_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cache_path = dir.path().join("cache.jsonl");
        let mut config = BackendConfig {
            cache_path: Some(cache_path.clone()),
            ..BackendConfig::default()
        };
        let ctx = context("Avoid the obstacle.");
        let recorded = LanguagePipeline::from_config(&config, &[])
            .unwrap()
            .interpret(&ctx)
            .unwrap();
        config.kind = BackendKind::Replay;
        let replayed = LanguagePipeline::from_config(&config, &[])
            .unwrap()
            .interpret(&ctx)
            .unwrap();
        assert_eq!(recorded, replayed);
    }

    #[test]
    fn replay_without_cache_path_fails() {
        let config = BackendConfig {
            kind: BackendKind::Replay,
            ..BackendConfig::default()
        };
        assert!(matches!(
            LanguagePipeline::from_config(&config, &[]),
            Err(LanguageError::MissingCachePath)
        ));
    }

    #[test]
    fn replay_miss_surfaces_cache_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache_path = dir.path().join("cache.jsonl");
        std::fs::write(&cache_path, "").unwrap();
        let config = BackendConfig {
            kind: BackendKind::Replay,
            cache_path: Some(cache_path),
            ..BackendConfig::default()
        };
        let pipeline = LanguagePipeline::from_config(&config, &[]).unwrap();
        assert!(matches!(
            pipeline.interpret(&context("Be careful.")),
            Err(LanguageError::CacheMiss { .. })
        ));
    }
}
