//! Interchangeable response generators behind the dual-model pipeline.
//!
//! All backends produce raw JSON response text which then flows through the
//! same strict parsers, so the offline backends exercise the full path.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::world::Feature;

use super::cache::prompt_key;
use super::{LanguageContext, LanguageError, PromptPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmRole {
    Attention,
    Preference,
}

/// One model invocation, carrying both the rendered prompt (what a remote
/// model sees) and the structured context (what the offline models use).
pub struct LmRequest<'a> {
    pub role: LmRole,
    pub prompt: &'a PromptPair,
    pub ctx: &'a LanguageContext,
    /// Gate from the attention step; present for preference requests.
    pub gate: Option<&'a [f64]>,
    pub model: &'a str,
    pub temperature: f64,
}

pub enum Backend {
    Mock(MockBackend),
    Oracle(OracleBackend),
    Replay(ReplayBackend),
    Remote(super::remote::RemoteBackend),
}

impl Backend {
    pub fn complete(&self, req: &LmRequest<'_>) -> Result<String, LanguageError> {
        match self {
            Backend::Mock(b) => b.complete(req),
            Backend::Oracle(b) => b.complete(req),
            Backend::Replay(b) => b.complete(req),
            Backend::Remote(b) => b.complete(req),
        }
    }

    /// Whether transport/parse failures should be retried.
    pub fn retryable(&self) -> bool {
        matches!(self, Backend::Remote(_))
    }

    /// Replay reads the cache; it never appends to it.
    pub fn records_to_cache(&self) -> bool {
        !matches!(self, Backend::Replay(_))
    }
}

fn render_json_numbers(values: &[f64]) -> String {
    let parts: Vec<String> = values
        .iter()
        .map(|v| {
            if *v == v.trunc() && v.abs() < 1e15 {
                format!("{:.1}", v)
            } else {
                format!("{}", v)
            }
        })
        .collect();
    format!("[{}]", parts.join(","))
}

// ---------------------------------------------------------------------------
// Mock backend: keyword rules over the utterance
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialTarget {
    /// The obstacle feature with the largest |dphi|.
    LargestDeltaObstacle,
    /// Every obstacle feature present in the scenario.
    AllObstacles,
}

/// One keyword rule: any matching keyword gates the target feature(s) with
/// the given confidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MockRule {
    pub keywords: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<SpecialTarget>,
    pub confidence: f64,
}

/// Rule table for the deterministic mock model. Gated features receive a
/// shift of `mu_scale * dphi_i` (clamped to the response schema's [-6, 6]).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleTable {
    #[serde(default = "default_mu_scale")]
    pub mu_scale: f64,
    pub rules: Vec<MockRule>,
}

fn default_mu_scale() -> f64 {
    5.0
}

impl RuleTable {
    /// Built-in table mirroring the specificity gradient of the stock
    /// utterances: class names gate confidently, indirect words gate broadly
    /// and cautiously.
    pub fn builtin() -> Self {
        let feature_rule = |keywords: &[&str], feature: Feature, confidence: f64| MockRule {
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            feature: Some(feature.name().to_string()),
            target: None,
            confidence,
        };
        let special_rule = |keywords: &[&str], target: SpecialTarget, confidence: f64| MockRule {
            keywords: keywords.iter().map(|s| s.to_string()).collect(),
            feature: None,
            target: Some(target),
            confidence,
        };
        RuleTable {
            mu_scale: default_mu_scale(),
            rules: vec![
                feature_rule(&["cone", "construction"], Feature::ConeDistance, 0.9),
                feature_rule(&["car", "vehicle"], Feature::CarDistance, 0.9),
                feature_rule(&["puddle"], Feature::PuddleDistance, 0.9),
                feature_rule(&["lane"], Feature::LaneAlignment, 0.9),
                feature_rule(&["slow", "speed"], Feature::SpeedDesirability, 0.9),
                special_rule(&["obstacle"], SpecialTarget::LargestDeltaObstacle, 0.9),
                special_rule(&["thing"], SpecialTarget::LargestDeltaObstacle, 0.4),
                special_rule(&["careful", "watch out"], SpecialTarget::AllObstacles, 0.4),
            ],
        }
    }

    pub fn load(path: &Path) -> Result<Self, LanguageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LanguageError::Cache(format!("read {}: {e}", path.display())))?;
        let table: RuleTable = toml::from_str(&text)
            .map_err(|e| LanguageError::InvalidContext(format!("rule table: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), LanguageError> {
        for rule in &self.rules {
            match (&rule.feature, &rule.target) {
                (Some(name), None) => {
                    if !Feature::ALL.iter().any(|f| f.name() == name) {
                        return Err(LanguageError::InvalidContext(format!(
                            "rule table references unknown feature `{name}`"
                        )));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(LanguageError::InvalidContext(
                        "each rule needs exactly one of `feature` or `target`".into(),
                    ))
                }
            }
            if !(0.0..=1.0).contains(&rule.confidence) {
                return Err(LanguageError::InvalidContext(format!(
                    "rule confidence {} outside [0, 1]",
                    rule.confidence
                )));
            }
        }
        Ok(())
    }
}

pub struct MockBackend {
    table: RuleTable,
}

impl MockBackend {
    pub fn new(table: RuleTable) -> Self {
        Self { table }
    }

    /// Per-feature (gate, confidence) derived from the utterance.
    fn match_rules(&self, ctx: &LanguageContext) -> (Vec<f64>, Vec<f64>) {
        let d = ctx.features.len();
        let utterance = ctx.utterance.to_lowercase();
        let mut gate = vec![0.0; d];
        let mut confidence = vec![0.0; d];
        let mark = |idx: usize, conf: f64, gate: &mut Vec<f64>, confidence: &mut Vec<f64>| {
            gate[idx] = 1.0;
            confidence[idx] = confidence[idx].max(conf);
        };
        for rule in &self.table.rules {
            if !rule
                .keywords
                .iter()
                .any(|k| utterance.contains(&k.to_lowercase()))
            {
                continue;
            }
            match (&rule.feature, &rule.target) {
                (Some(name), None) => {
                    if let Some(idx) = ctx.features.iter().position(|f| f.name() == name) {
                        mark(idx, rule.confidence, &mut gate, &mut confidence);
                    }
                }
                (None, Some(SpecialTarget::AllObstacles)) => {
                    for (idx, f) in ctx.features.iter().enumerate() {
                        if f.is_obstacle() {
                            mark(idx, rule.confidence, &mut gate, &mut confidence);
                        }
                    }
                }
                (None, Some(SpecialTarget::LargestDeltaObstacle)) => {
                    let best = ctx
                        .features
                        .iter()
                        .enumerate()
                        .filter(|(_, f)| f.is_obstacle())
                        .max_by(|a, b| {
                            ctx.dphi[a.0]
                                .abs()
                                .partial_cmp(&ctx.dphi[b.0].abs())
                                .unwrap_or(std::cmp::Ordering::Equal)
                        });
                    if let Some((idx, _)) = best {
                        mark(idx, rule.confidence, &mut gate, &mut confidence);
                    }
                }
                _ => {}
            }
        }
        (gate, confidence)
    }

    fn complete(&self, req: &LmRequest<'_>) -> Result<String, LanguageError> {
        let (gate, confidence) = self.match_rules(req.ctx);
        match req.role {
            LmRole::Attention => Ok(format!(r#"{{"gate":{}}}"#, render_json_numbers(&gate))),
            LmRole::Preference => {
                let applied_gate = req.gate.unwrap_or(&gate);
                let mu: Vec<f64> = applied_gate
                    .iter()
                    .zip(&req.ctx.dphi)
                    .map(|(g, d)| {
                        if *g > 0.0 {
                            (self.table.mu_scale * d).clamp(-6.0, 6.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let m: Vec<f64> = applied_gate
                    .iter()
                    .zip(&confidence)
                    .map(|(g, c)| if *g > 0.0 { *c } else { 0.0 })
                    .collect();
                Ok(format!(
                    r#"{{"mu":{},"confidence":{}}}"#,
                    render_json_numbers(&mu),
                    render_json_numbers(&m)
                ))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Oracle backend: a calibrated teacher that reads the ground truth
// ---------------------------------------------------------------------------

/// Ceiling-experiment backend: gates the features with the largest gap to the
/// ground truth and suggests the true shift at fixed high confidence.
pub struct OracleBackend {
    theta_star: Vec<f64>,
    confidence: f64,
}

impl OracleBackend {
    pub fn new(theta_star: Vec<f64>) -> Self {
        Self {
            theta_star,
            confidence: 0.95,
        }
    }

    fn gaps(&self, theta_t: &[f64]) -> Vec<f64> {
        self.theta_star
            .iter()
            .zip(theta_t)
            .map(|(star, t)| star - t)
            .collect()
    }

    fn gate(&self, theta_t: &[f64]) -> Vec<f64> {
        let gaps = self.gaps(theta_t);
        let max_gap = gaps.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        if max_gap == 0.0 {
            return vec![0.0; gaps.len()];
        }
        // "top" features: within half of the largest gap
        gaps.iter()
            .map(|g| if g.abs() >= 0.5 * max_gap { 1.0 } else { 0.0 })
            .collect()
    }

    fn complete(&self, req: &LmRequest<'_>) -> Result<String, LanguageError> {
        let theta_t = &req.ctx.theta_t;
        if theta_t.len() != self.theta_star.len() {
            return Err(LanguageError::InvalidContext(format!(
                "oracle ground truth has dimension {}, context {}",
                self.theta_star.len(),
                theta_t.len()
            )));
        }
        let gate = self.gate(theta_t);
        match req.role {
            LmRole::Attention => Ok(format!(r#"{{"gate":{}}}"#, render_json_numbers(&gate))),
            LmRole::Preference => {
                let applied_gate = req.gate.unwrap_or(&gate);
                let mu: Vec<f64> = self
                    .gaps(theta_t)
                    .iter()
                    .zip(applied_gate)
                    .map(|(g, on)| if *on > 0.0 { g.clamp(-6.0, 6.0) } else { 0.0 })
                    .collect();
                let m: Vec<f64> = applied_gate
                    .iter()
                    .map(|on| if *on > 0.0 { self.confidence } else { 0.0 })
                    .collect();
                Ok(format!(
                    r#"{{"mu":{},"confidence":{}}}"#,
                    render_json_numbers(&mu),
                    render_json_numbers(&m)
                ))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Replay backend: responses served from a recorded cache
// ---------------------------------------------------------------------------

pub struct ReplayBackend {
    records: Arc<HashMap<String, String>>,
}

impl ReplayBackend {
    pub fn new(records: Arc<HashMap<String, String>>) -> Self {
        Self { records }
    }

    pub fn from_cache_file(path: &Path) -> Result<Self, LanguageError> {
        Ok(Self::new(Arc::new(super::cache::LanguageCache::load_map(
            path,
        )?)))
    }

    fn complete(&self, req: &LmRequest<'_>) -> Result<String, LanguageError> {
        let key = prompt_key(req.prompt);
        self.records
            .get(&key)
            .cloned()
            .ok_or(LanguageError::CacheMiss { key })
    }
}
