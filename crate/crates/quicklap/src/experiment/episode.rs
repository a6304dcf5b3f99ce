//! One simulated episode: drive, intervene, update.
//!
//! The robot replans every step and executes the first control. At each
//! intervention window start the robot plan and the teacher plan are computed
//! from the same state and seed; their feature difference (plus the
//! interpreted utterance, for the language-aware algorithms) drives exactly
//! one weight update. The car follows the teacher's controls for the window
//! duration, replanning with the ground-truth weights if the window outlasts
//! the horizon.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::Control;
use crate::error::Error;
use crate::fusion::{
    update_language_only, update_masked, update_phri, update_quicklap, Hyperparameters,
    LanguageSignal, PreferenceEstimate,
};
use crate::language::{BackendConfig, BackendKind, LanguageCache, LanguageContext, LanguagePipeline};
use crate::planner::{plan, simulate_human_correction, PlannerConfig};
use crate::world::{feature_delta, resolve_scenario, World};

use super::sweep::Algorithm;
use super::{derive_seed, nmse};

/// Full specification of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    /// Built-in id (C, CP, CPC3, CPC4) or a scenario file path.
    pub scenario: String,
    pub algorithm: Algorithm,
    pub utterance: String,
    pub backend: BackendConfig,
    pub planner: PlannerConfig,
    pub episode_length: usize,
    /// Inclusive `[start, end]` timestep ranges.
    pub intervention_windows: Vec<[usize; 2]>,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    /// Starting weights; defaults to all ones.
    pub initial_weights: Option<Vec<f64>>,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            scenario: "C".into(),
            algorithm: Algorithm::Quicklap,
            utterance: "Steer clear of the cone.".into(),
            backend: BackendConfig::default(),
            planner: PlannerConfig::default(),
            episode_length: 220,
            intervention_windows: vec![[45, 55], [85, 95], [130, 140], [170, 180]],
            seed: 0,
            hyperparameters: Hyperparameters::default(),
            initial_weights: None,
        }
    }
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.episode_length == 0 {
            return Err(Error::InvalidConfig("episode_length must be positive".into()));
        }
        if self.planner.horizon == 0 {
            return Err(Error::InvalidConfig("planner horizon must be >= 1".into()));
        }
        if self.planner.elites == 0 || self.planner.elites > self.planner.population {
            return Err(Error::InvalidConfig(
                "planner elites must satisfy 1 <= elites <= population".into(),
            ));
        }
        if self.planner.dt <= 0.0 {
            return Err(Error::InvalidConfig("planner dt must be positive".into()));
        }
        self.hyperparameters.validate()?;
        let mut prev_end: Option<usize> = None;
        for w in &self.intervention_windows {
            if w[0] > w[1] || w[1] >= self.episode_length {
                return Err(Error::InvalidConfig(format!(
                    "window [{}, {}] must lie inside the episode (length {})",
                    w[0], w[1], self.episode_length
                )));
            }
            if let Some(end) = prev_end {
                if w[0] <= end {
                    return Err(Error::InvalidConfig(
                        "intervention windows must be sorted and non-overlapping".into(),
                    ));
                }
            }
            prev_end = Some(w[1]);
        }
        Ok(())
    }
}

/// Traces recorded over an episode; one entry per intervention.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub theta_trace: Vec<Vec<f64>>,
    pub nmse_trace: Vec<f64>,
    pub feature_deltas: Vec<Vec<f64>>,
    pub language_signals: Vec<Option<LanguageSignal>>,
    pub initial_nmse: f64,
    pub final_nmse: f64,
}

/// Episode failure carrying whatever was recorded before the abort.
#[derive(Debug, Error)]
#[error("episode aborted at step {step}: {message}")]
pub struct EpisodeError {
    pub step: usize,
    pub message: String,
    pub partial: EpisodeResult,
}

/// Language resources shared across concurrent episodes: one append handle
/// for the cache and, for replay, one pre-loaded record map.
#[derive(Default, Clone)]
pub struct SharedLanguage {
    cache: Option<Arc<LanguageCache>>,
    replay: Option<Arc<std::collections::HashMap<String, String>>>,
}

impl SharedLanguage {
    pub fn prepare(backend: &BackendConfig) -> Result<Self, Error> {
        let cache = backend
            .cache_path
            .as_ref()
            .map(|p| Arc::new(LanguageCache::new(p.clone())));
        let replay = match backend.kind {
            BackendKind::Replay => {
                let path = backend
                    .cache_path
                    .as_ref()
                    .ok_or(crate::language::LanguageError::MissingCachePath)?;
                Some(Arc::new(LanguageCache::load_map(path)?))
            }
            _ => None,
        };
        Ok(Self { cache, replay })
    }

    fn pipeline(&self, backend: &BackendConfig, theta_star: &[f64]) -> Result<LanguagePipeline, Error> {
        Ok(LanguagePipeline::with_shared_cache(
            backend,
            theta_star,
            self.cache.clone(),
            self.replay.clone(),
        )?)
    }
}

/// Run one episode, building the world and language resources from config.
pub fn run_episode(cfg: &EpisodeConfig) -> Result<EpisodeResult, EpisodeError> {
    let world = resolve_scenario(&cfg.scenario).map_err(|e| EpisodeError {
        step: 0,
        message: e.to_string(),
        partial: EpisodeResult::default(),
    })?;
    let shared = SharedLanguage::prepare(&cfg.backend).map_err(|e| EpisodeError {
        step: 0,
        message: e.to_string(),
        partial: EpisodeResult::default(),
    })?;
    run_episode_with(&world, cfg, &shared)
}

/// Run one episode in a prepared world with shared language resources.
pub fn run_episode_with(
    world: &World,
    cfg: &EpisodeConfig,
    shared: &SharedLanguage,
) -> Result<EpisodeResult, EpisodeError> {
    let fail = |step: usize, message: String, partial: EpisodeResult| EpisodeError {
        step,
        message,
        partial,
    };

    if let Err(e) = cfg.validate() {
        return Err(fail(0, e.to_string(), EpisodeResult::default()));
    }
    let d = world.dimension();
    let theta0 = cfg.initial_weights.clone().unwrap_or_else(|| vec![1.0; d]);
    if theta0.len() != d {
        return Err(fail(
            0,
            format!("initial_weights has length {}, world needs {d}", theta0.len()),
            EpisodeResult::default(),
        ));
    }
    let pipeline = if cfg.algorithm.needs_language() {
        match shared.pipeline(&cfg.backend, world.theta_star()) {
            Ok(p) => Some(p),
            Err(e) => return Err(fail(0, e.to_string(), EpisodeResult::default())),
        }
    } else {
        None
    };

    let mut est = PreferenceEstimate::new(theta0);
    let mut result = EpisodeResult::default();
    result.initial_nmse = match nmse(est.theta(), world.theta_star()) {
        Ok(v) => v,
        Err(e) => return Err(fail(0, e.to_string(), result)),
    };
    result.final_nmse = result.initial_nmse;

    let hp = &cfg.hyperparameters;
    let dt = cfg.planner.dt;
    let bicycle = *world.bicycle();
    let mut state = world.start_state();
    let mut human_queue: VecDeque<Control> = VecDeque::new();

    for t in 0..cfg.episode_length {
        let in_window = cfg
            .intervention_windows
            .iter()
            .any(|w| t >= w[0] && t <= w[1]);

        if let Some(w) = cfg.intervention_windows.iter().find(|w| w[0] == t) {
            // One learning update per window, from plans sharing state and seed.
            let planner_cfg = PlannerConfig {
                seed: derive_seed(cfg.seed, &[2, w[0] as u64]),
                ..cfg.planner
            };
            let xi_r = plan(world, est.theta(), state, &planner_cfg);
            let xi_h = simulate_human_correction(world, world.theta_star(), state, &planner_cfg);
            let dphi = match feature_delta(
                &world.trajectory_features(&xi_h),
                &world.trajectory_features(&xi_r),
            ) {
                Ok(v) => v,
                Err(e) => return Err(fail(t, e.to_string(), result)),
            };

            let signal = match &pipeline {
                Some(p) => {
                    let ctx = LanguageContext::new(
                        cfg.utterance.clone(),
                        world,
                        dphi.clone(),
                        est.theta().to_vec(),
                    );
                    match p.interpret(&ctx) {
                        Ok(sig) => Some(sig),
                        Err(e) => return Err(fail(t, e.to_string(), result)),
                    }
                }
                None => None,
            };

            let updated = match cfg.algorithm {
                Algorithm::Phri => update_phri(&est, &dphi, hp),
                Algorithm::Masked => {
                    let sig = signal.as_ref().expect("masked requires language");
                    update_masked(&est, &dphi, &sig.gate, hp)
                }
                Algorithm::Quicklap => {
                    let sig = signal.as_ref().expect("quicklap requires language");
                    update_quicklap(&est, &dphi, sig, hp)
                }
                Algorithm::LanguageOnly => {
                    let sig = signal.as_ref().expect("language_only requires language");
                    update_language_only(&est, &dphi, sig, hp)
                }
            };
            est = match updated {
                Ok(e) => e,
                Err(e) => return Err(fail(t, e.to_string(), result)),
            };

            result.theta_trace.push(est.theta().to_vec());
            match nmse(est.theta(), world.theta_star()) {
                Ok(v) => result.nmse_trace.push(v),
                Err(e) => return Err(fail(t, e.to_string(), result)),
            }
            result.feature_deltas.push(dphi);
            result.language_signals.push(signal);

            human_queue = xi_h.controls.into_iter().collect();
        }

        let control = if in_window {
            match human_queue.pop_front() {
                Some(u) => u,
                None => {
                    // window outlasts the horizon: the teacher replans
                    let planner_cfg = PlannerConfig {
                        seed: derive_seed(cfg.seed, &[3, t as u64]),
                        ..cfg.planner
                    };
                    let xi_h = simulate_human_correction(world, world.theta_star(), state, &planner_cfg);
                    let mut controls = xi_h.controls.into_iter();
                    let first = controls.next().expect("horizon >= 1");
                    human_queue = controls.collect();
                    first
                }
            }
        } else {
            human_queue.clear();
            let planner_cfg = PlannerConfig {
                seed: derive_seed(cfg.seed, &[1, t as u64]),
                ..cfg.planner
            };
            plan(world, est.theta(), state, &planner_cfg).controls[0]
        };

        state = bicycle.step(state, control, dt);
    }

    if let Some(last) = result.nmse_trace.last() {
        result.final_nmse = *last;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::build_scenario;
    use crate::world::ScenarioId;

    fn fast_cfg(algorithm: Algorithm) -> EpisodeConfig {
        EpisodeConfig {
            algorithm,
            // small search keeps unit tests quick; acceptance runs use defaults
            planner: PlannerConfig {
                population: 16,
                elites: 4,
                iterations: 4,
                ..PlannerConfig::default()
            },
            episode_length: 60,
            intervention_windows: vec![[40, 50]],
            ..EpisodeConfig::default()
        }
    }

    #[test]
    fn phri_with_true_weights_stays_at_zero_error() {
        let world = build_scenario(ScenarioId::C);
        let mut cfg = fast_cfg(Algorithm::Phri);
        cfg.initial_weights = Some(world.theta_star().to_vec());
        let result = run_episode(&cfg).unwrap();
        assert_eq!(result.nmse_trace.len(), 1);
        for (delta, v) in result.feature_deltas.iter().zip(&result.nmse_trace) {
            assert!(delta.iter().all(|x| *x == 0.0));
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn episodes_are_deterministic_under_mock_backend() {
        let cfg = fast_cfg(Algorithm::Quicklap);
        let a = run_episode(&cfg).unwrap();
        let b = run_episode(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_lengths_match_window_count() {
        let mut cfg = fast_cfg(Algorithm::Masked);
        cfg.episode_length = 120;
        cfg.intervention_windows = vec![[30, 40], [70, 80]];
        let result = run_episode(&cfg).unwrap();
        assert_eq!(result.theta_trace.len(), 2);
        assert_eq!(result.nmse_trace.len(), 2);
        assert_eq!(result.feature_deltas.len(), 2);
        assert_eq!(result.language_signals.len(), 2);
        assert_eq!(result.final_nmse, *result.nmse_trace.last().unwrap());
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let mut cfg = fast_cfg(Algorithm::Phri);
        cfg.intervention_windows = vec![[10, 20], [15, 25]];
        assert!(run_episode(&cfg).is_err());
    }

    #[test]
    fn backend_failure_aborts_with_partial_trace() {
        let dir = tempfile::tempdir().unwrap();
        let cache = dir.path().join("empty.jsonl");
        std::fs::write(&cache, "").unwrap();
        let mut cfg = fast_cfg(Algorithm::Quicklap);
        cfg.backend.kind = BackendKind::Replay;
        cfg.backend.cache_path = Some(cache);
        let err = run_episode(&cfg).unwrap_err();
        assert_eq!(err.step, 40);
        assert!(err.partial.nmse_trace.is_empty());
        assert!(err.message.contains("no record"));
    }
}
