//! Grid sweeps over scenarios, algorithms, utterances, horizons and seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::Hyperparameters;
use crate::language::BackendConfig;
use crate::planner::PlannerConfig;
use crate::world::resolve_scenario;

use super::episode::{run_episode_with, EpisodeConfig, EpisodeResult, SharedLanguage};
use super::{derive_seed, mean_sem};

/// Weight-update algorithms under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Phri,
    Masked,
    Quicklap,
    LanguageOnly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Phri,
        Algorithm::Masked,
        Algorithm::Quicklap,
        Algorithm::LanguageOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Phri => "phri",
            Algorithm::Masked => "masked",
            Algorithm::Quicklap => "quicklap",
            Algorithm::LanguageOnly => "language_only",
        }
    }

    /// Whether the algorithm consumes the interpreted utterance.
    pub fn needs_language(self) -> bool {
        !matches!(self, Algorithm::Phri)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phri" => Ok(Algorithm::Phri),
            "masked" => Ok(Algorithm::Masked),
            "quicklap" => Ok(Algorithm::Quicklap),
            "language_only" | "language-only" => Ok(Algorithm::LanguageOnly),
            other => Err(Error::InvalidConfig(format!(
                "unknown algorithm `{other}` (expected phri, masked, quicklap or language_only)"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The six stock utterances, ordered from most ambiguous to most specific.
pub fn default_utterances() -> Vec<String> {
    [
        "Be careful.",
        "Watch out for that thing.",
        "Stay away from that thing.",
        "Avoid the obstacle.",
        "Stay away from construction zones.",
        "Steer clear of the cone.",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Sweep grid plus the settings shared by every episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenarios: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    pub utterances: Vec<String>,
    pub horizons: Vec<usize>,
    /// Master seeds; each grid cell derives its episode seed from one entry.
    pub seeds: Vec<u64>,
    pub episode_length: usize,
    pub intervention_windows: Vec<[usize; 2]>,
    pub planner: PlannerConfig,
    pub hyperparameters: Hyperparameters,
    pub backend: BackendConfig,
    pub initial_weights: Option<Vec<f64>>,
    /// Worker threads for episode parallelism; 0 uses the default pool.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            scenarios: vec!["C".into(), "CP".into(), "CPC3".into(), "CPC4".into()],
            algorithms: vec![Algorithm::Phri, Algorithm::Masked, Algorithm::Quicklap],
            utterances: default_utterances(),
            // longest horizon of the sweep set {3, 5, 8, 12}: corrections need
            // a plan long enough to trade a full lane change against an
            // obstacle, or the teacher's intent never shows up in the features
            horizons: vec![12],
            seeds: vec![0, 1],
            episode_length: 220,
            intervention_windows: vec![[45, 55], [85, 95], [130, 140], [170, 180]],
            planner: PlannerConfig::default(),
            hyperparameters: Hyperparameters::default(),
            backend: BackendConfig::default(),
            initial_weights: None,
            workers: 0,
        }
    }
}

/// Identifies one episode within a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeKey {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub utterance: String,
    pub horizon: usize,
    pub master_seed: u64,
    pub episode_seed: u64,
}

/// Episode outcome: a full result or an error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    #[serde(flatten)]
    pub key: EpisodeKey,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<EpisodeResult>,
}

/// Mean final NMSE per (scenario, algorithm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub mean_nmse: f64,
    pub sem: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryTable {
    pub cells: Vec<SummaryCell>,
}

impl SummaryTable {
    pub fn cell(&self, scenario: &str, algorithm: Algorithm) -> Option<&SummaryCell> {
        self.cells
            .iter()
            .find(|c| c.scenario == scenario && c.algorithm == algorithm)
    }
}

/// Mean NMSE after intervention `index` (1-based), averaged within each
/// scenario first; SEM across scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub intervention_index: usize,
    pub algorithm: Algorithm,
    pub mean_nmse: f64,
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub episodes: Vec<EpisodeRecord>,
    pub summary: SummaryTable,
    pub convergence: Vec<ConvergenceRow>,
}

fn expand(config: &SweepConfig) -> Vec<(EpisodeKey, EpisodeConfig)> {
    let mut out = Vec::new();
    for (si, scenario) in config.scenarios.iter().enumerate() {
        for (ai, &algorithm) in config.algorithms.iter().enumerate() {
            for (ui, utterance) in config.utterances.iter().enumerate() {
                for (hi, &horizon) in config.horizons.iter().enumerate() {
                    for &master_seed in &config.seeds {
                        let episode_seed = derive_seed(
                            master_seed,
                            &[si as u64, ai as u64, ui as u64, hi as u64],
                        );
                        let key = EpisodeKey {
                            scenario: scenario.clone(),
                            algorithm,
                            utterance: utterance.clone(),
                            horizon,
                            master_seed,
                            episode_seed,
                        };
                        let episode = EpisodeConfig {
                            scenario: scenario.clone(),
                            algorithm,
                            utterance: utterance.clone(),
                            backend: config.backend.clone(),
                            planner: PlannerConfig {
                                horizon,
                                seed: episode_seed,
                                ..config.planner
                            },
                            episode_length: config.episode_length,
                            intervention_windows: config.intervention_windows.clone(),
                            seed: episode_seed,
                            hyperparameters: config.hyperparameters,
                            initial_weights: config.initial_weights.clone(),
                        };
                        out.push((key, episode));
                    }
                }
            }
        }
    }
    out
}

fn summarize(config: &SweepConfig, episodes: &[EpisodeRecord]) -> SummaryTable {
    let mut cells = Vec::new();
    for scenario in &config.scenarios {
        for &algorithm in &config.algorithms {
            let finals: Vec<f64> = episodes
                .iter()
                .filter(|e| e.key.scenario == *scenario && e.key.algorithm == algorithm)
                .filter_map(|e| e.result.as_ref().map(|r| r.final_nmse))
                .collect();
            if finals.is_empty() {
                continue;
            }
            let (mean, sem) = mean_sem(&finals);
            cells.push(SummaryCell {
                scenario: scenario.clone(),
                algorithm,
                mean_nmse: mean,
                sem,
                n: finals.len(),
            });
        }
    }
    SummaryTable { cells }
}

fn convergence(config: &SweepConfig, episodes: &[EpisodeRecord]) -> Vec<ConvergenceRow> {
    let interventions = config.intervention_windows.len();
    let mut rows = Vec::new();
    for &algorithm in &config.algorithms {
        for k in 0..interventions {
            let mut scenario_means = Vec::new();
            for scenario in &config.scenarios {
                let values: Vec<f64> = episodes
                    .iter()
                    .filter(|e| e.key.scenario == *scenario && e.key.algorithm == algorithm)
                    .filter_map(|e| e.result.as_ref().and_then(|r| r.nmse_trace.get(k).copied()))
                    .collect();
                if !values.is_empty() {
                    scenario_means.push(mean_sem(&values).0);
                }
            }
            if scenario_means.is_empty() {
                continue;
            }
            let (mean, sem) = mean_sem(&scenario_means);
            rows.push(ConvergenceRow {
                intervention_index: k + 1,
                algorithm,
                mean_nmse: mean,
                sem,
            });
        }
    }
    rows
}

/// Run every episode in the grid (in parallel), aggregate the summary table
/// and convergence series. Individual episode failures are recorded and
/// excluded from the aggregates.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    if config.scenarios.is_empty()
        || config.algorithms.is_empty()
        || config.utterances.is_empty()
        || config.horizons.is_empty()
        || config.seeds.is_empty()
    {
        return Err(Error::InvalidConfig(
            "sweep grid must have at least one scenario, algorithm, utterance, horizon and seed"
                .into(),
        ));
    }
    let shared = SharedLanguage::prepare(&config.backend)?;
    let jobs = expand(config);

    let run_all = || -> Vec<EpisodeRecord> {
        jobs.par_iter()
            .map(|(key, episode)| {
                let record = match resolve_scenario(&episode.scenario)
                    .map_err(|e| e.to_string())
                    .and_then(|world| {
                        run_episode_with(&world, episode, &shared).map_err(|e| e.to_string())
                    }) {
                    Ok(result) => EpisodeRecord {
                        key: key.clone(),
                        ok: true,
                        error: None,
                        result: Some(result),
                    },
                    Err(message) => EpisodeRecord {
                        key: key.clone(),
                        ok: false,
                        error: Some(message),
                        result: None,
                    },
                };
                record
            })
            .collect()
    };

    let episodes = if config.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?
            .install(run_all)
    } else {
        run_all()
    };

    let summary = summarize(config, &episodes);
    let convergence = convergence(config, &episodes);
    Ok(SweepResult {
        config: config.clone(),
        episodes,
        summary,
        convergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_sweep() -> SweepConfig {
        SweepConfig {
            scenarios: vec!["C".into()],
            algorithms: vec![Algorithm::Quicklap],
            utterances: vec!["Steer clear of the cone.".into()],
            horizons: vec![5],
            seeds: vec![0],
            episode_length: 60,
            intervention_windows: vec![[40, 50]],
            planner: PlannerConfig {
                population: 16,
                elites: 4,
                iterations: 4,
                ..PlannerConfig::default()
            },
            ..SweepConfig::default()
        }
    }

    #[test]
    fn single_episode_grid_reports_its_final_nmse_with_zero_sem() {
        let result = run_sweep(&tiny_sweep()).unwrap();
        assert_eq!(result.episodes.len(), 1);
        let episode = result.episodes[0].result.as_ref().unwrap();
        let cell = result.summary.cell("C", Algorithm::Quicklap).unwrap();
        assert_eq!(cell.mean_nmse, episode.final_nmse);
        assert_eq!(cell.sem, 0.0);
        assert_eq!(cell.n, 1);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let mut cfg = tiny_sweep();
        cfg.scenarios.clear();
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn failed_episodes_are_recorded_and_excluded() {
        let mut cfg = tiny_sweep();
        cfg.scenarios = vec!["C".into(), "NOPE".into()];
        let result = run_sweep(&cfg).unwrap();
        assert_eq!(result.episodes.len(), 2);
        let failed: Vec<_> = result.episodes.iter().filter(|e| !e.ok).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].key.scenario, "NOPE");
        assert!(result.summary.cell("NOPE", Algorithm::Quicklap).is_none());
    }

    #[test]
    fn sweeps_are_deterministic() {
        let cfg = tiny_sweep();
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
    }
}
