//! Receding-horizon trajectory optimization and simulated corrections.
//!
//! The planner maximizes `theta . Phi(xi)` over horizon-length control
//! sequences with a seeded cross-entropy search followed by a coordinate-wise
//! line-search refinement. The zero-control sequence is always part of the
//! initial population and the incumbent best is re-injected every iteration,
//! so the returned objective never falls below the zero-control rollout.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Control, State, Trajectory};
use crate::error::{Error, Result};
use crate::world::World;

/// Search configuration for one planning call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    /// Plan length in timesteps.
    pub horizon: usize,
    /// Candidate control sequences per iteration.
    pub population: usize,
    /// Elite count used to refit the sampling distribution.
    pub elites: usize,
    /// Cross-entropy iterations.
    pub iterations: usize,
    /// Seed for the sampling stream; identical seeds give identical plans.
    pub seed: u64,
    /// Integration step in seconds.
    pub dt: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: 5,
            population: 64,
            elites: 8,
            iterations: 10,
            seed: 0,
            dt: 1.0 / 30.0,
        }
    }
}

/// Objective of a trajectory under a weight vector.
pub fn objective(world: &World, theta: &[f64], trajectory: &Trajectory) -> f64 {
    let phi = world.trajectory_features(trajectory);
    theta.iter().zip(&phi.values).map(|(t, p)| t * p).sum()
}

/// Search diagnostics alongside the chosen trajectory.
#[derive(Debug, Clone)]
pub struct PlanDiagnostics {
    pub trajectory: Trajectory,
    pub objective: f64,
    pub zero_control_objective: f64,
    /// Best objective after each cross-entropy iteration (non-decreasing).
    pub iteration_best: Vec<f64>,
}

struct SearchSpace<'a> {
    world: &'a World,
    theta: &'a [f64],
    s0: State,
    dt: f64,
}

impl SearchSpace<'_> {
    fn bound(&self, coord: usize) -> f64 {
        // even coordinates = steering, odd = acceleration
        if coord % 2 == 0 {
            self.world.bicycle().steer_max
        } else {
            self.world.bicycle().accel_max
        }
    }

    fn to_controls(&self, params: &[f64]) -> Vec<Control> {
        params
            .chunks_exact(2)
            .map(|c| Control::new(c[0], c[1]))
            .collect()
    }

    fn evaluate(&self, params: &[f64]) -> f64 {
        let mut s = self.s0;
        let mut total = 0.0;
        let bicycle = self.world.bicycle();
        for c in params.chunks_exact(2) {
            let u = Control::new(c[0], c[1]);
            let fv = self.world.feature_vector(&s, &u);
            total += self
                .theta
                .iter()
                .zip(&fv.values)
                .map(|(t, p)| t * p)
                .sum::<f64>();
            s = bicycle.step(s, u, self.dt);
        }
        total
    }
}

fn gaussian_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    // Box-Muller on open-interval uniforms
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

fn sample_gaussian(rng: &mut ChaCha8Rng, mean: &[f64], std: &[f64], space: &SearchSpace) -> Vec<f64> {
    let mut out = Vec::with_capacity(mean.len());
    let mut spare: Option<f64> = None;
    for i in 0..mean.len() {
        let z = match spare.take() {
            Some(z) => z,
            None => {
                let (a, b) = gaussian_pair(rng);
                spare = Some(b);
                a
            }
        };
        let bound = space.bound(i);
        out.push((mean[i] + std[i] * z).clamp(-bound, bound));
    }
    out
}

/// Plan a trajectory maximizing `theta . Phi` from `s0`.
pub fn plan(world: &World, theta: &[f64], s0: State, cfg: &PlannerConfig) -> Trajectory {
    plan_diagnostics(world, theta, s0, cfg).trajectory
}

/// Plan and report search statistics.
pub fn plan_diagnostics(world: &World, theta: &[f64], s0: State, cfg: &PlannerConfig) -> PlanDiagnostics {
    assert!(cfg.horizon >= 1, "horizon must be >= 1");
    assert!(cfg.elites >= 1 && cfg.elites <= cfg.population);
    let space = SearchSpace {
        world,
        theta,
        s0,
        dt: cfg.dt,
    };
    let dim = 2 * cfg.horizon;

    let zero = vec![0.0; dim];
    let zero_objective = space.evaluate(&zero);
    let mut best_params = zero;
    let mut best_objective = zero_objective;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = vec![0.0; dim];
    let mut std: Vec<f64> = (0..dim).map(|i| 0.5 * space.bound(i)).collect();
    let mut iteration_best = Vec::with_capacity(cfg.iterations);

    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(cfg.population + 1);
    for _ in 0..cfg.iterations {
        scored.clear();
        // incumbent keeps the elite set anchored (covers the zero-control
        // candidate on the first iteration)
        scored.push((best_objective, best_params.clone()));
        for _ in 0..cfg.population {
            let params = sample_gaussian(&mut rng, &mean, &std, &space);
            let obj = space.evaluate(&params);
            scored.push((obj, params));
        }
        scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        if scored[0].0 > best_objective {
            best_objective = scored[0].0;
            best_params = scored[0].1.clone();
        }
        iteration_best.push(best_objective);

        let elites = &scored[..cfg.elites];
        for i in 0..dim {
            let m = elites.iter().map(|(_, p)| p[i]).sum::<f64>() / cfg.elites as f64;
            let var = elites
                .iter()
                .map(|(_, p)| (p[i] - m).powi(2))
                .sum::<f64>()
                / cfg.elites as f64;
            mean[i] = m;
            std[i] = var.sqrt().max(1e-6);
        }
    }

    // coordinate-wise line search around the incumbent
    let steps = [0.4, 0.2, 0.1, 0.05, 0.02, 0.01];
    for _ in 0..2 {
        for i in 0..dim {
            let bound = space.bound(i);
            let base = best_params[i];
            for &frac in &steps {
                for dir in [1.0, -1.0] {
                    let candidate_value = (base + dir * frac * bound).clamp(-bound, bound);
                    if candidate_value == base {
                        continue;
                    }
                    let mut candidate = best_params.clone();
                    candidate[i] = candidate_value;
                    let obj = space.evaluate(&candidate);
                    if obj > best_objective {
                        best_objective = obj;
                        best_params = candidate;
                    }
                }
            }
        }
    }

    let controls = space.to_controls(&best_params);
    let trajectory = world
        .bicycle()
        .rollout(s0, &controls, cfg.dt)
        .expect("horizon >= 1 yields non-empty controls");
    PlanDiagnostics {
        trajectory,
        objective: best_objective,
        zero_control_objective: zero_objective,
        iteration_best,
    }
}

/// The simulated teacher: identical optimization, evaluated with the
/// ground-truth weights.
pub fn simulate_human_correction(
    world: &World,
    theta_star: &[f64],
    s0: State,
    cfg: &PlannerConfig,
) -> Trajectory {
    plan(world, theta_star, s0, cfg)
}

/// Deform a trajectory along a human control: control `i` is shifted by
/// `u_h * decay^i` (clamped to bounds) and the result re-rolled out from the
/// original initial state.
pub fn deform(
    world: &World,
    xi_r: &Trajectory,
    u_h: Control,
    decay: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(0.0 < decay && decay < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "deform decay must lie in (0, 1), got {decay}"
        )));
    }
    let bicycle = world.bicycle();
    let mut scale = 1.0;
    let controls: Vec<Control> = xi_r
        .controls
        .iter()
        .map(|u| {
            let shifted = bicycle.clamp_control(Control::new(
                u.steer + scale * u_h.steer,
                u.accel + scale * u_h.accel,
            ));
            scale *= decay;
            shifted
        })
        .collect();
    bicycle.rollout(xi_r.states[0], &controls, dt)
}
