//! Vehicle state, controls and deterministic bicycle integration.
//!
//! The vehicle is a 4D kinematic bicycle integrated with forward Euler:
//! `x' = v cos(h)`, `y' = v sin(h)`, `h' = v w`, `v' = a - friction * v`.
//! Longitudinal position is `x`, lateral position is `y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vehicle state: longitudinal/lateral position, heading (rad), speed (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl State {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading,
            speed,
        }
    }
}

/// Control input: steering command (rad/s per unit speed) and acceleration (m/s^2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Control {
    pub steer: f64,
    pub accel: f64,
}

impl Control {
    pub fn new(steer: f64, accel: f64) -> Self {
        Self { steer, accel }
    }
}

/// Bicycle parameters: friction, speed ceiling and control bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Bicycle {
    pub friction: f64,
    pub v_max: f64,
    pub steer_max: f64,
    pub accel_max: f64,
}

impl Default for Bicycle {
    fn default() -> Self {
        Self {
            friction: 0.0,
            v_max: 2.0,
            steer_max: 2.0,
            accel_max: 4.0,
        }
    }
}

/// Wrap an angle to the half-open interval (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut h = a.rem_euclid(tau);
    if h > std::f64::consts::PI {
        h -= tau;
    }
    h
}

impl Bicycle {
    /// Clamp a control to the configured bounds.
    pub fn clamp_control(&self, u: Control) -> Control {
        Control {
            steer: u.steer.clamp(-self.steer_max, self.steer_max),
            accel: u.accel.clamp(-self.accel_max, self.accel_max),
        }
    }

    /// One forward Euler step. Controls are assumed pre-clamped; speed is
    /// clamped to `[0, v_max]` and heading wrapped to `(-pi, pi]`.
    pub fn step(&self, s: State, u: Control, dt: f64) -> State {
        debug_assert!(dt > 0.0);
        let x = s.x + s.speed * s.heading.cos() * dt;
        let y = s.y + s.speed * s.heading.sin() * dt;
        let heading = wrap_angle(s.heading + s.speed * u.steer * dt);
        let speed = (s.speed + (u.accel - self.friction * s.speed) * dt).clamp(0.0, self.v_max);
        State {
            x,
            y,
            heading,
            speed,
        }
    }

    /// Roll a control sequence out from `s0`. Errors on an empty sequence.
    pub fn rollout(&self, s0: State, controls: &[Control], dt: f64) -> Result<Trajectory> {
        if controls.is_empty() {
            return Err(Error::EmptyControls);
        }
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(s0);
        let mut s = s0;
        for &u in controls {
            s = self.step(s, u, dt);
            states.push(s);
        }
        Ok(Trajectory {
            states,
            controls: controls.to_vec(),
        })
    }
}

/// A planned or driven trajectory: `states.len() == controls.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub controls: Vec<Control>,
}

impl Trajectory {
    /// Number of control steps.
    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// True when every consecutive state pair reproduces under `step` bit-exactly.
    pub fn consistent_with(&self, bicycle: &Bicycle, dt: f64) -> bool {
        if self.states.len() != self.controls.len() + 1 {
            return false;
        }
        self.controls
            .iter()
            .enumerate()
            .all(|(i, &u)| bicycle.step(self.states[i], u, dt) == self.states[i + 1])
    }
}
