//! Scenario geometry, per-step reward features and ground-truth weights.
//!
//! A [`World`] is immutable after construction. Lanes run along the x axis;
//! lane `k` is centered at `y = k * lane_width`. Obstacles are static points.
//! Feature values are normalized so the best value is 1 and they fall toward
//! 0 (and below, off-road) in undesirable situations.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Bicycle, Control, State, Trajectory};
use crate::error::{Error, Result};

/// Reward feature identifiers, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    SpeedDesirability,
    LaneAlignment,
    OffRoad,
    ConeDistance,
    CarDistance,
    PuddleDistance,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::SpeedDesirability,
        Feature::LaneAlignment,
        Feature::OffRoad,
        Feature::ConeDistance,
        Feature::CarDistance,
        Feature::PuddleDistance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::SpeedDesirability => "speed_desirability",
            Feature::LaneAlignment => "lane_alignment",
            Feature::OffRoad => "off_road",
            Feature::ConeDistance => "cone_distance",
            Feature::CarDistance => "car_distance",
            Feature::PuddleDistance => "puddle_distance",
        }
    }

    /// Short description used in the language-model prompt templates.
    pub fn description(self) -> &'static str {
        match self {
            Feature::SpeedDesirability => "How close the car's speed is to the desired speed limit",
            Feature::LaneAlignment => "How well the car stays centered in its lane",
            Feature::OffRoad => "Penalty for driving off the road",
            Feature::ConeDistance => "Safe distance from traffic cones",
            Feature::CarDistance => "Safe distance from other vehicles",
            Feature::PuddleDistance => "Safe distance from puddles",
        }
    }

    /// True for obstacle-proximity features.
    pub fn is_obstacle(self) -> bool {
        matches!(
            self,
            Feature::ConeDistance | Feature::CarDistance | Feature::PuddleDistance
        )
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Built-in scenario identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    C,
    Cp,
    Cpc3,
    Cpc4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::C, ScenarioId::Cp, ScenarioId::Cpc3, ScenarioId::Cpc4];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::C => "C",
            ScenarioId::Cp => "CP",
            ScenarioId::Cpc3 => "CPC3",
            ScenarioId::Cpc4 => "CPC4",
        }
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(ScenarioId::C),
            "CP" => Ok(ScenarioId::Cp),
            "CPC3" | "CPC-3" => Ok(ScenarioId::Cpc3),
            "CPC4" | "CPC-4" => Ok(ScenarioId::Cpc4),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-step feature vector, one value per active feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

/// Feature sums over a trajectory (units: feature * timestep).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFeatures {
    pub values: Vec<f64>,
}

/// Element-wise difference between human and robot trajectory features.
pub fn feature_delta(phi_h: &TrajectoryFeatures, phi_r: &TrajectoryFeatures) -> Result<Vec<f64>> {
    if phi_h.values.len() != phi_r.values.len() {
        return Err(Error::DimensionMismatch {
            expected: phi_h.values.len(),
            got: phi_r.values.len(),
        });
    }
    Ok(phi_h
        .values
        .iter()
        .zip(&phi_r.values)
        .map(|(h, r)| h - r)
        .collect())
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scenario world: road geometry, obstacles, constants and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    name: String,
    description: String,
    lanes: usize,
    lane_width: f64,
    v_target: f64,
    r_safe: f64,
    gamma: f64,
    cones: Vec<[f64; 2]>,
    puddles: Vec<[f64; 2]>,
    cars: Vec<[f64; 2]>,
    start: State,
    bicycle: Bicycle,
    active_features: Vec<Feature>,
    theta_star: Vec<f64>,
}

impl World {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn lane_width(&self) -> f64 {
        self.lane_width
    }

    pub fn v_target(&self) -> f64 {
        self.v_target
    }

    pub fn r_safe(&self) -> f64 {
        self.r_safe
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Lateral road interval `[lo, hi]`.
    pub fn road_bounds(&self) -> (f64, f64) {
        (
            -0.5 * self.lane_width,
            (self.lanes as f64 - 0.5) * self.lane_width,
        )
    }

    pub fn cones(&self) -> &[[f64; 2]] {
        &self.cones
    }

    pub fn puddles(&self) -> &[[f64; 2]] {
        &self.puddles
    }

    pub fn cars(&self) -> &[[f64; 2]] {
        &self.cars
    }

    pub fn start_state(&self) -> State {
        self.start
    }

    pub fn bicycle(&self) -> &Bicycle {
        &self.bicycle
    }

    pub fn active_features(&self) -> &[Feature] {
        &self.active_features
    }

    pub fn feature_names(&self) -> Vec<&'static str> {
        self.active_features.iter().map(|f| f.name()).collect()
    }

    /// Number of active features.
    pub fn dimension(&self) -> usize {
        self.active_features.len()
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    fn lane_distance(&self, y: f64) -> f64 {
        (0..self.lanes)
            .map(|k| (y - k as f64 * self.lane_width).abs())
            .fold(f64::INFINITY, f64::min)
    }

    fn obstacle_feature(&self, obstacles: &[[f64; 2]], s: &State) -> f64 {
        obstacles
            .iter()
            .map(|o| {
                let d = ((s.x - o[0]).powi(2) + (s.y - o[1]).powi(2)).sqrt();
                let proximity = ((self.r_safe - d) / self.r_safe).clamp(0.0, 1.0);
                let penalty = proximity * sigmoid(-self.gamma * (s.x - o[0]).abs());
                1.0 - penalty
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn feature_value(&self, f: Feature, s: &State, _u: &Control) -> f64 {
        match f {
            Feature::SpeedDesirability => {
                1.0 - ((s.speed - self.v_target) / self.v_target).powi(2)
            }
            Feature::LaneAlignment => 1.0 - (self.lane_distance(s.y) / self.lane_width).powi(2),
            Feature::OffRoad => {
                let (lo, hi) = self.road_bounds();
                if s.y >= lo && s.y <= hi {
                    1.0
                } else {
                    let d = (lo - s.y).max(s.y - hi);
                    1.0 - (d / self.lane_width).powi(2)
                }
            }
            Feature::ConeDistance => self.obstacle_feature(&self.cones, s),
            Feature::CarDistance => self.obstacle_feature(&self.cars, s),
            Feature::PuddleDistance => self.obstacle_feature(&self.puddles, s),
        }
    }

    /// Per-step features for the active feature set.
    pub fn feature_vector(&self, s: &State, u: &Control) -> FeatureVector {
        FeatureVector {
            values: self
                .active_features
                .iter()
                .map(|&f| self.feature_value(f, s, u))
                .collect(),
        }
    }

    /// Element-wise sum of `feature_vector` over the trajectory's steps
    /// (state `i` paired with control `i`).
    pub fn trajectory_features(&self, t: &Trajectory) -> TrajectoryFeatures {
        let mut values = vec![0.0; self.dimension()];
        for (i, u) in t.controls.iter().enumerate() {
            let fv = self.feature_vector(&t.states[i], u);
            for (acc, v) in values.iter_mut().zip(fv.values) {
                *acc += v;
            }
        }
        TrajectoryFeatures { values }
    }

    /// Load a scenario definition from a TOML string.
    pub fn from_toml_str(text: &str) -> Result<World> {
        let def: ScenarioDef =
            toml::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        def.build()
    }

    /// Load a scenario definition from a file.
    pub fn load(path: &Path) -> Result<World> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::ReadFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// On-disk scenario schema. All obstacle fields are `[x, y]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub lanes: usize,
    #[serde(default = "default_lane_width")]
    pub lane_width: f64,
    #[serde(default = "default_v_target")]
    pub v_target: f64,
    /// Defaults to 1.5 lane widths when omitted.
    #[serde(default)]
    pub r_safe: Option<f64>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub cones: Vec<[f64; 2]>,
    #[serde(default)]
    pub puddles: Vec<[f64; 2]>,
    #[serde(default)]
    pub cars: Vec<[f64; 2]>,
    /// `[x, y, heading, speed]`; defaults to lane 0 center at `v_target`.
    #[serde(default)]
    pub start: Option<[f64; 4]>,
    #[serde(default)]
    pub bicycle: Option<Bicycle>,
    /// Ground-truth weight per active feature name.
    pub theta_star: std::collections::BTreeMap<String, f64>,
}

fn default_lane_width() -> f64 {
    0.17
}

fn default_v_target() -> f64 {
    1.0
}

fn default_gamma() -> f64 {
    2.0
}

impl ScenarioDef {
    pub fn build(&self) -> Result<World> {
        if self.lanes == 0 {
            return Err(Error::InvalidScenario("lanes must be >= 1".into()));
        }
        if self.lane_width <= 0.0 || self.v_target <= 0.0 || self.gamma <= 0.0 {
            return Err(Error::InvalidScenario(
                "lane_width, v_target and gamma must be positive".into(),
            ));
        }
        let mut active = vec![
            Feature::SpeedDesirability,
            Feature::LaneAlignment,
            Feature::OffRoad,
        ];
        if !self.cones.is_empty() {
            active.push(Feature::ConeDistance);
        }
        if !self.cars.is_empty() {
            active.push(Feature::CarDistance);
        }
        if !self.puddles.is_empty() {
            active.push(Feature::PuddleDistance);
        }

        let mut theta_star = Vec::with_capacity(active.len());
        for f in &active {
            match self.theta_star.get(f.name()) {
                Some(&w) => theta_star.push(w),
                None => {
                    return Err(Error::InvalidScenario(format!(
                        "theta_star is missing active feature `{}`",
                        f.name()
                    )))
                }
            }
        }
        for key in self.theta_star.keys() {
            if !active.iter().any(|f| f.name() == key) {
                return Err(Error::InvalidScenario(format!(
                    "theta_star has weight for inactive feature `{key}`"
                )));
            }
        }

        let v_max = 2.0 * self.v_target;
        let bicycle = self.bicycle.unwrap_or(Bicycle {
            v_max,
            ..Bicycle::default()
        });
        let r_safe = self.r_safe.unwrap_or(1.5 * self.lane_width);
        let lo = -0.5 * self.lane_width;
        let hi = (self.lanes as f64 - 0.5) * self.lane_width;
        for o in self.cones.iter().chain(&self.puddles).chain(&self.cars) {
            if o[1] < lo || o[1] > hi {
                return Err(Error::InvalidScenario(format!(
                    "obstacle at ({}, {}) lies outside road bounds [{lo}, {hi}]",
                    o[0], o[1]
                )));
            }
        }
        let start = match self.start {
            Some([x, y, h, v]) => State::new(x, y, h, v),
            None => State::new(0.0, 0.0, 0.0, self.v_target),
        };

        Ok(World {
            name: self.name.clone(),
            description: self.description.clone(),
            lanes: self.lanes,
            lane_width: self.lane_width,
            v_target: self.v_target,
            r_safe,
            gamma: self.gamma,
            cones: self.cones.clone(),
            puddles: self.puddles.clone(),
            cars: self.cars.clone(),
            start,
            bicycle,
            active_features: active,
            theta_star,
        })
    }
}

/// Construct one of the four built-in scenarios.
///
/// Each scenario strings obstacles along the road so that every intervention
/// window has a decision nearby: cones sit in the starting lane, and in the
/// richer scenarios the escape lane is partially blocked by puddles or cars.
pub fn build_scenario(id: ScenarioId) -> World {
    let w = |k: usize| k as f64 * 0.17; // lane center shorthand
    let def = match id {
        ScenarioId::C => ScenarioDef {
            name: "C".into(),
            description: "Two-lane road through a construction zone; traffic cones block the right lane."
                .into(),
            lanes: 2,
            lane_width: default_lane_width(),
            v_target: default_v_target(),
            r_safe: None,
            gamma: default_gamma(),
            cones: vec![[1.9, w(0)], [3.2, w(0)], [4.65, w(0)], [5.95, w(0)]],
            puddles: vec![],
            cars: vec![],
            start: None,
            bicycle: None,
            theta_star: [
                ("speed_desirability", 5.0),
                ("lane_alignment", 2.5),
                ("off_road", 20.0),
                ("cone_distance", 40.0),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        },
        ScenarioId::Cp => ScenarioDef {
            name: "CP".into(),
            description:
                "Two-lane road with cones in the right lane and puddles in the left lane; avoiding a cone means crossing a puddle."
                    .into(),
            lanes: 2,
            lane_width: default_lane_width(),
            v_target: default_v_target(),
            r_safe: None,
            gamma: default_gamma(),
            cones: vec![[1.9, w(0)], [3.2, w(0)], [4.65, w(0)], [5.95, w(0)]],
            puddles: vec![[1.95, w(1)], [3.25, w(1)], [4.7, w(1)], [6.0, w(1)]],
            cars: vec![],
            start: None,
            bicycle: None,
            theta_star: [
                ("speed_desirability", 5.0),
                ("lane_alignment", 1.5),
                ("off_road", 10.0),
                ("cone_distance", 20.0),
                ("puddle_distance", 1.0),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        },
        ScenarioId::Cpc3 => ScenarioDef {
            name: "CPC3".into(),
            description:
                "Three-lane road with cones in the right lane, puddles in the middle lane and a stopped car blocking the right lane."
                    .into(),
            lanes: 3,
            lane_width: default_lane_width(),
            v_target: default_v_target(),
            r_safe: None,
            gamma: default_gamma(),
            cones: vec![
                [2.5, w(0)],
                [4.65, w(0)], [4.7, w(1)], [4.75, w(2)],
                [5.95, w(0)], [6.0, w(1)], [6.05, w(2)],
            ],
            puddles: vec![[1.95, w(1)], [3.3, w(1)]],
            cars: vec![[1.9, w(0)]],
            start: None,
            bicycle: None,
            theta_star: [
                ("speed_desirability", 5.0),
                ("lane_alignment", 2.5),
                ("off_road", 20.0),
                ("cone_distance", 40.0),
                ("car_distance", 50.0),
                ("puddle_distance", 3.0),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        },
        ScenarioId::Cpc4 => ScenarioDef {
            name: "CPC4".into(),
            description:
                "Four-lane road with cones in the right lane, puddles in the second lane and several vehicles, one stopped in the right lane."
                    .into(),
            lanes: 4,
            lane_width: default_lane_width(),
            v_target: default_v_target(),
            r_safe: None,
            gamma: default_gamma(),
            cones: vec![
                [2.5, w(0)],
                [4.65, w(0)], [4.7, w(1)], [4.75, w(2)], [4.8, w(3)],
                [5.95, w(0)], [6.0, w(1)], [6.05, w(2)], [6.1, w(3)],
            ],
            puddles: vec![[1.95, w(2)], [3.3, w(1)]],
            cars: vec![[1.9, w(0)], [2.0, w(1)], [3.5, w(2)]],
            start: None,
            bicycle: None,
            theta_star: [
                ("speed_desirability", 5.0),
                ("lane_alignment", 2.5),
                ("off_road", 20.0),
                ("cone_distance", 40.0),
                ("car_distance", 50.0),
                ("puddle_distance", 3.0),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        },
    };
    def.build().expect("built-in scenario must be valid")
}

/// Build a world from a built-in id or a scenario file path.
pub fn resolve_scenario(spec: &str) -> Result<World> {
    match ScenarioId::from_str(spec) {
        Ok(id) => Ok(build_scenario(id)),
        Err(_) => {
            let path = Path::new(spec);
            if path.exists() {
                World::load(path)
            } else {
                Err(Error::UnknownScenario(spec.to_string()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn scenario_c_matches_ground_truth() {
        let w = build_scenario(ScenarioId::C);
        assert_eq!(w.dimension(), 4);
        assert_eq!(w.theta_star(), &[5.0, 2.5, 20.0, 40.0]);
        assert_eq!(
            w.feature_names(),
            vec!["speed_desirability", "lane_alignment", "off_road", "cone_distance"]
        );
    }

    #[test]
    fn scenario_cp_matches_ground_truth() {
        let w = build_scenario(ScenarioId::Cp);
        assert_eq!(w.dimension(), 5);
        assert_eq!(w.theta_star(), &[5.0, 1.5, 10.0, 20.0, 1.0]);
        let cone = w
            .active_features()
            .iter()
            .position(|f| *f == Feature::ConeDistance)
            .unwrap();
        let puddle = w
            .active_features()
            .iter()
            .position(|f| *f == Feature::PuddleDistance)
            .unwrap();
        assert_eq!(w.theta_star()[cone], 20.0);
        assert_eq!(w.theta_star()[puddle], 1.0);
    }

    #[test]
    fn scenario_cpc_ground_truth_and_lanes() {
        let w3 = build_scenario(ScenarioId::Cpc3);
        assert_eq!(w3.lanes(), 3);
        assert_eq!(w3.theta_star(), &[5.0, 2.5, 20.0, 40.0, 50.0, 3.0]);
        let w4 = build_scenario(ScenarioId::Cpc4);
        assert_eq!(w4.lanes(), 4);
        let car = w4
            .active_features()
            .iter()
            .position(|f| *f == Feature::CarDistance)
            .unwrap();
        assert_eq!(w4.theta_star()[car], 50.0);
    }

    #[test]
    fn unknown_scenario_is_an_error() {
        assert!(matches!(
            "CX".parse::<ScenarioId>(),
            Err(Error::UnknownScenario(_))
        ));
    }

    #[test]
    fn speed_feature_peaks_at_target() {
        let w = build_scenario(ScenarioId::C);
        let s = State::new(0.0, 0.0, 0.0, w.v_target());
        let fv = w.feature_vector(&s, &Control::default());
        assert_eq!(fv.values[0], 1.0);
    }

    #[test]
    fn lane_feature_zero_at_one_lane_width() {
        let w = build_scenario(ScenarioId::C);
        // one full lane width below lane 0
        let s = State::new(0.0, -w.lane_width(), 0.0, 1.0);
        let fv = w.feature_vector(&s, &Control::default());
        assert!((fv.values[1]).abs() < 1e-12);
    }

    #[test]
    fn off_road_is_one_in_bounds() {
        let w = build_scenario(ScenarioId::C);
        let (lo, hi) = w.road_bounds();
        for y in [lo, 0.0, 0.17, hi] {
            let fv = w.feature_vector(&State::new(0.0, y, 0.0, 1.0), &Control::default());
            assert_eq!(fv.values[2], 1.0);
        }
        let fv = w.feature_vector(&State::new(0.0, hi + 0.17, 0.0, 1.0), &Control::default());
        assert!(fv.values[2] < 1.0);
    }

    #[test]
    fn obstacle_feature_saturates_beyond_safe_radius() {
        let w = build_scenario(ScenarioId::C);
        let cone = w.cones()[0];
        let s = State::new(cone[0], cone[1] + w.r_safe() * 1.01, 0.0, 1.0);
        let fv = w.feature_vector(&s, &Control::default());
        assert_eq!(fv.values[3], 1.0);
        let near = State::new(cone[0], cone[1] + 0.2 * w.r_safe(), 0.0, 1.0);
        assert!(w.feature_vector(&near, &Control::default()).values[3] < 1.0);
    }

    #[test]
    fn trajectory_features_single_step_equals_feature_vector() {
        let w = build_scenario(ScenarioId::C);
        let b = *w.bicycle();
        let t = b
            .rollout(w.start_state(), &[Control::default()], 1.0 / 30.0)
            .unwrap();
        let phi = w.trajectory_features(&t);
        let fv = w.feature_vector(&t.states[0], &t.controls[0]);
        assert_eq!(phi.values, fv.values);
    }

    #[test]
    fn straight_cruise_sums_to_step_count() {
        let w = build_scenario(ScenarioId::C);
        let b = *w.bicycle();
        // far from any cone, at target speed, in lane 0 center
        let s0 = State::new(-10.0, 0.0, 0.0, w.v_target());
        let t = b
            .rollout(s0, &vec![Control::default(); 5], 1.0 / 30.0)
            .unwrap();
        let phi = w.trajectory_features(&t);
        assert!((phi.values[0] - 5.0).abs() < 1e-12); // speed
        assert!((phi.values[2] - 5.0).abs() < 1e-12); // off_road
    }

    #[test]
    fn feature_delta_basics() {
        let a = TrajectoryFeatures { values: vec![2.0, 1.0] };
        let b = TrajectoryFeatures { values: vec![1.0, 3.0] };
        assert_eq!(feature_delta(&a, &b).unwrap(), vec![1.0, -2.0]);
        assert_eq!(feature_delta(&a, &a).unwrap(), vec![0.0, 0.0]);
        let short = TrajectoryFeatures { values: vec![1.0] };
        assert!(feature_delta(&a, &short).is_err());
    }

    #[test]
    fn scenario_file_roundtrip() {
        let text = r#"
name = "custom"
lanes = 2
cones = [[1.0, 0.0]]

[theta_star]
speed_desirability = 1.0
lane_alignment = 1.0
off_road = 1.0
cone_distance = 10.0
"#;
        let w = World::from_toml_str(text).unwrap();
        assert_eq!(w.dimension(), 4);
        assert_eq!(w.theta_star()[3], 10.0);
    }

    #[test]
    fn scenario_file_rejects_missing_weight() {
        let text = r#"
name = "broken"
lanes = 2
cones = [[1.0, 0.0]]

[theta_star]
speed_desirability = 1.0
lane_alignment = 1.0
off_road = 1.0
"#;
        assert!(World::from_toml_str(text).is_err());
    }

    #[test]
    fn scenario_file_rejects_out_of_bounds_obstacle() {
        let text = r#"
name = "broken"
lanes = 2
cones = [[1.0, 5.0]]

[theta_star]
speed_desirability = 1.0
lane_alignment = 1.0
off_road = 1.0
cone_distance = 10.0
"#;
        assert!(World::from_toml_str(text).is_err());
    }

    fn sim_box_state() -> impl Strategy<Value = State> {
        (0.0f64..8.0, -0.1f64..0.6, -1.5f64..1.5, 0.0f64..2.0)
            .prop_map(|(x, y, h, v)| State::new(x, y, h, v))
    }

    proptest! {
        #[test]
        fn features_in_sim_box_are_at_most_one(s in sim_box_state()) {
            for id in ScenarioId::ALL {
                let w = build_scenario(id);
                for v in w.feature_vector(&s, &Control::default()).values {
                    prop_assert!(v <= 1.0 + 1e-12);
                    prop_assert!(v.is_finite());
                }
            }
        }

        #[test]
        fn obstacle_feature_monotone_in_lateral_distance(dy1 in 0.0f64..0.4, dy2 in 0.0f64..0.4) {
            let w = build_scenario(ScenarioId::C);
            let cone = w.cones()[0];
            let (near, far) = if dy1 < dy2 { (dy1, dy2) } else { (dy2, dy1) };
            // same longitudinal distance, different lateral offsets
            let f_near = w
                .feature_vector(&State::new(cone[0] + 0.05, cone[1] + near, 0.0, 1.0), &Control::default())
                .values[3];
            let f_far = w
                .feature_vector(&State::new(cone[0] + 0.05, cone[1] + far, 0.0, 1.0), &Control::default())
                .values[3];
            prop_assert!(f_near <= f_far + 1e-12);
        }

        #[test]
        fn features_are_continuous(s in sim_box_state(), eps in -1e-6f64..1e-6) {
            let w = build_scenario(ScenarioId::Cpc4);
            let a = w.feature_vector(&s, &Control::default());
            let shifted = State::new(s.x + eps, s.y + eps, s.heading, (s.speed + eps).max(0.0));
            let b = w.feature_vector(&shifted, &Control::default());
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-3);
            }
        }

        #[test]
        fn feature_delta_is_antisymmetric(
            v in proptest::collection::vec(-5.0f64..5.0, 1..8)
        ) {
            let a = TrajectoryFeatures { values: v.clone() };
            let b = TrajectoryFeatures { values: v.iter().map(|x| x * 0.5 + 0.1).collect() };
            let ab = feature_delta(&a, &b).unwrap();
            let ba = feature_delta(&b, &a).unwrap();
            for (x, y) in ab.iter().zip(&ba) {
                prop_assert_eq!(*x, -*y);
            }
        }
    }
}
