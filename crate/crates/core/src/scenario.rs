//! Scenario files (TOML): arena, robot, obstacles, and run settings.
//!
//! ```toml
//! name = "demo"
//! [bounds]
//! w = 15.0
//! h = 11.0
//! [robot]
//! radius = 0.25
//! v_max = 0.4
//! omega_max = 0.4
//! a_max = 0.4
//! alpha_max = 1.0
//! start = { x = 1.0, y = 1.0, theta = 0.0 }
//! goal = { x = 13.0, y = 9.0 }
//! [[statics]]
//! cx = 7.0
//! cy = 5.0
//! hw = 1.0
//! hh = 2.0
//! [[dynamics]]
//! radius = 0.25
//! x = 3.0
//! y = 8.0
//! theta = 0.0
//! v = 0.12
//! omega = 0.0
//! [sim]
//! dt = 0.05
//! t_max = 120.0
//! runs = 30
//! seed = 1
//! ```
//!
//! `[robot]` limits default to the Pioneer-class values, `[sim]` and the
//! optional `[dovs]` table fall back to defaults key by key.

use serde::Deserialize;
use thiserror::Error;

use crate::dovs::DovsConfig;
use crate::geometry::{AxisRect, Point2, Pose2D};
use crate::trajectory::RobotLimits;
use crate::world::{DynamicObstacle, RobotSpec, World};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown bundled scenario `{0}`")]
    UnknownBundled(String),
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub dt: f64,
    pub t_max: f64,
    pub runs: usize,
    pub seed: u64,
    pub goal_tolerance: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_max: 120.0,
            runs: 30,
            seed: 1,
            goal_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub world: World,
    pub robot: RobotSpec,
    pub start: Pose2D,
    pub goal: Point2,
    pub sim: SimSettings,
    pub dovs: DovsConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default)]
    name: String,
    #[serde(default)]
    description: String,
    bounds: RawBounds,
    robot: RawRobot,
    #[serde(default)]
    statics: Vec<RawStatic>,
    #[serde(default)]
    dynamics: Vec<RawDynamic>,
    #[serde(default)]
    sim: RawSim,
    #[serde(default)]
    dovs: RawDovs,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBounds {
    w: f64,
    h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPose {
    x: f64,
    y: f64,
    #[serde(default)]
    theta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoint {
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRobot {
    radius: f64,
    v_max: Option<f64>,
    omega_max: Option<f64>,
    a_max: Option<f64>,
    alpha_max: Option<f64>,
    start: RawPose,
    goal: RawPoint,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStatic {
    cx: f64,
    cy: f64,
    hw: f64,
    hh: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamic {
    radius: f64,
    x: f64,
    y: f64,
    theta: f64,
    v: f64,
    omega: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSim {
    dt: Option<f64>,
    t_max: Option<f64>,
    runs: Option<usize>,
    seed: Option<u64>,
    goal_tolerance: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawDovs {
    d_safe: Option<f64>,
    horizon: Option<f64>,
    n_v: Option<usize>,
    n_omega: Option<usize>,
    dt_check: Option<f64>,
    heading_gain: Option<f64>,
    heading_step: Option<f64>,
    turn_weight: Option<f64>,
    margin: Option<f64>,
}

fn finite(key: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(key, "must be finite"))
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ScenarioError> {
    if finite(key, v)? > 0.0 {
        Ok(v)
    } else {
        Err(invalid(key, format!("must be > 0, got {v}")))
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;

    let w = positive("bounds.w", raw.bounds.w)?;
    let h = positive("bounds.h", raw.bounds.h)?;
    let bounds = AxisRect::from_extent(w, h);

    let r = &raw.robot;
    let d = RobotLimits::default();
    let limits = RobotLimits {
        v_max: positive("robot.v_max", r.v_max.unwrap_or(d.v_max))?,
        omega_max: positive("robot.omega_max", r.omega_max.unwrap_or(d.omega_max))?,
        a_max: positive("robot.a_max", r.a_max.unwrap_or(d.a_max))?,
        alpha_max: positive("robot.alpha_max", r.alpha_max.unwrap_or(d.alpha_max))?,
    };
    let robot = RobotSpec {
        radius: positive("robot.radius", r.radius)?,
        limits,
    };
    let start = Pose2D::new(
        finite("robot.start.x", r.start.x)?,
        finite("robot.start.y", r.start.y)?,
        finite("robot.start.theta", r.start.theta)?,
    );
    let goal = Point2::new(
        finite("robot.goal.x", r.goal.x)?,
        finite("robot.goal.y", r.goal.y)?,
    );
    if !bounds.contains(start.position()) {
        return Err(invalid("robot.start", "outside bounds"));
    }
    if !bounds.contains(goal) {
        return Err(invalid("robot.goal", "outside bounds"));
    }

    let mut statics = Vec::with_capacity(raw.statics.len());
    for (i, s) in raw.statics.iter().enumerate() {
        let key = |f: &str| format!("statics[{i}].{f}");
        let rect = AxisRect::new(
            Point2::new(finite(&key("cx"), s.cx)?, finite(&key("cy"), s.cy)?),
            positive(&key("hw"), s.hw)?,
            positive(&key("hh"), s.hh)?,
        );
        if !bounds.contains_rect(&rect) {
            return Err(invalid(format!("statics[{i}]"), "not inside bounds"));
        }
        statics.push(rect);
    }

    let mut dynamics = Vec::with_capacity(raw.dynamics.len());
    for (i, o) in raw.dynamics.iter().enumerate() {
        let key = |f: &str| format!("dynamics[{i}].{f}");
        let pose = Pose2D::new(
            finite(&key("x"), o.x)?,
            finite(&key("y"), o.y)?,
            finite(&key("theta"), o.theta)?,
        );
        if !bounds.contains(pose.position()) {
            return Err(invalid(
                format!("dynamics[{i}]"),
                "initial position outside bounds",
            ));
        }
        let v = finite(&key("v"), o.v)?;
        if v < 0.0 {
            return Err(invalid(key("v"), "must be >= 0"));
        }
        dynamics.push(DynamicObstacle::new(
            positive(&key("radius"), o.radius)?,
            pose,
            v,
            finite(&key("omega"), o.omega)?,
        ));
    }

    let sd = SimSettings::default();
    let sim = SimSettings {
        dt: positive("sim.dt", raw.sim.dt.unwrap_or(sd.dt))?,
        t_max: positive("sim.t_max", raw.sim.t_max.unwrap_or(sd.t_max))?,
        runs: raw.sim.runs.unwrap_or(sd.runs),
        seed: raw.sim.seed.unwrap_or(sd.seed),
        goal_tolerance: positive(
            "sim.goal_tolerance",
            raw.sim.goal_tolerance.unwrap_or(sd.goal_tolerance),
        )?,
    };
    if sim.runs == 0 {
        return Err(invalid("sim.runs", "must be >= 1"));
    }

    let dd = DovsConfig::default();
    let dovs = DovsConfig {
        horizon: positive("dovs.horizon", raw.dovs.horizon.unwrap_or(dd.horizon))?,
        d_safe: positive("dovs.d_safe", raw.dovs.d_safe.unwrap_or(dd.d_safe))?,
        n_v: raw.dovs.n_v.unwrap_or(dd.n_v),
        n_omega: raw.dovs.n_omega.unwrap_or(dd.n_omega),
        dt_check: positive("dovs.dt_check", raw.dovs.dt_check.unwrap_or(dd.dt_check))?,
        heading_gain: positive(
            "dovs.heading_gain",
            raw.dovs.heading_gain.unwrap_or(dd.heading_gain),
        )?,
        heading_step: positive(
            "dovs.heading_step",
            raw.dovs.heading_step.unwrap_or(dd.heading_step),
        )?,
        turn_weight: finite(
            "dovs.turn_weight",
            raw.dovs.turn_weight.unwrap_or(dd.turn_weight),
        )?
        .max(0.0),
        margin: finite("dovs.margin", raw.dovs.margin.unwrap_or(dd.margin))?.max(0.0),
    };
    if dovs.n_v < 8 {
        return Err(invalid("dovs.n_v", "must be >= 8"));
    }
    if dovs.n_omega < 8 {
        return Err(invalid("dovs.n_omega", "must be >= 8"));
    }

    Ok(Scenario {
        name: raw.name,
        description: raw.description,
        world: World::new(bounds)
            .with_statics(statics)
            .with_dynamics(dynamics),
        robot,
        start,
        goal,
        sim,
        dovs,
    })
}

/// Scenarios shipped with the library, by name.
pub const BUNDLED: [(&str, &str); 3] = [
    (
        "paper-1obs",
        include_str!("../../../scenarios/paper-1obs.toml"),
    ),
    (
        "paper-2obs",
        include_str!("../../../scenarios/paper-2obs.toml"),
    ),
    (
        "paper-3obs",
        include_str!("../../../scenarios/paper-3obs.toml"),
    ),
];

/// Names accepted by [`bundled`].
pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".toml").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn bundled(name: &str) -> Result<Scenario, ScenarioError> {
    let text = bundled_text(name).ok_or_else(|| ScenarioError::UnknownBundled(name.into()))?;
    load_scenario(text)
}
