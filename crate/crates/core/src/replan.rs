//! Sequential BIT*: predict where the timed reference first meets a moving
//! obstacle, drop a virtual static square there, plan again, and repeat
//! until the reference is collision free.
//!
//! Each iteration is one BIT* instance. Because BIT* is anytime, the
//! instance is probed early: once its incumbent has survived
//! `probe_batches` batches the incumbent is timed and checked, and a
//! colliding incumbent ends the iteration right away instead of being
//! refined. Only the iteration that ends up collision free pays for the
//! full batch budget, which keeps the whole loop close to the cost of a
//! single plan.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bitstar::{BitStar, FreeSpace, PlanError, PlannerConfig, PlannerSolution};
use crate::control::RotationProfile;
use crate::geometry::{wrap_angle, AxisRect, Point2, Pose2D, Twist};
use crate::trajectory::{fit_spline_in, generate_reference, TimedTrajectory, TrajectoryError};
use crate::world::{DynamicObstacle, RobotSpec, SceneSnapshot, World};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPrediction {
    pub t_hit: f64,
    /// Robot position at `t_hit`.
    pub x_hit: Point2,
    pub obstacle_id: usize,
}

/// Bisection stops once the bracket is this narrow (seconds).
const BISECT_TOL: f64 = 1e-4;

/// Signed gap between the robot disc and the closest obstacle disc at `t`,
/// with the index of that obstacle.
fn min_gap(
    reference: &TimedTrajectory,
    dynamics: &[DynamicObstacle],
    r_robot: f64,
    t: f64,
) -> (f64, usize) {
    let p = reference.position_at(t);
    let mut best = (f64::INFINITY, 0);
    for (i, o) in dynamics.iter().enumerate() {
        let gap = p.dist(o.pose_at(t).position()) - (r_robot + o.radius);
        if gap < best.0 {
            best = (gap, i);
        }
    }
    best
}

/// Earliest time in `[t_now, t_now + horizon]` at which the robot disc on
/// `reference` overlaps a dynamic obstacle. Overlap is sampled every
/// `dt_check` seconds and the first hit is bracketed and bisected. Before
/// the reference starts the robot is assumed parked at its first pose, and
/// after it ends at its last.
pub fn predict_first_collision(
    reference: &TimedTrajectory,
    dynamics: &[DynamicObstacle],
    r_robot: f64,
    t_now: f64,
    horizon: f64,
    dt_check: f64,
) -> Option<CollisionPrediction> {
    assert!(dt_check > 0.0, "dt_check must be positive");
    if dynamics.is_empty() || reference.samples.is_empty() {
        return None;
    }
    let hit_at = |t: f64| {
        let (_, id) = min_gap(reference, dynamics, r_robot, t);
        CollisionPrediction {
            t_hit: t,
            x_hit: reference.position_at(t),
            obstacle_id: id,
        }
    };
    if min_gap(reference, dynamics, r_robot, t_now).0 < 0.0 {
        return Some(hit_at(t_now));
    }
    let t_end = t_now + horizon.max(0.0);
    let steps = (horizon.max(0.0) / dt_check).ceil() as usize;
    let mut prev = t_now;
    for k in 1..=steps {
        let t = (t_now + k as f64 * dt_check).min(t_end);
        if min_gap(reference, dynamics, r_robot, t).0 < 0.0 {
            let (mut lo, mut hi) = (prev, t);
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                if min_gap(reference, dynamics, r_robot, mid).0 < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hit_at(hi));
        }
        prev = t;
    }
    None
}

/// Square centered on the collision point with side
/// `2 * (robot_diameter + obstacle_diameter)`.
pub fn make_virtual_obstacle(
    x_hit: Point2,
    robot_diameter: f64,
    obstacle_diameter: f64,
) -> AxisRect {
    AxisRect::square(x_hit, 2.0 * (robot_diameter + obstacle_diameter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanConfig {
    pub planner: PlannerConfig,
    pub max_iterations: usize,
    /// Sampling period of the generated reference.
    pub dt: f64,
    pub dt_check: f64,
    /// Extra clearance added to the robot radius for planning and for
    /// collision prediction; absorbs tracking error.
    pub clearance: f64,
    /// Batches an incumbent must survive before it is probed.
    pub probe_batches: usize,
    /// Departure delay added when a new virtual square would swallow the
    /// start or goal.
    pub wait_step: f64,
}

impl Default for ReplanConfig {
    fn default() -> Self {
        Self {
            planner: PlannerConfig::default(),
            max_iterations: 8,
            dt: 0.05,
            dt_check: 0.05,
            clearance: 0.1,
            probe_batches: 2,
            wait_step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplanState {
    /// Every path planned during the call, the accepted one last.
    pub planned_paths: Vec<PlannerSolution>,
    /// Squares added during this call, in order.
    pub virtuals: Vec<AxisRect>,
    /// Collision points that produced `virtuals`.
    pub hits: Vec<CollisionPrediction>,
    /// BIT* invocations.
    pub iterations: usize,
    pub max_iterations: usize,
    /// Departure delay accumulated by the wait rule (seconds).
    pub wait: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplanError {
    #[error("no collision-free path after {} iterations", .0.iterations)]
    MaxIterations(ReplanState),
    #[error("planner failed: {source}")]
    NoPath {
        source: PlanError,
        state: ReplanState,
    },
    #[error("could not time-parameterize the path: {0}")]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanOutcome {
    pub solution: PlannerSolution,
    /// Reference in absolute time, starting at `departure`.
    pub trajectory: TimedTrajectory,
    /// In-place turn onto the reference's initial heading, one command per
    /// `dt`, executed from `t_now`.
    pub rotation: Vec<Twist>,
    pub departure: f64,
    pub state: ReplanState,
    pub wall_time: Duration,
}

/// Planner snapshot: statics plus every virtual whose inflated square does
/// not contain the start or goal. A square left behind by an earlier
/// re-plan can cover the robot's current position; such squares are
/// skipped so the query stays well posed.
fn planning_scene(world: &World, start: Point2, goal: Point2, inflation: f64) -> SceneSnapshot {
    let usable: Vec<AxisRect> = world
        .virtuals
        .iter()
        .filter(|v| !blocks(v, start, goal, inflation))
        .copied()
        .collect();
    SceneSnapshot::with_virtuals(world.bounds, &world.statics, &usable)
}

fn blocks(v: &AxisRect, start: Point2, goal: Point2, inflation: f64) -> bool {
    let grown = AxisRect::new(
        v.center,
        v.half_width + inflation,
        v.half_height + inflation,
    );
    grown.contains(start) || grown.contains(goal)
}

struct Candidate {
    trajectory: TimedTrajectory,
    rotation: Vec<Twist>,
    departure: f64,
}

fn time_path(
    world: &World,
    sol: &PlannerSolution,
    start: &Pose2D,
    t_now: f64,
    wait: f64,
    robot: &RobotSpec,
    cfg: &ReplanConfig,
) -> Result<Candidate, TrajectoryError> {
    let free = FreeSpace::from_parts(
        &world.bounds,
        world.statics.clone(),
        robot.radius + 0.5 * cfg.clearance,
    );
    let (spline, _) = fit_spline_in(&free, &sol.waypoints, cfg.planner.edge_check_resolution)?;
    let local = generate_reference(&spline, &robot.limits, cfg.dt);
    let heading = local.samples[0].pose.theta;
    let delta = wrap_angle(heading - start.theta);
    let rotation = RotationProfile::new(delta, &robot.limits).commands(cfg.dt);
    let wait_steps = (wait / cfg.dt).round();
    let departure = t_now + (rotation.len() as f64 + wait_steps) * cfg.dt;
    Ok(Candidate {
        trajectory: local.shifted(departure),
        rotation,
        departure,
    })
}

fn check(
    world: &World,
    cand: &Candidate,
    t_now: f64,
    robot: &RobotSpec,
    cfg: &ReplanConfig,
) -> Option<CollisionPrediction> {
    let horizon = cand.trajectory.end_time() - t_now;
    predict_first_collision(
        &cand.trajectory,
        &world.dynamics,
        robot.radius + cfg.clearance,
        t_now,
        horizon,
        cfg.dt_check,
    )
}

/// Runs the plan / predict / add-virtual loop from `start` (robot at rest)
/// at time `t_now`. Virtual squares are appended to `world.virtuals` and
/// stay there.
pub fn replan(
    world: &mut World,
    start: Pose2D,
    goal: Point2,
    t_now: f64,
    robot: &RobotSpec,
    cfg: &ReplanConfig,
) -> Result<ReplanOutcome, ReplanError> {
    let clock = Instant::now();
    let inflation = robot.radius + cfg.clearance;
    let mut state = ReplanState {
        max_iterations: cfg.max_iterations,
        ..ReplanState::default()
    };
    let origin = start.position();
    if origin == goal {
        return Err(TrajectoryError::TooFewPoints(1).into());
    }
    // One batch and time budget for the whole call, so a re-plan costs about
    // one BIT* run; every instance may still use at least half the batches.
    let deadline = clock + Duration::from_secs_f64(cfg.planner.time_budget);
    let floor = cfg.planner.max_batches.div_ceil(2).max(1);
    let mut used_batches = 0;

    while state.iterations < cfg.max_iterations {
        let mut pcfg = cfg.planner.clone();
        pcfg.inflation = inflation;
        pcfg.rng_seed = cfg.planner.rng_seed.wrapping_add(state.iterations as u64);
        state.iterations += 1;

        let scene = planning_scene(world, origin, goal, inflation);
        let mut planner = match BitStar::new(&scene, origin, goal, pcfg.clone()) {
            Ok(p) => p,
            Err(source) => return Err(ReplanError::NoPath { source, state }),
        };
        let budget = cfg
            .planner
            .max_batches
            .saturating_sub(used_batches)
            .max(floor);
        let mut probed = false;
        let mut early_hit = None;
        loop {
            planner.run_batch();
            let done =
                planner.batches() >= budget || planner.is_optimal() || Instant::now() >= deadline;
            if done {
                break;
            }
            if !probed && planner.best_cost().is_finite() {
                let seen = planner
                    .per_batch_costs()
                    .iter()
                    .filter(|c| c.is_finite())
                    .count();
                if seen >= cfg.probe_batches {
                    probed = true;
                    let sol = planner.solution().expect("finite incumbent");
                    let cand = time_path(world, &sol, &start, t_now, state.wait, robot, cfg)?;
                    if let Some(hit) = check(world, &cand, t_now, robot, cfg) {
                        early_hit = Some((sol, hit));
                        break;
                    }
                }
            }
        }

        used_batches += planner.batches();
        let (sol, hit) = match early_hit {
            Some((sol, hit)) => (sol, Some(hit)),
            None => {
                let Some(sol) = planner.solution() else {
                    let source = PlanError::NoPath {
                        batches: planner.batches(),
                        samples: planner.samples_used(),
                    };
                    return Err(ReplanError::NoPath { source, state });
                };
                let cand = time_path(world, &sol, &start, t_now, state.wait, robot, cfg)?;
                match check(world, &cand, t_now, robot, cfg) {
                    None => {
                        state.planned_paths.push(sol.clone());
                        return Ok(ReplanOutcome {
                            solution: sol,
                            trajectory: cand.trajectory,
                            rotation: cand.rotation,
                            departure: cand.departure,
                            state,
                            wall_time: clock.elapsed(),
                        });
                    }
                    Some(hit) => (sol, Some(hit)),
                }
            }
        };
        state.planned_paths.push(sol);
        if let Some(hit) = hit {
            let obs = &world.dynamics[hit.obstacle_id];
            let square = make_virtual_obstacle(hit.x_hit, 2.0 * robot.radius, 2.0 * obs.radius);
            if blocks(&square, origin, goal, inflation) {
                state.wait += cfg.wait_step;
            }
            world.virtuals.push(square);
            state.virtuals.push(square);
            state.hits.push(hit);
        }
    }
    Err(ReplanError::MaxIterations(state))
}
