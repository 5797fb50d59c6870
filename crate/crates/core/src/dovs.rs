//! Simplified dynamic-obstacle velocity-space planner used as the baseline.
//!
//! Every step the admissible twists are gridded, each cell is rolled out at
//! constant twist over a short horizon against the known obstacle motions,
//! and the free reachable cell closest to a goal-seeking twist is chosen.
//! Static obstacles only count once they are within `d_safe` of the robot,
//! so a wall that is farther away is invisible until the robot is close.

use serde::{Deserialize, Serialize};

use crate::control::RobotState;
use crate::geometry::{wrap_angle, AxisRect, Point2, Pose2D, Twist};
use crate::trajectory::RobotLimits;
use crate::world::{DynamicObstacle, RobotSpec, World};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DovsConfig {
    /// Rollout length in seconds.
    pub horizon: f64,
    pub d_safe: f64,
    pub n_v: usize,
    pub n_omega: usize,
    pub dt_check: f64,
    /// Goal twist yaw rate per radian of bearing error.
    pub heading_gain: f64,
    /// Angular step (radians) of the free-heading scan.
    pub heading_step: f64,
    /// Weight of the turn away from the current heading in that scan.
    pub turn_weight: f64,
    /// Extra gap required around the robot in every rollout.
    pub margin: f64,
}

impl Default for DovsConfig {
    fn default() -> Self {
        Self {
            horizon: 5.0,
            d_safe: 1.0,
            n_v: 41,
            n_omega: 41,
            dt_check: 0.1,
            heading_gain: 1.0,
            heading_step: 0.087_266_462_599_716_48,
            turn_weight: 0.5,
            margin: 0.05,
        }
    }
}

/// Forbidden mask over `v in [0, v_max]` by `omega in [-omega_max, omega_max]`,
/// row-major in `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    pub v_max: f64,
    pub omega_max: f64,
    pub n_v: usize,
    pub n_omega: usize,
    pub forbidden: Vec<bool>,
}

impl VelocityGrid {
    pub fn v_at(&self, i: usize) -> f64 {
        self.v_max * i as f64 / (self.n_v - 1) as f64
    }

    pub fn omega_at(&self, j: usize) -> f64 {
        -self.omega_max + 2.0 * self.omega_max * j as f64 / (self.n_omega - 1) as f64
    }

    pub fn twist(&self, i: usize, j: usize) -> Twist {
        Twist::new(self.v_at(i), self.omega_at(j))
    }

    pub fn is_forbidden(&self, i: usize, j: usize) -> bool {
        self.forbidden[i * self.n_omega + j]
    }

    pub fn forbidden_count(&self) -> usize {
        self.forbidden.iter().filter(|&&f| f).count()
    }
}

/// Obstacles a DOVS query sees at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Surroundings<'a> {
    pub t: f64,
    pub dynamics: &'a [DynamicObstacle],
    pub statics: &'a [AxisRect],
}

/// Statics currently within `d_safe` of the robot disc; all others are
/// ignored for this step.
pub fn statics_in_range(
    pose: &Pose2D,
    radius: f64,
    statics: &[AxisRect],
    d_safe: f64,
) -> Vec<AxisRect> {
    statics
        .iter()
        .filter(|r| r.distance_to_point(pose.position()) - radius <= d_safe)
        .copied()
        .collect()
}

/// True if holding `twist` from `pose` for the horizon brings the robot disc,
/// grown by `cfg.margin`, into contact with a dynamic obstacle or one of
/// `near_statics`.
pub fn twist_forbidden(
    pose: &Pose2D,
    twist: Twist,
    radius: f64,
    env: &Surroundings<'_>,
    near_statics: &[AxisRect],
    cfg: &DovsConfig,
) -> bool {
    let steps = (cfg.horizon / cfg.dt_check).ceil() as usize;
    let r_eff = radius + cfg.margin;
    for k in 1..=steps {
        let tau = (k as f64 * cfg.dt_check).min(cfg.horizon);
        let p = pose.integrate(twist, tau).position();
        for o in env.dynamics {
            if p.dist(o.pose_at(env.t + tau).position()) < r_eff + o.radius {
                return true;
            }
        }
        for r in near_statics {
            if r.distance_to_point(p) < r_eff {
                return true;
            }
        }
    }
    false
}

/// Full forbidden-velocity grid for the robot at `state`.
pub fn forbidden_velocities(
    state: &RobotState,
    radius: f64,
    env: &Surroundings<'_>,
    cfg: &DovsConfig,
    limits: &RobotLimits,
) -> VelocityGrid {
    let near = statics_in_range(&state.pose, radius, env.statics, cfg.d_safe);
    let mut grid = VelocityGrid {
        v_max: limits.v_max,
        omega_max: limits.omega_max,
        n_v: cfg.n_v,
        n_omega: cfg.n_omega,
        forbidden: vec![false; cfg.n_v * cfg.n_omega],
    };
    for i in 0..cfg.n_v {
        for j in 0..cfg.n_omega {
            let tw = grid.twist(i, j);
            grid.forbidden[i * cfg.n_omega + j] =
                twist_forbidden(&state.pose, tw, radius, env, &near, cfg);
        }
    }
    grid
}

/// Scale-free distance between twists.
pub fn twist_distance(a: Twist, b: Twist, limits: &RobotLimits) -> f64 {
    (a.v - b.v).abs() / limits.v_max + (a.omega - b.omega).abs() / limits.omega_max
}

/// Goal-seeking twist: full speed, yaw rate proportional to bearing error.
/// [`dovs_step`] steers for [`steer_heading`] instead, which equals the
/// bearing whenever the way to the goal is clear.
pub fn goal_twist(pose: &Pose2D, goal: Point2, cfg: &DovsConfig, limits: &RobotLimits) -> Twist {
    let d = goal - pose.position();
    let bearing = wrap_angle(d.y.atan2(d.x) - pose.theta);
    Twist::new(
        limits.v_max,
        (cfg.heading_gain * bearing).clamp(-limits.omega_max, limits.omega_max),
    )
}

/// Heading to steer for: the bearing to the goal when a straight full-speed
/// run that way is free over the horizon. Otherwise the free heading,
/// scanned in `heading_step` increments, that minimizes the deviation from
/// the bearing plus `turn_weight` times the turn from the current heading;
/// the second term keeps the robot committed to one side of an obstacle.
/// Falls back to the bearing when every heading is blocked.
pub fn steer_heading(
    pose: &Pose2D,
    goal: Point2,
    radius: f64,
    env: &Surroundings<'_>,
    near_statics: &[AxisRect],
    cfg: &DovsConfig,
    limits: &RobotLimits,
) -> f64 {
    let d = goal - pose.position();
    let bearing = d.y.atan2(d.x);
    // Only look as far as the goal itself.
    let reach = d.norm().min(limits.v_max * cfg.horizon);
    let probe = DovsConfig {
        horizon: reach / limits.v_max,
        ..*cfg
    };
    let free = |psi: f64| {
        let probe_pose = Pose2D::new(pose.x, pose.y, psi);
        !twist_forbidden(
            &probe_pose,
            Twist::new(limits.v_max, 0.0),
            radius,
            env,
            near_statics,
            &probe,
        )
    };
    if free(bearing) {
        return bearing;
    }
    let n = (std::f64::consts::PI / cfg.heading_step).floor() as usize;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..=n {
        for sign in [1.0, -1.0] {
            let dev = k as f64 * cfg.heading_step;
            let psi = bearing + sign * dev;
            let cost = dev + cfg.turn_weight * wrap_angle(psi - pose.theta).abs();
            if best.is_some_and(|(c, _)| c <= cost) || !free(psi) {
                continue;
            }
            best = Some((cost, psi));
        }
    }
    best.map_or(bearing, |(_, psi)| psi)
}

/// Goal twist toward an explicit heading.
pub fn heading_twist(pose: &Pose2D, heading: f64, cfg: &DovsConfig, limits: &RobotLimits) -> Twist {
    let err = wrap_angle(heading - pose.theta);
    Twist::new(
        limits.v_max,
        (cfg.heading_gain * err).clamp(-limits.omega_max, limits.omega_max),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub v: (f64, f64),
    pub omega: (f64, f64),
}

/// Twists reachable from `current` within one step.
pub fn reachable_window(current: Twist, limits: &RobotLimits, dt: f64) -> Window {
    let (dv, dw) = (limits.a_max * dt, limits.alpha_max * dt);
    Window {
        v: (
            (current.v - dv).max(0.0),
            (current.v + dv).min(limits.v_max),
        ),
        omega: (
            (current.omega - dw).max(-limits.omega_max),
            (current.omega + dw).min(limits.omega_max),
        ),
    }
}

impl Window {
    pub fn contains(&self, t: Twist) -> bool {
        const EPS: f64 = 1e-12;
        t.v >= self.v.0 - EPS
            && t.v <= self.v.1 + EPS
            && t.omega >= self.omega.0 - EPS
            && t.omega <= self.omega.1 + EPS
    }

    pub fn clamp(&self, t: Twist) -> Twist {
        Twist::new(
            t.v.clamp(self.v.0, self.v.1),
            t.omega.clamp(self.omega.0, self.omega.1),
        )
    }
}

/// What [`choose_velocity`] decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Choice {
    Free(Twist),
    /// No reachable twist was free: brake and turn.
    Fallback(Twist),
}

impl Choice {
    pub fn twist(&self) -> Twist {
        match *self {
            Choice::Free(t) | Choice::Fallback(t) => t,
        }
    }
}

/// Picks the free reachable twist closest to `goal`. Candidates are the
/// grid cells inside the acceleration window plus `goal` clamped into the
/// window; `is_free` decides candidates that are not grid cells.
pub fn choose_velocity(
    grid: &VelocityGrid,
    current: Twist,
    goal: Twist,
    limits: &RobotLimits,
    dt: f64,
    is_free: impl Fn(Twist) -> bool,
) -> Choice {
    let win = reachable_window(current, limits, dt);
    let projected = win.clamp(goal);
    let mut best: Option<(f64, Twist)> = None;
    if is_free(projected) {
        best = Some((twist_distance(projected, goal, limits), projected));
    }
    for i in 0..grid.n_v {
        for j in 0..grid.n_omega {
            let tw = grid.twist(i, j);
            if !win.contains(tw) || grid.is_forbidden(i, j) {
                continue;
            }
            let d = twist_distance(tw, goal, limits);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, tw));
            }
        }
    }
    match best {
        Some((_, tw)) => Choice::Free(tw),
        None => Choice::Fallback(fallback(grid, current, goal, limits, dt)),
    }
}

/// Brake at `a_max` and turn toward the free cell with the closest yaw rate.
fn fallback(
    grid: &VelocityGrid,
    current: Twist,
    goal: Twist,
    limits: &RobotLimits,
    dt: f64,
) -> Twist {
    let mut target = None::<f64>;
    for i in 0..grid.n_v {
        for j in 0..grid.n_omega {
            if grid.is_forbidden(i, j) {
                continue;
            }
            let w = grid.omega_at(j);
            if target.is_none_or(|t| (w - current.omega).abs() < (t - current.omega).abs()) {
                target = Some(w);
            }
        }
    }
    let target = target.unwrap_or_else(|| limits.omega_max.copysign(goal.omega));
    let dw = limits.alpha_max * dt;
    Twist::new(
        (current.v - limits.a_max * dt).max(0.0),
        current.omega + (target - current.omega).clamp(-dw, dw),
    )
}

/// Walls around the arena as four slabs just outside its bounds.
pub fn arena_walls(bounds: &AxisRect) -> [AxisRect; 4] {
    let (lo, hi) = (bounds.min(), bounds.max());
    let t = 1.0;
    let (w, h) = (bounds.width(), bounds.height());
    [
        AxisRect::new(
            Point2::new(lo.x - t / 2.0, bounds.center.y),
            t / 2.0,
            h / 2.0 + t,
        ),
        AxisRect::new(
            Point2::new(hi.x + t / 2.0, bounds.center.y),
            t / 2.0,
            h / 2.0 + t,
        ),
        AxisRect::new(
            Point2::new(bounds.center.x, lo.y - t / 2.0),
            w / 2.0 + t,
            t / 2.0,
        ),
        AxisRect::new(
            Point2::new(bounds.center.x, hi.y + t / 2.0),
            w / 2.0 + t,
            t / 2.0,
        ),
    ]
}

/// One DOVS decision at time `t`. Only the cells inside the acceleration
/// window are rolled out unless the fallback needs the whole grid.
pub fn dovs_step(
    state: &RobotState,
    world: &World,
    t: f64,
    goal: Point2,
    robot: &RobotSpec,
    cfg: &DovsConfig,
    dt: f64,
) -> Choice {
    let limits = &robot.limits;
    let mut statics = world.statics.clone();
    statics.extend(arena_walls(&world.bounds));
    let env = Surroundings {
        t,
        dynamics: &world.dynamics,
        statics: &statics,
    };
    let near = statics_in_range(&state.pose, robot.radius, &statics, cfg.d_safe);
    let blocked = |tw: Twist| twist_forbidden(&state.pose, tw, robot.radius, &env, &near, cfg);
    let win = reachable_window(state.twist, limits, dt);
    let mut grid = VelocityGrid {
        v_max: limits.v_max,
        omega_max: limits.omega_max,
        n_v: cfg.n_v,
        n_omega: cfg.n_omega,
        forbidden: vec![true; cfg.n_v * cfg.n_omega],
    };
    for i in 0..cfg.n_v {
        for j in 0..cfg.n_omega {
            let tw = grid.twist(i, j);
            if win.contains(tw) {
                grid.forbidden[i * cfg.n_omega + j] = blocked(tw);
            }
        }
    }
    let heading = steer_heading(&state.pose, goal, robot.radius, &env, &near, cfg, limits);
    let goal_tw = heading_twist(&state.pose, heading, cfg, limits);
    match choose_velocity(&grid, state.twist, goal_tw, limits, dt, |tw| !blocked(tw)) {
        Choice::Free(tw) => Choice::Free(tw),
        Choice::Fallback(_) => {
            let full = forbidden_velocities(state, robot.radius, &env, cfg, limits);
            Choice::Fallback(fallback(&full, state.twist, goal_tw, limits, dt))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small_cfg() -> DovsConfig {
        DovsConfig {
            n_v: 11,
            n_omega: 11,
            ..DovsConfig::default()
        }
    }

    fn index_of(grid: &VelocityGrid, v: f64, w: f64) -> (usize, usize) {
        let i = (0..grid.n_v)
            .find(|&i| (grid.v_at(i) - v).abs() < 1e-12)
            .unwrap();
        let j = (0..grid.n_omega)
            .find(|&j| (grid.omega_at(j) - w).abs() < 1e-12)
            .unwrap();
        (i, j)
    }

    #[test]
    fn empty_world_has_empty_mask() {
        let st = RobotState::at_rest(Pose2D::new(5., 5., 0.));
        let env = Surroundings {
            t: 0.0,
            dynamics: &[],
            statics: &[],
        };
        let g = forbidden_velocities(&st, 0.25, &env, &small_cfg(), &RobotLimits::default());
        assert_eq!(g.forbidden_count(), 0);
    }

    #[test]
    fn head_on_obstacle_blocks_full_speed_only() {
        let st = RobotState::at_rest(Pose2D::new(0., 0., 0.));
        let o = [DynamicObstacle::new(
            0.25,
            Pose2D::new(2.0, 0.0, PI),
            0.12,
            0.0,
        )];
        let env = Surroundings {
            t: 0.0,
            dynamics: &o,
            statics: &[],
        };
        let g = forbidden_velocities(&st, 0.25, &env, &small_cfg(), &RobotLimits::default());
        let (i, j) = index_of(&g, 0.4, 0.0);
        assert!(g.is_forbidden(i, j));
        let (i, j) = index_of(&g, 0.0, 0.0);
        assert!(!g.is_forbidden(i, j));
    }

    #[test]
    fn far_wall_is_ignored() {
        let st = RobotState::at_rest(Pose2D::new(0., 0., 0.));
        // Wall face 2 m ahead of the robot center.
        let wall = [AxisRect::new(Point2::new(2.5, 0.0), 0.5, 3.0)];
        let env = Surroundings {
            t: 0.0,
            dynamics: &[],
            statics: &wall,
        };
        let cfg = small_cfg();
        let g = forbidden_velocities(&st, 0.25, &env, &cfg, &RobotLimits::default());
        assert_eq!(g.forbidden_count(), 0);
        // Yet full speed straight ahead does reach it within the horizon.
        assert!(twist_forbidden(
            &st.pose,
            Twist::new(0.4, 0.0),
            0.25,
            &env,
            &wall,
            &cfg
        ));
    }

    #[test]
    fn goal_twist_when_reachable() {
        let limits = RobotLimits::default();
        let g = VelocityGrid {
            v_max: 0.4,
            omega_max: 0.4,
            n_v: 11,
            n_omega: 11,
            forbidden: vec![false; 121],
        };
        let cur = Twist::new(0.39, 0.0);
        let goal = Twist::new(0.4, 0.02);
        assert_eq!(
            choose_velocity(&g, cur, goal, &limits, 0.05, |_| true),
            Choice::Free(goal)
        );
        let far = Twist::new(0.4, 0.4);
        let got = choose_velocity(&g, Twist::new(0.1, 0.0), far, &limits, 0.05, |_| true);
        let tw = got.twist();
        assert!(matches!(got, Choice::Free(_)));
        assert!((tw.v - 0.12).abs() < 1e-12 && (tw.omega - 0.05).abs() < 1e-12);
    }

    #[test]
    fn blocked_window_brakes() {
        let limits = RobotLimits::default();
        let mut g = VelocityGrid {
            v_max: 0.4,
            omega_max: 0.4,
            n_v: 11,
            n_omega: 11,
            forbidden: vec![true; 121],
        };
        // Only hard turns at rest are free.
        for j in [0, 10] {
            g.forbidden[j] = false;
        }
        let cur = Twist::new(0.3, 0.0);
        let c = choose_velocity(&g, cur, Twist::new(0.4, 0.0), &limits, 0.05, |_| false);
        assert!(matches!(c, Choice::Fallback(_)));
        assert!(c.twist().v < cur.v);
        assert!((c.twist().omega.abs() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn arena_walls_touch_bounds() {
        let b = AxisRect::from_extent(15., 11.);
        for w in arena_walls(&b) {
            assert!(w.distance_to_point(Point2::new(7.5, 5.5)) >= 5.5 - 1e-12);
        }
        let near = arena_walls(&b)[0].distance_to_point(Point2::new(0.1, 5.0));
        assert!((near - 0.1).abs() < 1e-12);
    }
}
