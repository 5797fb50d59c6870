//! Environment model: known static map, scripted dynamic obstacles, and the
//! virtual-obstacle overlay that the re-planner grows.

use serde::{Deserialize, Serialize};

use crate::geometry::{AxisRect, Disc, Point2, Pose2D, Twist};
use crate::trajectory::RobotLimits;

/// Disc-shaped differential-drive robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub radius: f64,
    pub limits: RobotLimits,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            radius: 0.25,
            limits: RobotLimits::default(),
        }
    }
}

/// Constant twist followed by a dynamic obstacle for its whole lifetime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleMotion {
    pub v: f64,
    pub omega: f64,
}

impl ObstacleMotion {
    pub fn twist(&self) -> Twist {
        Twist::new(self.v, self.omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicObstacle {
    pub radius: f64,
    pub initial_pose: Pose2D,
    pub motion: ObstacleMotion,
}

impl DynamicObstacle {
    pub fn new(radius: f64, initial_pose: Pose2D, v: f64, omega: f64) -> Self {
        Self {
            radius,
            initial_pose,
            motion: ObstacleMotion { v, omega },
        }
    }

    pub fn pose_at(&self, t: f64) -> Pose2D {
        obstacle_pose_at(self, t)
    }

    pub fn footprint_at(&self, t: f64) -> Disc {
        Disc::new(self.pose_at(t).position(), self.radius)
    }
}

/// Closed-form pose of a constant-twist obstacle at time `t` (seconds from
/// the start of the run): a straight line when `|omega| < 1e-9`, otherwise a
/// circular arc of radius `v / |omega|`.
pub fn obstacle_pose_at(o: &DynamicObstacle, t: f64) -> Pose2D {
    if t == 0.0 {
        return o.initial_pose;
    }
    o.initial_pose.integrate(o.motion.twist(), t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub bounds: AxisRect,
    pub statics: Vec<AxisRect>,
    pub dynamics: Vec<DynamicObstacle>,
    /// Planning-only squares appended by the sequential re-planner.
    pub virtuals: Vec<AxisRect>,
}

impl World {
    pub fn new(bounds: AxisRect) -> Self {
        Self {
            bounds,
            statics: Vec::new(),
            dynamics: Vec::new(),
            virtuals: Vec::new(),
        }
    }

    pub fn with_statics(mut self, statics: Vec<AxisRect>) -> Self {
        self.statics = statics;
        self
    }

    pub fn with_dynamics(mut self, dynamics: Vec<DynamicObstacle>) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn snapshot(&self, t: f64, freeze_dynamics: bool) -> SceneSnapshot {
        snapshot(self, t, freeze_dynamics)
    }
}

/// Immutable, time-frozen view of a [`World`].
///
/// `obstacles` holds the statics followed by the virtual squares present at
/// construction time; planners treat both alike.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSnapshot {
    bounds: AxisRect,
    obstacles: Vec<AxisRect>,
    n_statics: usize,
    dynamics: Vec<Disc>,
    time: f64,
}

impl SceneSnapshot {
    /// A snapshot over an explicit obstacle list, no dynamics.
    pub fn from_obstacles(bounds: AxisRect, obstacles: Vec<AxisRect>) -> Self {
        Self {
            bounds,
            n_statics: obstacles.len(),
            obstacles,
            dynamics: Vec::new(),
            time: 0.0,
        }
    }

    /// A snapshot over explicit static and virtual lists, no dynamics.
    pub fn with_virtuals(bounds: AxisRect, statics: &[AxisRect], virtuals: &[AxisRect]) -> Self {
        let mut obstacles = statics.to_vec();
        obstacles.extend_from_slice(virtuals);
        Self {
            bounds,
            obstacles,
            n_statics: statics.len(),
            dynamics: Vec::new(),
            time: 0.0,
        }
    }

    pub fn bounds(&self) -> &AxisRect {
        &self.bounds
    }

    /// Statics and virtuals, in that order.
    pub fn obstacles(&self) -> &[AxisRect] {
        &self.obstacles
    }

    pub fn statics(&self) -> &[AxisRect] {
        &self.obstacles[..self.n_statics]
    }

    pub fn virtuals(&self) -> &[AxisRect] {
        &self.obstacles[self.n_statics..]
    }

    /// Dynamic obstacle footprints frozen at [`SceneSnapshot::time`]; empty
    /// unless the snapshot was taken with `freeze_dynamics`.
    pub fn dynamics(&self) -> &[Disc] {
        &self.dynamics
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

pub fn snapshot(w: &World, t: f64, freeze_dynamics: bool) -> SceneSnapshot {
    let mut obstacles = Vec::with_capacity(w.statics.len() + w.virtuals.len());
    obstacles.extend_from_slice(&w.statics);
    obstacles.extend_from_slice(&w.virtuals);
    let dynamics = if freeze_dynamics {
        w.dynamics.iter().map(|o| o.footprint_at(t)).collect()
    } else {
        Vec::new()
    };
    SceneSnapshot {
        bounds: w.bounds,
        obstacles,
        n_statics: w.statics.len(),
        dynamics,
        time: t,
    }
}

/// Center of the circle traced by an obstacle with non-zero yaw rate.
pub fn turning_center(o: &DynamicObstacle) -> Option<Point2> {
    let ObstacleMotion { v, omega } = o.motion;
    if omega.abs() < 1e-9 {
        return None;
    }
    let r = v / omega;
    let p = o.initial_pose;
    Some(Point2::new(
        p.x - r * p.theta.sin(),
        p.y + r * p.theta.cos(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rk4(o: &DynamicObstacle, t: f64, steps: usize) -> Pose2D {
        let (v, w) = (o.motion.v, o.motion.omega);
        let f = |s: [f64; 3]| [v * s[2].cos(), v * s[2].sin(), w];
        let h = t / steps as f64;
        let p = o.initial_pose;
        let mut s = [p.x, p.y, p.theta];
        for _ in 0..steps {
            let k1 = f(s);
            let k2 = f([
                s[0] + h / 2. * k1[0],
                s[1] + h / 2. * k1[1],
                s[2] + h / 2. * k1[2],
            ]);
            let k3 = f([
                s[0] + h / 2. * k2[0],
                s[1] + h / 2. * k2[1],
                s[2] + h / 2. * k2[2],
            ]);
            let k4 = f([s[0] + h * k3[0], s[1] + h * k3[1], s[2] + h * k3[2]]);
            for i in 0..3 {
                s[i] += h / 6. * (k1[i] + 2. * k2[i] + 2. * k3[i] + k4[i]);
            }
        }
        Pose2D::new(s[0], s[1], s[2])
    }

    #[test]
    fn straight_obstacle() {
        let d1 = DynamicObstacle::new(0.25, Pose2D::new(0., 0., 0.), 0.12, 0.0);
        let p = obstacle_pose_at(&d1, 10.0);
        assert!((p.x - 1.2).abs() < 1e-12 && p.y.abs() < 1e-12 && p.theta == 0.0);
        assert_eq!(obstacle_pose_at(&d1, 0.0), d1.initial_pose);
    }

    #[test]
    fn circular_obstacle_half_turn_matches_rk4() {
        let d2 = DynamicObstacle::new(0.25, Pose2D::new(0., 0., 0.), 0.12, -0.14);
        let t = PI / 0.14;
        let p = obstacle_pose_at(&d2, t);
        let q = rk4(&d2, t, 20_000);
        assert!((p.x - q.x).abs() < 1e-6 && (p.y - q.y).abs() < 1e-6);
        assert!((p.theta - q.theta).abs() < 1e-6);
        assert!(p.x.abs() < 1e-9);
        assert!((p.y + 2.0 * 0.12 / 0.14).abs() < 1e-9);
        assert!((p.theta + PI).abs() < 1e-12);
    }

    #[test]
    fn snapshot_overlay_and_isolation() {
        let mut w = World::new(AxisRect::from_extent(15., 11.));
        assert!(w.snapshot(0.0, true).obstacles().is_empty());

        w.statics.push(AxisRect::new(Point2::new(5., 5.), 1., 1.));
        w.dynamics.push(DynamicObstacle::new(
            0.25,
            Pose2D::new(0., 0., 0.),
            0.12,
            0.0,
        ));
        w.virtuals.push(AxisRect::square(Point2::new(8., 8.), 2.0));
        let snap = w.snapshot(10.0, true);
        assert_eq!(snap.obstacles().len(), 2);
        assert_eq!(snap.virtuals().len(), 1);
        assert!((snap.dynamics()[0].center.x - 1.2).abs() < 1e-12);

        w.virtuals.push(AxisRect::square(Point2::new(3., 3.), 2.0));
        w.statics.clear();
        assert_eq!(snap.obstacles().len(), 2);
        assert_eq!(snap.statics().len(), 1);
    }

    #[test]
    fn unfrozen_snapshot_has_no_dynamics() {
        let w =
            World::new(AxisRect::from_extent(15., 11.)).with_dynamics(vec![DynamicObstacle::new(
                0.25,
                Pose2D::new(1., 1., 0.),
                0.12,
                0.0,
            )]);
        assert!(w.snapshot(3.0, false).dynamics().is_empty());
    }
}
