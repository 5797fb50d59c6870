//! Unicycle plant, posture-error tracking law, and the in-place rotation
//! used when the robot switches onto a new path.

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap_angle, Pose2D, Twist};
use crate::trajectory::RobotLimits;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose2D,
    pub twist: Twist,
}

impl RobotState {
    pub fn at_rest(pose: Pose2D) -> Self {
        Self {
            pose,
            twist: Twist::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackingGains {
    pub k_x: f64,
    pub k_y: f64,
    pub k_theta: f64,
}

impl Default for TrackingGains {
    fn default() -> Self {
        Self {
            k_x: 1.0,
            k_y: 4.0,
            k_theta: 2.0,
        }
    }
}

/// Reference error expressed in the robot body frame.
pub fn posture_error(pose: &Pose2D, reference: &Pose2D) -> (f64, f64, f64) {
    let (dx, dy) = (reference.x - pose.x, reference.y - pose.y);
    let (s, c) = pose.theta.sin_cos();
    (
        c * dx + s * dy,
        -s * dx + c * dy,
        wrap_angle(reference.theta - pose.theta),
    )
}

fn clamp_twist(t: Twist, limits: &RobotLimits) -> Twist {
    Twist::new(
        t.v.clamp(-limits.v_max, limits.v_max),
        t.omega.clamp(-limits.omega_max, limits.omega_max),
    )
}

/// Kinematic tracking law:
/// `v = v_r cos(e_θ) + k_x e_x`, `ω = ω_r + v_r (k_y e_y + k_θ sin(e_θ))`,
/// clamped to the velocity limits.
pub fn track(
    state: &RobotState,
    ref_pose: &Pose2D,
    ref_twist: &Twist,
    gains: &TrackingGains,
    limits: &RobotLimits,
) -> Twist {
    let (ex, ey, eth) = posture_error(&state.pose, ref_pose);
    let v = ref_twist.v * eth.cos() + gains.k_x * ex;
    let omega = ref_twist.omega + ref_twist.v * (gains.k_y * ey + gains.k_theta * eth.sin());
    clamp_twist(Twist::new(v, omega), limits)
}

/// One plant step: slew-limit the command against the current twist,
/// clamp to the velocity limits, then integrate the unicycle exactly.
pub fn step_robot(state: &RobotState, cmd: Twist, dt: f64, limits: &RobotLimits) -> RobotState {
    let dv_max = limits.a_max * dt;
    let dw_max = limits.alpha_max * dt;
    let v = state.twist.v + (cmd.v - state.twist.v).clamp(-dv_max, dv_max);
    let omega = state.twist.omega + (cmd.omega - state.twist.omega).clamp(-dw_max, dw_max);
    let twist = clamp_twist(Twist::new(v, omega), limits);
    RobotState {
        pose: state.pose.integrate(twist, dt),
        twist,
    }
}

/// Bang-bang yaw profile: accelerate at `alpha_max` toward `omega_max`,
/// cruise if there is room, decelerate to rest exactly at the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationProfile {
    /// Signed heading change.
    pub delta: f64,
    pub peak_omega: f64,
    pub ramp_time: f64,
    pub cruise_time: f64,
    alpha: f64,
}

impl RotationProfile {
    pub fn new(delta: f64, limits: &RobotLimits) -> Self {
        let mag = delta.abs();
        let (w, a) = (limits.omega_max, limits.alpha_max);
        let (peak, cruise) = if mag >= w * w / a {
            (w, (mag - w * w / a) / w)
        } else {
            ((mag * a).sqrt(), 0.0)
        };
        Self {
            delta,
            peak_omega: peak,
            ramp_time: if a > 0.0 { peak / a } else { 0.0 },
            cruise_time: cruise,
            alpha: a,
        }
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.ramp_time + self.cruise_time
    }

    fn sign(&self) -> f64 {
        if self.delta < 0.0 {
            -1.0
        } else {
            1.0
        }
    }

    /// Heading change accumulated after `t` seconds.
    pub fn angle_at(&self, t: f64) -> f64 {
        let (tr, tc, a, w) = (
            self.ramp_time,
            self.cruise_time,
            self.alpha,
            self.peak_omega,
        );
        let t = t.clamp(0.0, self.duration());
        let mag = if t <= tr {
            0.5 * a * t * t
        } else if t <= tr + tc {
            0.5 * w * tr + w * (t - tr)
        } else {
            let rem = self.duration() - t;
            self.delta.abs() - 0.5 * a * rem * rem
        };
        self.sign() * mag
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        let (tr, tc) = (self.ramp_time, self.cruise_time);
        if t <= 0.0 || t >= self.duration() {
            return 0.0;
        }
        let mag = if t <= tr {
            self.alpha * t
        } else if t <= tr + tc {
            self.peak_omega
        } else {
            self.alpha * (self.duration() - t)
        };
        self.sign() * mag
    }

    /// Per-step commands: each is the mean yaw rate over its step, so exact
    /// integration lands on the target heading; a final zero command leaves
    /// the robot at rest.
    pub fn commands(&self, dt: f64) -> Vec<Twist> {
        let total = self.duration();
        if self.delta == 0.0 || total <= 0.0 {
            return Vec::new();
        }
        let steps = (total / dt - 1e-9).ceil().max(1.0) as usize;
        let mut out: Vec<Twist> = (0..steps)
            .map(|k| {
                let (t0, t1) = (k as f64 * dt, ((k + 1) as f64 * dt).min(total));
                Twist::new(0.0, (self.angle_at(t1) - self.angle_at(t0)) / dt)
            })
            .collect();
        out.push(Twist::ZERO);
        out
    }
}

/// In-place turn from the robot's heading onto `new_path_heading`. The robot
/// must already be at translational rest.
pub fn switch_maneuver(
    state: &RobotState,
    new_path_heading: f64,
    limits: &RobotLimits,
    dt: f64,
) -> Vec<Twist> {
    let delta = wrap_angle(new_path_heading - state.pose.theta);
    RotationProfile::new(delta, limits).commands(dt)
}
