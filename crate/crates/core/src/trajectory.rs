//! Smoothing of planner polylines into natural cubic splines and
//! time-parameterisation under the robot's speed and acceleration limits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bitstar::FreeSpace;
use crate::geometry::{wrap_angle, Point2, Pose2D, Twist};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("a spline needs at least 2 waypoints, got {0}")]
    TooFewPoints(usize),
    #[error("waypoints {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub alpha_max: f64,
}

impl Default for RobotLimits {
    /// Pioneer-class limits: 0.4 m/s, 0.4 rad/s, 0.4 m/s², 1 rad/s².
    fn default() -> Self {
        Self {
            v_max: 0.4,
            omega_max: 0.4,
            a_max: 0.4,
            alpha_max: 1.0,
        }
    }
}

/// Natural cubic spline through a list of knots, parameterised per axis by
/// cumulative chord length.
#[derive(Debug, Clone, PartialEq)]
pub struct SplinePath {
    knots: Vec<Point2>,
    params: Vec<f64>,
    cx: Vec<[f64; 4]>,
    cy: Vec<[f64; 4]>,
    /// Arc length at each knot.
    arc: Vec<f64>,
    /// Arc-length table: `ARC_SUB` equal parameter steps per piece, with the
    /// arc length at each step.
    sub_u: Vec<f64>,
    sub_s: Vec<f64>,
}

/// Second derivatives of the natural spline through `(u, y)` (Thomas algorithm).
fn natural_second_derivatives(u: &[f64], y: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut diag = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    let mut sup = vec![0.0; k];
    for j in 0..k {
        let i = j + 1;
        let h0 = u[i] - u[i - 1];
        let h1 = u[i + 1] - u[i];
        diag[j] = 2.0 * (h0 + h1);
        sup[j] = h1;
        rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // Sub-diagonal entry of row j is h0 of row j, i.e. sup[j - 1].
    for j in 1..k {
        let w = sup[j - 1] / diag[j - 1];
        diag[j] -= w * sup[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    let mut x = vec![0.0; k];
    x[k - 1] = rhs[k - 1] / diag[k - 1];
    for j in (0..k - 1).rev() {
        x[j] = (rhs[j] - sup[j] * x[j + 1]) / diag[j];
    }
    m[1..(k + 1)].copy_from_slice(&x);
    m
}

fn piece_coeffs(u: &[f64], y: &[f64], m: &[f64]) -> Vec<[f64; 4]> {
    (0..u.len() - 1)
        .map(|i| {
            let h = u[i + 1] - u[i];
            [
                y[i],
                (y[i + 1] - y[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0,
                m[i] / 2.0,
                (m[i + 1] - m[i]) / (6.0 * h),
            ]
        })
        .collect()
}

fn poly(c: &[f64; 4], t: f64) -> f64 {
    c[0] + t * (c[1] + t * (c[2] + t * c[3]))
}

fn poly_d1(c: &[f64; 4], t: f64) -> f64 {
    c[1] + t * (2.0 * c[2] + 3.0 * t * c[3])
}

fn poly_d2(c: &[f64; 4], t: f64) -> f64 {
    2.0 * c[2] + 6.0 * t * c[3]
}

/// Parameter steps per piece in the arc-length table.
const ARC_SUB: usize = 16;

/// 5-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL_X: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

impl SplinePath {
    pub fn knots(&self) -> &[Point2] {
        &self.knots
    }

    /// Chord-length parameter value at each knot.
    pub fn knot_params(&self) -> &[f64] {
        &self.params
    }

    /// Arc length at each knot.
    pub fn knot_arc_lengths(&self) -> &[f64] {
        &self.arc
    }

    pub fn total_length(&self) -> f64 {
        *self.arc.last().expect("spline has knots")
    }

    fn piece_of_param(&self, u: f64) -> usize {
        let n = self.cx.len();
        match self.params.binary_search_by(|p| p.total_cmp(&u)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    pub fn eval_param(&self, u: f64) -> Point2 {
        let i = self.piece_of_param(u);
        let t = u - self.params[i];
        Point2::new(poly(&self.cx[i], t), poly(&self.cy[i], t))
    }

    pub fn d1_param(&self, u: f64) -> Point2 {
        let i = self.piece_of_param(u);
        let t = u - self.params[i];
        Point2::new(poly_d1(&self.cx[i], t), poly_d1(&self.cy[i], t))
    }

    pub fn d2_param(&self, u: f64) -> Point2 {
        let i = self.piece_of_param(u);
        let t = u - self.params[i];
        Point2::new(poly_d2(&self.cx[i], t), poly_d2(&self.cy[i], t))
    }

    fn speed_param(&self, u: f64) -> f64 {
        self.d1_param(u).norm()
    }

    /// Arc length of piece `i` between parameters `from` and `to`.
    fn piece_arc(&self, i: usize, from: f64, to: f64) -> f64 {
        let (cx, cy, base) = (&self.cx[i], &self.cy[i], self.params[i]);
        let (mid, half) = (0.5 * (from + to), 0.5 * (to - from));
        let mut acc = 0.0;
        for (x, w) in GL_X.iter().zip(GL_W) {
            let t = mid + half * x - base;
            acc += w * poly_d1(cx, t).hypot(poly_d1(cy, t));
        }
        acc * half
    }

    fn build_arc_table(&mut self) {
        let n = self.cx.len();
        self.sub_u = Vec::with_capacity(n * ARC_SUB + 1);
        self.sub_s = Vec::with_capacity(n * ARC_SUB + 1);
        self.arc = Vec::with_capacity(n + 1);
        let mut s = 0.0;
        for i in 0..n {
            let (u0, u1) = (self.params[i], self.params[i + 1]);
            self.arc.push(s);
            for k in 0..ARC_SUB {
                let a = u0 + (u1 - u0) * k as f64 / ARC_SUB as f64;
                let b = u0 + (u1 - u0) * (k + 1) as f64 / ARC_SUB as f64;
                self.sub_u.push(a);
                self.sub_s.push(s);
                s += self.piece_arc(i, a, b);
            }
        }
        self.sub_u.push(self.params[n]);
        self.sub_s.push(s);
        self.arc.push(s);
    }

    /// Inverts the arc-length map: parameter `u` with `arc(u) = s`.
    pub fn param_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total_length());
        let last = self.sub_s.len() - 2;
        let j = self
            .sub_s
            .partition_point(|&x| x <= s)
            .saturating_sub(1)
            .min(last);
        let piece = j / ARC_SUB;
        let target = s - self.sub_s[j];
        let (lo0, hi0) = (self.sub_u[j], self.sub_u[j + 1]);
        let cell = self.sub_s[j + 1] - self.sub_s[j];
        if cell <= 0.0 {
            return lo0;
        }
        let (mut lo, mut hi) = (lo0, hi0);
        let mut u = lo0 + (hi0 - lo0) * (target / cell).clamp(0.0, 1.0);
        for _ in 0..50 {
            let f = self.piece_arc(piece, lo0, u) - target;
            if f.abs() < 1e-12 {
                break;
            }
            if f > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            let d = self.speed_param(u);
            let newton = u - f / d;
            u = if d > 1e-12 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        u
    }

    /// Position at arc length `s`.
    pub fn point_at(&self, s: f64) -> Point2 {
        self.eval_param(self.param_at(s))
    }

    /// Tangent heading at arc length `s`.
    pub fn heading_at(&self, s: f64) -> f64 {
        let d = self.d1_param(self.param_at(s));
        d.y.atan2(d.x)
    }

    pub fn curvature(&self, s: f64) -> f64 {
        curvature(self, s)
    }

    /// Position, heading and curvature at `s`, sharing one inversion.
    pub fn frame_at(&self, s: f64) -> (Point2, f64, f64) {
        let u = self.param_at(s);
        let (p, d1, d2) = (self.eval_param(u), self.d1_param(u), self.d2_param(u));
        (p, d1.y.atan2(d1.x), curvature_from_derivs(d1, d2))
    }
}

fn curvature_from_derivs(d1: Point2, d2: Point2) -> f64 {
    let speed = d1.norm();
    if speed < 1e-12 {
        return 0.0;
    }
    d1.cross(d2) / (speed * speed * speed)
}

/// Fits a natural cubic spline (zero end curvature) through `waypoints`.
pub fn fit_spline(waypoints: &[Point2]) -> Result<SplinePath, TrajectoryError> {
    if waypoints.len() < 2 {
        return Err(TrajectoryError::TooFewPoints(waypoints.len()));
    }
    let mut params = Vec::with_capacity(waypoints.len());
    params.push(0.0);
    for (i, w) in waypoints.windows(2).enumerate() {
        let d = w[0].dist(w[1]);
        if d < 1e-9 {
            return Err(TrajectoryError::DuplicatePoint(i, i + 1));
        }
        params.push(params[i] + d);
    }
    let xs: Vec<f64> = waypoints.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = waypoints.iter().map(|p| p.y).collect();
    let mx = natural_second_derivatives(&params, &xs);
    let my = natural_second_derivatives(&params, &ys);
    let mut path = SplinePath {
        knots: waypoints.to_vec(),
        cx: piece_coeffs(&params, &xs, &mx),
        cy: piece_coeffs(&params, &ys, &my),
        params,
        arc: Vec::new(),
        sub_u: Vec::new(),
        sub_s: Vec::new(),
    };
    path.build_arc_table();
    Ok(path)
}

/// Signed curvature `(x'y'' - y'x'') / |p'|^3` at arc length `s`; positive
/// when turning left.
pub fn curvature(path: &SplinePath, s: f64) -> f64 {
    let u = path.param_at(s);
    curvature_from_derivs(path.d1_param(u), path.d2_param(u))
}

/// Knot spacing levels tried, coarsest first, when the plain spline through
/// a polyline leaves free space.
const HUG_OFFSETS: [f64; 6] = [1.0, 0.6, 0.35, 0.2, 0.12, 0.06];

/// Fits a spline that stays inside `free` (checked every `resolution`
/// meters along the curve). If the plain spline through the polyline cuts a
/// corner, extra knots are inserted near every polyline corner at
/// decreasing offsets so the curve hugs the polyline. Returns the spline and
/// whether it was verified collision free.
pub fn fit_spline_in(
    free: &FreeSpace,
    waypoints: &[Point2],
    resolution: f64,
) -> Result<(SplinePath, bool), TrajectoryError> {
    let plain = fit_spline(waypoints)?;
    if spline_is_free(free, &plain, resolution) || waypoints.len() < 3 {
        let ok = spline_is_free(free, &plain, resolution);
        return Ok((plain, ok));
    }
    let mut last = plain;
    for &offset in &HUG_OFFSETS {
        let dense = hug_knots(waypoints, offset);
        let spline = fit_spline(&dense)?;
        if spline_is_free(free, &spline, resolution) {
            return Ok((spline, true));
        }
        last = spline;
    }
    Ok((last, false))
}

fn hug_knots(waypoints: &[Point2], offset: f64) -> Vec<Point2> {
    let mut out = vec![waypoints[0]];
    for w in waypoints.windows(2) {
        let len = w[0].dist(w[1]);
        if len > 2.5 * offset {
            out.push(w[0].lerp(w[1], offset / len));
            out.push(w[0].lerp(w[1], 1.0 - offset / len));
        }
        out.push(w[1]);
    }
    out
}

/// Samples the spline every `resolution` meters and checks each point.
pub fn spline_is_free(free: &FreeSpace, path: &SplinePath, resolution: f64) -> bool {
    let total = path.total_length();
    let n = (total / resolution).ceil().max(1.0) as usize;
    // Walk piece by piece in parameter space; cheaper than arc inversion.
    let pieces = path.cx.len();
    for i in 0..pieces {
        let (u0, u1) = (path.params[i], path.params[i + 1]);
        let piece_len = path.arc[i + 1] - path.arc[i];
        let m = ((piece_len / total) * n as f64).ceil().max(1.0) as usize * 2;
        for k in 0..=m {
            let u = u0 + (u1 - u0) * k as f64 / m as f64;
            if !free.point_free(path.eval_param(u)) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pose: Pose2D,
    pub twist: Twist,
}

/// Time-stamped reference states, `t` strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimedTrajectory {
    pub samples: Vec<TrajectorySample>,
}

impl TimedTrajectory {
    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.t)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Same trajectory with every timestamp moved by `offset`.
    pub fn shifted(&self, offset: f64) -> TimedTrajectory {
        TimedTrajectory {
            samples: self
                .samples
                .iter()
                .map(|s| TrajectorySample {
                    t: s.t + offset,
                    ..*s
                })
                .collect(),
        }
    }

    /// Reference state at `t`, linearly interpolated; clamps to the first
    /// and last samples outside the covered interval (at rest at the end).
    pub fn sample_at(&self, t: f64) -> TrajectorySample {
        let first = self.samples[0];
        let last = *self.samples.last().expect("non-empty trajectory");
        if t <= first.t {
            return TrajectorySample { t, ..first };
        }
        if t >= last.t {
            return TrajectorySample {
                t,
                pose: last.pose,
                twist: Twist::ZERO,
            };
        }
        let k = self.samples.partition_point(|s| s.t <= t) - 1;
        let (a, b) = (self.samples[k], self.samples[k + 1]);
        let w = (t - a.t) / (b.t - a.t);
        let dtheta = wrap_angle(b.pose.theta - a.pose.theta);
        TrajectorySample {
            t,
            pose: Pose2D::new(
                a.pose.x + w * (b.pose.x - a.pose.x),
                a.pose.y + w * (b.pose.y - a.pose.y),
                a.pose.theta + w * dtheta,
            ),
            twist: Twist::new(
                a.twist.v + w * (b.twist.v - a.twist.v),
                a.twist.omega + w * (b.twist.omega - a.twist.omega),
            ),
        }
    }

    pub fn position_at(&self, t: f64) -> Point2 {
        self.sample_at(t).pose.position()
    }

    /// Length of the sampled polyline.
    pub fn path_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[0].pose.position().dist(w[1].pose.position()))
            .sum()
    }
}

/// Grid spacing (m) of the velocity profile.
const PROFILE_DS: f64 = 0.01;
/// Fraction of the angular limits used when shaping the profile; the rest
/// absorbs discretisation.
const ANGULAR_MARGIN: f64 = 0.9;

struct Profile {
    s: Vec<f64>,
    v: Vec<f64>,
    /// Cumulative time at each grid point.
    t: Vec<f64>,
}

impl Profile {
    fn build(kappa: &[f64], dkappa: &[f64], scale: &[f64], ds: f64, limits: &RobotLimits) -> Self {
        let n = kappa.len();
        let omega_lim = limits.omega_max * ANGULAR_MARGIN;
        let alpha_lim = limits.alpha_max * ANGULAR_MARGIN;
        let mut cap = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for i in 0..n {
            let (k, dk) = (kappa[i].abs(), dkappa[i].abs());
            let mut c = limits.v_max;
            if k > 1e-12 {
                c = c.min(omega_lim / k);
            }
            if dk > 1e-12 {
                c = c.min((0.5 * alpha_lim / dk).sqrt());
            }
            c = (c * scale[i]).max(1e-3);
            cap[i] = c;
            let mut a = limits.a_max;
            if k > 1e-12 {
                a = a.min(((alpha_lim - dk * c * c) / k).max(1e-3));
            }
            acc[i] = a;
        }
        cap[0] = 0.0;
        cap[n - 1] = 0.0;
        let mut v = cap.clone();
        for i in 0..n - 1 {
            let a = acc[i].min(acc[i + 1]);
            v[i + 1] = v[i + 1].min((v[i] * v[i] + 2.0 * a * ds).sqrt());
        }
        for i in (0..n - 1).rev() {
            let a = acc[i].min(acc[i + 1]);
            v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * a * ds).sqrt());
        }
        let s: Vec<f64> = (0..n).map(|i| i as f64 * ds).collect();
        let mut t = vec![0.0; n];
        for i in 0..n - 1 {
            t[i + 1] = t[i] + 2.0 * ds / (v[i] + v[i + 1]);
        }
        Self { s, v, t }
    }

    /// Arc length and speed at time `t` (constant acceleration per cell).
    fn at(&self, t: f64) -> (f64, f64) {
        let n = self.t.len();
        if t >= self.t[n - 1] {
            return (self.s[n - 1], 0.0);
        }
        let i = (self.t.partition_point(|&ti| ti <= t) - 1).min(n - 2);
        let ds = self.s[i + 1] - self.s[i];
        let (v0, v1) = (self.v[i], self.v[i + 1]);
        let a = (v1 * v1 - v0 * v0) / (2.0 * ds);
        let tau = t - self.t[i];
        let v = (v0 + a * tau).max(0.0);
        let s = (self.s[i] + v0 * tau + 0.5 * a * tau * tau).min(self.s[i + 1]);
        (s, v)
    }

    fn duration(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }
}

/// Time-parameterises `path` under `limits`, starting and ending at rest, with
/// output samples every `dt` seconds (plus a final sample at arrival).
///
/// The speed cap combines `v_max`, `omega_max / |kappa|`, and a bound that
/// keeps `d(omega)/dt = kappa' v^2 + kappa a` under `alpha_max`; a forward and
/// a backward pass then enforce the acceleration limit. Any residual limit
/// violation seen at the output sampling lowers the local cap and the
/// profile is rebuilt.
pub fn generate_reference(path: &SplinePath, limits: &RobotLimits, dt: f64) -> TimedTrajectory {
    let total = path.total_length();
    let cells = ((total / PROFILE_DS).ceil() as usize).clamp(2, 40_000);
    let ds = total / cells as f64;
    let n = cells + 1;
    let kappa: Vec<f64> = (0..n).map(|i| path.frame_at(i as f64 * ds).2).collect();
    let dkappa: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (kappa[b] - kappa[a]) / ((b - a) as f64 * ds)
        })
        .collect();
    let mut scale = vec![1.0; n];

    let mut traj = TimedTrajectory::default();
    for _ in 0..80 {
        let profile = Profile::build(&kappa, &dkappa, &scale, ds, limits);
        traj = sample_profile(path, &profile, dt);
        let bad = limit_violations(&traj, limits, 1e-9);
        if bad.is_empty() {
            break;
        }
        for k in bad {
            let (s0, _) = profile.at(traj.samples[k].t);
            let (s1, _) = profile.at(traj.samples[(k + 1).min(traj.samples.len() - 1)].t);
            let lo = ((s0 - 0.1) / ds).floor().max(0.0) as usize;
            let hi = (((s1 + 0.1) / ds).ceil() as usize).min(n - 1);
            for sc in &mut scale[lo..=hi] {
                *sc *= 0.9;
            }
        }
    }
    traj
}

fn sample_profile(path: &SplinePath, profile: &Profile, dt: f64) -> TimedTrajectory {
    let total_t = profile.duration();
    let steps = (total_t / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    if total_t - times[times.len() - 1] > 1e-9 {
        times.push(total_t);
    } else {
        *times.last_mut().expect("non-empty") = total_t;
    }
    let samples = times
        .into_iter()
        .map(|t| {
            let (s, v) = profile.at(t);
            let (p, heading, kappa) = path.frame_at(s);
            TrajectorySample {
                t,
                pose: Pose2D::new(p.x, p.y, heading),
                twist: Twist::new(v, kappa * v),
            }
        })
        .collect();
    TimedTrajectory { samples }
}

/// Indices `k` whose sample, or whose step to `k + 1`, exceeds a limit by
/// more than `tol`.
pub fn limit_violations(traj: &TimedTrajectory, limits: &RobotLimits, tol: f64) -> Vec<usize> {
    let s = &traj.samples;
    let mut bad = Vec::new();
    for k in 0..s.len() {
        let mut over = s[k].twist.v.abs() > limits.v_max + tol
            || s[k].twist.omega.abs() > limits.omega_max + tol;
        if k + 1 < s.len() {
            let h = s[k + 1].t - s[k].t;
            over |= ((s[k + 1].twist.v - s[k].twist.v) / h).abs() > limits.a_max + tol;
            over |= ((s[k + 1].twist.omega - s[k].twist.omega) / h).abs() > limits.alpha_max + tol;
        }
        if over {
            bad.push(k);
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_inputs() {
        assert_eq!(fit_spline(&[]), Err(TrajectoryError::TooFewPoints(0)));
        let p = Point2::new(1., 1.);
        assert_eq!(fit_spline(&[p]), Err(TrajectoryError::TooFewPoints(1)));
        assert_eq!(
            fit_spline(&[p, Point2::new(2., 2.), Point2::new(2., 2.)]),
            Err(TrajectoryError::DuplicatePoint(1, 2))
        );
    }

    #[test]
    fn two_points_give_a_straight_segment() {
        let (a, b) = (Point2::new(1., 2.), Point2::new(4., 6.));
        let sp = fit_spline(&[a, b]).unwrap();
        assert!((sp.total_length() - 5.0).abs() < 1e-9);
        for i in 0..=10 {
            let s = 0.5 * i as f64;
            let p = sp.point_at(s);
            assert!(p.dist(a.lerp(b, s / 5.0)) < 1e-9);
            assert!(curvature(&sp, s).abs() < 1e-12);
        }
    }

    #[test]
    fn curvature_sign_flips_with_direction() {
        let pts = [
            Point2::new(0., 0.),
            Point2::new(1., 1.),
            Point2::new(2., 0.),
        ];
        let rev: Vec<Point2> = pts.iter().rev().copied().collect();
        let (a, b) = (fit_spline(&pts).unwrap(), fit_spline(&rev).unwrap());
        let s = 0.5 * a.total_length();
        assert!(curvature(&a, s) < 0.0);
        assert!((curvature(&a, s) + curvature(&b, b.total_length() - s)).abs() < 1e-6);
    }

    #[test]
    fn straight_ten_meters_is_trapezoidal() {
        let sp = fit_spline(&[Point2::new(0., 0.), Point2::new(10., 0.)]).unwrap();
        let traj = generate_reference(&sp, &RobotLimits::default(), 0.05);
        let expected = 10.0 / 0.4 + 1.0;
        assert!((traj.duration() - expected).abs() / expected < 0.02);
        let mid = traj.sample_at(13.0);
        assert!((mid.twist.v - 0.4).abs() < 1e-9);
        let first = traj.samples[0];
        let last = traj.samples.last().unwrap();
        assert_eq!(first.twist.v, 0.0);
        assert!(last.twist.v.abs() < 1e-9);
        assert!(limit_violations(&traj, &RobotLimits::default(), 1e-6).is_empty());
    }

    #[test]
    fn gentle_arc_runs_at_full_speed() {
        // Curvature 0.5 needs omega = 0.2 at v = 0.4, inside both limits.
        let pts: Vec<Point2> = (0..=16)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 16.0;
                Point2::new(2.0 * a.cos(), 2.0 * a.sin())
            })
            .collect();
        let sp = fit_spline(&pts).unwrap();
        let traj = generate_reference(&sp, &RobotLimits::default(), 0.05);
        let mid = traj.sample_at(traj.duration() / 2.0);
        assert!((mid.twist.v - 0.4).abs() < 1e-6);
        assert!((mid.twist.omega - 0.2).abs() < 0.01);
    }

    #[test]
    fn arc_table_matches_dense_chords() {
        let pts = [
            Point2::new(0., 0.),
            Point2::new(1., 2.),
            Point2::new(3., 1.5),
            Point2::new(4., -1.),
            Point2::new(6., 0.),
        ];
        let sp = fit_spline(&pts).unwrap();
        let u_end = *sp.knot_params().last().unwrap();
        let n = 200_000;
        let chords: f64 = (0..n)
            .map(|k| {
                let a = sp.eval_param(u_end * k as f64 / n as f64);
                a.dist(sp.eval_param(u_end * (k + 1) as f64 / n as f64))
            })
            .sum();
        assert!((sp.total_length() - chords).abs() < 1e-8);
        for k in 0..=50 {
            let s = sp.total_length() * k as f64 / 50.0;
            let u = sp.param_at(s);
            let back: f64 = (0..2000)
                .map(|j| {
                    let a = sp.eval_param(u * j as f64 / 2000.0);
                    a.dist(sp.eval_param(u * (j + 1) as f64 / 2000.0))
                })
                .sum();
            assert!((back - s).abs() < 1e-5, "s={s} back={back}");
        }
    }
}
