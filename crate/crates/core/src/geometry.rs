//! 2D primitives shared by the planners, the controller and the simulator.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("informed set is empty: c_best {c_best} is below the start-goal distance {dist}")]
    EmptyInformedSet { c_best: f64, dist: f64 },
}

/// A point (or free vector) in the workspace plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Planar robot configuration `(x, y, θ)`; θ is counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2D {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2D {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Exact integration of a constant twist over `dt`.
    pub fn integrate(&self, twist: Twist, dt: f64) -> Pose2D {
        let Twist { v, omega } = twist;
        if omega.abs() < 1e-9 {
            Pose2D::new(
                self.x + v * dt * self.theta.cos(),
                self.y + v * dt * self.theta.sin(),
                self.theta + omega * dt,
            )
        } else {
            let theta1 = self.theta + omega * dt;
            let r = v / omega;
            Pose2D::new(
                self.x + r * (theta1.sin() - self.theta.sin()),
                self.y - r * (theta1.cos() - self.theta.cos()),
                theta1,
            )
        }
    }
}

/// Differential-drive command: linear speed `v` (m/s) and yaw rate `omega` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub v: f64,
    pub omega: f64,
}

impl Twist {
    pub const ZERO: Twist = Twist { v: 0.0, omega: 0.0 };

    pub const fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    /// Closest point of the segment to `p`.
    pub fn closest_point(&self, p: Point2) -> Point2 {
        let d = self.b - self.a;
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(d) / len2).clamp(0.0, 1.0);
        self.a + d * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub const fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn overlaps_disc(&self, o: &Disc) -> bool {
        self.center.dist(o.center) < self.radius + o.radius
    }

    pub fn overlaps_rect(&self, r: &AxisRect) -> bool {
        r.distance_to_point(self.center) < self.radius
    }
}

/// Axis-aligned rectangle given by center and half extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRect {
    pub center: Point2,
    pub half_width: f64,
    pub half_height: f64,
}

impl AxisRect {
    pub const fn new(center: Point2, half_width: f64, half_height: f64) -> Self {
        Self {
            center,
            half_width,
            half_height,
        }
    }

    /// Rectangle `[0, w] × [0, h]`, the arena convention used by scenarios.
    pub fn from_extent(w: f64, h: f64) -> Self {
        Self::new(Point2::new(w / 2.0, h / 2.0), w / 2.0, h / 2.0)
    }

    pub fn square(center: Point2, side: f64) -> Self {
        Self::new(center, side / 2.0, side / 2.0)
    }

    pub fn min(&self) -> Point2 {
        Point2::new(
            self.center.x - self.half_width,
            self.center.y - self.half_height,
        )
    }

    pub fn max(&self) -> Point2 {
        Point2::new(
            self.center.x + self.half_width,
            self.center.y + self.half_height,
        )
    }

    pub fn width(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn height(&self) -> f64 {
        2.0 * self.half_height
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn corners(&self) -> [Point2; 4] {
        let (lo, hi) = (self.min(), self.max());
        [lo, Point2::new(hi.x, lo.y), hi, Point2::new(lo.x, hi.y)]
    }

    pub fn contains(&self, p: Point2) -> bool {
        (p.x - self.center.x).abs() <= self.half_width
            && (p.y - self.center.y).abs() <= self.half_height
    }

    /// True iff `other` lies entirely inside `self` (shared edges allowed).
    pub fn contains_rect(&self, other: &AxisRect) -> bool {
        let (lo, hi) = (self.min(), self.max());
        let (olo, ohi) = (other.min(), other.max());
        olo.x >= lo.x && olo.y >= lo.y && ohi.x <= hi.x && ohi.y <= hi.y
    }

    /// Euclidean distance from `p` to the rectangle; zero inside.
    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let dx = ((p.x - self.center.x).abs() - self.half_width).max(0.0);
        let dy = ((p.y - self.center.y).abs() - self.half_height).max(0.0);
        dx.hypot(dy)
    }

    /// Shrinks each half extent by `margin`; `None` if nothing is left.
    pub fn shrunk(&self, margin: f64) -> Option<AxisRect> {
        let hw = self.half_width - margin;
        let hh = self.half_height - margin;
        (hw >= 0.0 && hh >= 0.0).then(|| AxisRect::new(self.center, hw, hh))
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let lo = self.min();
        Point2::new(
            lo.x + rng.gen::<f64>() * self.width(),
            lo.y + rng.gen::<f64>() * self.height(),
        )
    }
}

/// Distance from `p` to the nearest point of `s`.
pub fn dist_segment_point(s: &Segment2, p: Point2) -> f64 {
    s.closest_point(p).dist(p)
}

/// Liang-Barsky test: does the closed segment touch the closed rectangle?
fn segment_touches_rect(s: &Segment2, r: &AxisRect) -> bool {
    let (lo, hi) = (r.min(), r.max());
    let d = s.b - s.a;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [
        (-d.x, s.a.x - lo.x),
        (d.x, hi.x - s.a.x),
        (-d.y, s.a.y - lo.y),
        (d.y, hi.y - s.a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Minimum distance between a segment and a rectangle; zero when they touch.
pub fn dist_segment_rect(s: &Segment2, r: &AxisRect) -> f64 {
    if segment_touches_rect(s, r) {
        return 0.0;
    }
    let ends = r.distance_to_point(s.a).min(r.distance_to_point(s.b));
    r.corners()
        .iter()
        .map(|&c| dist_segment_point(s, c))
        .fold(ends, f64::min)
}

/// True iff `s` comes within `inflate` of `r`, i.e. intersects the
/// rectangle grown by `inflate` with rounded corners.
pub fn segment_intersects_rect(s: &Segment2, r: &AxisRect, inflate: f64) -> bool {
    dist_segment_rect(s, r) <= inflate
}

/// Draws a point uniformly from the informed set
/// `{p : |p - start| + |p - goal| <= c_best}`, or uniformly from `bounds`
/// when no solution exists yet (`c_best` infinite).
///
/// The unit disc is mapped through the ellipse's scale-and-rotate transform,
/// so every draw costs O(1).
pub fn sample_informed<R: Rng + ?Sized>(
    start: Point2,
    goal: Point2,
    c_best: f64,
    bounds: &AxisRect,
    rng: &mut R,
) -> Result<Point2, GeometryError> {
    if !c_best.is_finite() {
        return Ok(bounds.sample_uniform(rng));
    }
    let c_min = start.dist(goal);
    if c_best < c_min - 1e-12 * c_min.max(1.0) {
        return Err(GeometryError::EmptyInformedSet {
            c_best,
            dist: c_min,
        });
    }
    let center = (start + goal) * 0.5;
    let semi_major = c_best / 2.0;
    let semi_minor = (c_best * c_best - c_min * c_min).max(0.0).sqrt() / 2.0;
    let axis = if c_min > 0.0 {
        (goal - start) * (1.0 / c_min)
    } else {
        Point2::new(1.0, 0.0)
    };

    let r = rng.gen::<f64>().sqrt();
    let phi = 2.0 * PI * rng.gen::<f64>();
    let (u, w) = (r * phi.cos() * semi_major, r * phi.sin() * semi_minor);
    Ok(Point2::new(
        center.x + axis.x * u - axis.y * w,
        center.y + axis.y * u + axis.x * w,
    ))
}
