//! Helpers shared by the integration tests: random maps and an independent
//! shortest-path oracle.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use seqbit::bitstar::FreeSpace;
use seqbit::geometry::{dist_segment_point, AxisRect, Point2, Pose2D, Segment2};
use seqbit::world::{DynamicObstacle, World};

pub const ARENA_W: f64 = 15.0;
pub const ARENA_H: f64 = 11.0;

pub fn arena() -> AxisRect {
    AxisRect::from_extent(ARENA_W, ARENA_H)
}

/// Up to `n` rectangles scattered over the middle of the arena.
pub fn random_rects<R: Rng>(rng: &mut R, n: usize) -> Vec<AxisRect> {
    (0..n)
        .map(|_| {
            let c = Point2::new(rng.gen_range(3.0..12.0), rng.gen_range(1.5..9.5));
            AxisRect::new(c, rng.gen_range(0.2..1.2), rng.gen_range(0.2..1.8))
        })
        .collect()
}

/// Start on the left edge, goal on the right, both free under `inflation`.
/// Retries with fresh obstacles until the query is well posed.
pub fn random_map<R: Rng>(
    rng: &mut R,
    max_rects: usize,
    inflation: f64,
) -> (Vec<AxisRect>, Point2, Point2) {
    loop {
        let n = rng.gen_range(1..=max_rects);
        let rects = random_rects(rng, n);
        let start = Point2::new(rng.gen_range(0.8..2.0), rng.gen_range(1.0..10.0));
        let goal = Point2::new(rng.gen_range(13.0..14.2), rng.gen_range(1.0..10.0));
        let free = FreeSpace::from_parts(&arena(), rects.clone(), inflation);
        if free.point_free(start) && free.point_free(goal) {
            return (rects, start, goal);
        }
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
    }
}

/// Exact clearance of a segment from a rectangle, by brute force over the
/// rectangle's edges plus a containment test.
pub fn seg_rect_distance_oracle(s: &Segment2, r: &AxisRect) -> f64 {
    let c = r.corners();
    if r.contains(s.a) || r.contains(s.b) {
        return 0.0;
    }
    let edges = [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])];
    let mut best = f64::INFINITY;
    for (p, q) in edges {
        let e = Segment2::new(p, q);
        if segments_cross(s, &e) {
            return 0.0;
        }
        best = best
            .min(dist_segment_point(s, p))
            .min(dist_segment_point(s, q))
            .min(dist_segment_point(&e, s.a))
            .min(dist_segment_point(&e, s.b));
    }
    best
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn segments_cross(s: &Segment2, e: &Segment2) -> bool {
    let d1 = orient(e.a, e.b, s.a);
    let d2 = orient(e.a, e.b, s.b);
    let d3 = orient(s.a, s.b, e.a);
    let d4 = orient(s.a, s.b, e.b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Shortest path for a disc of radius `r` among rectangles, over the
/// visibility graph of octagons circumscribing each rounded, grown
/// rectangle. The octagon vertices sit just outside the true obstacle, so
/// the result is a feasible path length and a tight upper bound on the
/// optimum.
pub fn visibility_shortest(
    bounds: &AxisRect,
    rects: &[AxisRect],
    r: f64,
    start: Point2,
    goal: Point2,
) -> Option<f64> {
    let free = |p: Point2| {
        let inner_ok = bounds.shrunk(r).is_some_and(|b| b.contains(p));
        inner_ok && rects.iter().all(|o| o.distance_to_point(p) > r)
    };
    let visible = |a: Point2, b: Point2| {
        let s = Segment2::new(a, b);
        rects
            .iter()
            .all(|o| seg_rect_distance_oracle(&s, o) > r - 1e-9)
    };
    let t = (std::f64::consts::PI / 8.0).tan();
    let grow = r * (1.0 + 1e-6) + 1e-9;
    let mut nodes = vec![start, goal];
    for o in rects {
        for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
            for (ex, ey) in [(grow, grow * t), (grow * t, grow)] {
                let p = Point2::new(
                    o.center.x + sx * (o.half_width + ex),
                    o.center.y + sy * (o.half_height + ey),
                );
                if free(p) {
                    nodes.push(p);
                }
            }
        }
    }
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[0] = 0.0;
    heap.push(Item(0.0, 0));
    while let Some(Item(d, u)) = heap.pop() {
        if u == 1 {
            return Some(d);
        }
        if d > dist[u] {
            continue;
        }
        for v in 0..n {
            if v == u {
                continue;
            }
            let nd = d + nodes[u].dist(nodes[v]);
            if nd < dist[v] && visible(nodes[u], nodes[v]) {
                dist[v] = nd;
                heap.push(Item(nd, v));
            }
        }
    }
    None
}

/// A random scene for the re-planner: a few statics plus one to three
/// obstacles aimed across the direct start-goal line.
pub fn random_dynamic_world<R: Rng>(rng: &mut R) -> (World, Pose2D, Point2) {
    let (rects, start, goal) = random_map(rng, 3, 0.35);
    let mut dynamics = Vec::new();
    let n = rng.gen_range(1..=3);
    for _ in 0..n {
        // A point on the start-goal line the robot passes roughly at time
        // `eta`; the obstacle is placed so it gets there near that time.
        let s = rng.gen_range(0.25..0.75);
        let target = start.lerp(goal, s);
        let eta = start.dist(target) / 0.4 + rng.gen_range(-2.0..6.0);
        let v: f64 = rng.gen_range(0.1..0.25);
        let heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let back = Point2::new(heading.cos(), heading.sin()) * (v * eta.max(1.0));
        let p0 = target - back;
        dynamics.push(DynamicObstacle::new(
            0.25,
            Pose2D::new(p0.x, p0.y, heading),
            v,
            0.0,
        ));
    }
    let world = World::new(arena())
        .with_statics(rects)
        .with_dynamics(dynamics);
    let theta = (goal.y - start.y).atan2(goal.x - start.x);
    (world, Pose2D::new(start.x, start.y, theta), goal)
}
