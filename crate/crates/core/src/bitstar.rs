//! Batch Informed Trees (BIT*) over a frozen scene.
//!
//! The planner searches an implicit random geometric graph built from
//! batches of samples. Each batch is processed in order of estimated
//! solution cost through a vertex queue and an edge queue; once a solution
//! exists, new samples are drawn from the informed ellipse and states that
//! cannot improve the incumbent are pruned. The incumbent cost is therefore
//! non-increasing from batch to batch.
//!
//! The robot is planned as a point against obstacles grown by
//! [`PlannerConfig::inflation`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{dist_segment_rect, sample_informed, AxisRect, Point2, Segment2};
use crate::world::SceneSnapshot;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub batch_size: usize,
    pub max_batches: usize,
    /// Wall-clock budget in seconds, checked between batches.
    pub time_budget: f64,
    pub rewire_factor: f64,
    pub rng_seed: u64,
    /// Resolution at which [`validate_path`] re-samples a finished path.
    pub edge_check_resolution: f64,
    /// Clearance radius: obstacles and arena walls are grown by this much.
    pub inflation: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            batch_size: 100,
            max_batches: 10,
            time_budget: 5.0,
            rewire_factor: 1.1,
            rng_seed: 0,
            edge_check_resolution: 0.05,
            inflation: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSolution {
    /// Polyline from start to goal.
    pub waypoints: Vec<Point2>,
    /// Polyline length.
    pub cost: f64,
    pub samples_used: usize,
    pub batches: usize,
    /// Incumbent cost after each batch (`INFINITY` before the first solution).
    pub per_batch_costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no path found after {batches} batches ({samples} samples)")]
    NoPath { batches: usize, samples: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
}

/// Admissible cost-to-go: straight-line distance.
pub fn heuristic_cost(a: Point2, b: Point2) -> f64 {
    a.dist(b)
}

/// Point-robot view of a scene after inflation.
#[derive(Debug, Clone)]
pub struct FreeSpace {
    inner: Option<AxisRect>,
    obstacles: Vec<AxisRect>,
    inflation: f64,
}

impl FreeSpace {
    pub fn new(scene: &SceneSnapshot, inflation: f64) -> Self {
        Self::from_parts(scene.bounds(), scene.obstacles().to_vec(), inflation)
    }

    pub fn from_parts(bounds: &AxisRect, obstacles: Vec<AxisRect>, inflation: f64) -> Self {
        Self {
            inner: bounds.shrunk(inflation),
            obstacles,
            inflation,
        }
    }

    pub fn inflation(&self) -> f64 {
        self.inflation
    }

    /// Bounds the point robot's center may occupy.
    pub fn inner_bounds(&self) -> Option<&AxisRect> {
        self.inner.as_ref()
    }

    pub fn point_free(&self, p: Point2) -> bool {
        match &self.inner {
            Some(inner) if inner.contains(p) => self
                .obstacles
                .iter()
                .all(|r| r.distance_to_point(p) > self.inflation),
            _ => false,
        }
    }

    /// The inner bounds are convex, so a segment with free end points only
    /// needs testing against the obstacles.
    pub fn segment_free(&self, a: Point2, b: Point2) -> bool {
        if !self.point_free(a) || !self.point_free(b) {
            return false;
        }
        let s = Segment2::new(a, b);
        self.obstacles
            .iter()
            .all(|r| dist_segment_rect(&s, r) > self.inflation)
    }
}

/// Dense re-check of a polyline: every point at spacing `resolution` must be
/// collision free.
pub fn validate_path(free: &FreeSpace, waypoints: &[Point2], resolution: f64) -> bool {
    if waypoints.is_empty() {
        return false;
    }
    if !free.point_free(waypoints[0]) {
        return false;
    }
    waypoints.windows(2).all(|w| {
        let n = (w[0].dist(w[1]) / resolution).ceil().max(1.0) as usize;
        (1..=n).all(|i| free.point_free(w[0].lerp(w[1], i as f64 / n as f64)))
    })
}

#[derive(Debug, Clone)]
struct Node {
    p: Point2,
    in_tree: bool,
    parent: Option<usize>,
    /// Cost of the edge from `parent`.
    edge_cost: f64,
    g: f64,
    children: Vec<usize>,
    /// Was in the tree when the current batch started.
    old: bool,
}

impl Node {
    fn sample(p: Point2) -> Self {
        Self {
            p,
            in_tree: false,
            parent: None,
            edge_cost: f64::INFINITY,
            g: f64::INFINITY,
            children: Vec::new(),
            old: false,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct QueueEntry {
    key: f64,
    h: f64,
    seq: u64,
    from: usize,
    to: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // Reversed so that `BinaryHeap` pops the smallest key first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .total_cmp(&self.key)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Incremental BIT* planner. [`plan`] drives it batch by batch; the type is
/// public so callers can observe the anytime behaviour directly.
pub struct BitStar {
    free: FreeSpace,
    bounds_area: f64,
    start: Point2,
    goal: Point2,
    cfg: PlannerConfig,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    goal_idx: usize,
    vertex_queue: BinaryHeap<QueueEntry>,
    edge_queue: BinaryHeap<QueueEntry>,
    seq: u64,
    radius: f64,
    samples_used: usize,
    batches: usize,
    per_batch_costs: Vec<f64>,
    last_batch_samples: Vec<Point2>,
}

impl BitStar {
    pub fn new(
        scene: &SceneSnapshot,
        start: Point2,
        goal: Point2,
        cfg: PlannerConfig,
    ) -> Result<Self, PlanError> {
        if cfg.batch_size == 0 {
            return Err(PlanError::InvalidQuery("batch_size must be >= 1".into()));
        }
        if cfg.time_budget <= 0.0 {
            return Err(PlanError::InvalidQuery("time_budget must be > 0".into()));
        }
        let free = FreeSpace::new(scene, cfg.inflation);
        if !free.point_free(start) {
            return Err(PlanError::InvalidQuery(format!(
                "start ({:.3}, {:.3}) is in collision",
                start.x, start.y
            )));
        }
        if !free.point_free(goal) {
            return Err(PlanError::InvalidQuery(format!(
                "goal ({:.3}, {:.3}) is in collision",
                goal.x, goal.y
            )));
        }
        let bounds_area = free.inner_bounds().map_or(0.0, AxisRect::area);
        let mut root = Node::sample(start);
        root.in_tree = true;
        root.g = 0.0;
        root.edge_cost = 0.0;
        let mut nodes = vec![root];
        let goal_idx = if start.dist(goal) == 0.0 {
            0
        } else {
            nodes.push(Node::sample(goal));
            1
        };
        Ok(Self {
            free,
            bounds_area,
            start,
            goal,
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            cfg,
            nodes,
            goal_idx,
            vertex_queue: BinaryHeap::new(),
            edge_queue: BinaryHeap::new(),
            seq: 0,
            radius: 0.0,
            samples_used: 0,
            batches: 0,
            per_batch_costs: Vec::new(),
            last_batch_samples: Vec::new(),
        })
    }

    pub fn best_cost(&self) -> f64 {
        self.nodes[self.goal_idx].g
    }

    pub fn samples_used(&self) -> usize {
        self.samples_used
    }

    pub fn batches(&self) -> usize {
        self.batches
    }

    pub fn per_batch_costs(&self) -> &[f64] {
        &self.per_batch_costs
    }

    /// Samples added by the most recent batch.
    pub fn last_batch_samples(&self) -> &[Point2] {
        &self.last_batch_samples
    }

    /// Connection radius used by the most recent batch.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn tree_size(&self) -> usize {
        self.nodes.iter().filter(|n| n.in_tree).count()
    }

    fn g_hat(&self, p: Point2) -> f64 {
        heuristic_cost(self.start, p)
    }

    fn h_hat(&self, p: Point2) -> f64 {
        heuristic_cost(p, self.goal)
    }

    fn f_hat(&self, p: Point2) -> f64 {
        self.g_hat(p) + self.h_hat(p)
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    /// True once the incumbent equals the straight-line lower bound.
    pub fn is_optimal(&self) -> bool {
        let c = self.best_cost();
        c.is_finite() && c <= heuristic_cost(self.start, self.goal) * (1.0 + 1e-12) + 1e-12
    }

    /// Runs one full batch: prune, sample, then process the queues until no
    /// queued edge can improve the incumbent.
    pub fn run_batch(&mut self) {
        let c_best = self.best_cost();
        if c_best.is_finite() {
            self.prune(c_best);
        }
        self.add_samples();
        self.compact();
        for n in &mut self.nodes {
            n.old = n.in_tree;
        }
        let q = self.nodes.len().max(2);
        self.radius = self.connection_radius(q);

        self.vertex_queue.clear();
        self.edge_queue.clear();
        for i in 0..self.nodes.len() {
            if self.nodes[i].in_tree {
                self.push_vertex(i);
            }
        }
        self.process_queues();

        self.batches += 1;
        let c = self.best_cost();
        self.per_batch_costs.push(c);
    }

    fn connection_radius(&self, q: usize) -> f64 {
        let c_best = self.best_cost();
        let mut measure = self.bounds_area;
        if c_best.is_finite() {
            let c_min = heuristic_cost(self.start, self.goal);
            let ellipse =
                PI * (c_best / 2.0) * ((c_best * c_best - c_min * c_min).max(0.0).sqrt() / 2.0);
            measure = measure.min(ellipse);
        }
        let q = q as f64;
        // n = 2: 2 (1 + 1/n)^(1/n) (λ/ζ)^(1/n) (ln q / q)^(1/n), ζ = π.
        self.cfg.rewire_factor * 2.0 * 1.5f64.sqrt() * (measure / PI).sqrt() * (q.ln() / q).sqrt()
    }

    fn add_samples(&mut self) {
        self.last_batch_samples.clear();
        let Some(inner) = self.free.inner_bounds().copied() else {
            return;
        };
        let c_best = self.best_cost();
        let target = self.cfg.batch_size;
        let max_attempts = 200 * target;
        let mut attempts = 0;
        while self.last_batch_samples.len() < target && attempts < max_attempts {
            attempts += 1;
            let p = match sample_informed(self.start, self.goal, c_best, &inner, &mut self.rng) {
                Ok(p) => p,
                Err(_) => break,
            };
            if self.free.point_free(p) {
                self.last_batch_samples.push(p);
            }
        }
        self.samples_used += self.last_batch_samples.len();
        for i in 0..self.last_batch_samples.len() {
            let p = self.last_batch_samples[i];
            self.nodes.push(Node::sample(p));
        }
    }

    fn prune(&mut self, c_best: f64) {
        let n = self.nodes.len();
        let mut keep = vec![true; n];
        // The incumbent's own vertices are never pruned, whatever rounding
        // does to their heuristic estimate.
        let mut protected = vec![false; n];
        let mut cur = Some(self.goal_idx);
        while let Some(i) = cur {
            protected[i] = true;
            cur = self.nodes[i].parent;
        }
        protected[0] = true;
        let tol = 1e-9 * c_best.max(1.0);
        for i in 0..n {
            let node = &self.nodes[i];
            if protected[i] {
                continue;
            }
            let f = self.f_hat(node.p);
            if node.in_tree {
                if f > c_best + tol {
                    keep[i] = false;
                }
            } else if f >= c_best {
                keep[i] = false;
            }
        }
        for i in 0..n {
            if keep[i] || !self.nodes[i].in_tree {
                continue;
            }
            if let Some(p) = self.nodes[i].parent {
                self.nodes[p].children.retain(|&c| c != i);
            }
            // Detach the subtree; surviving descendants go back to the
            // sample set.
            let mut stack = std::mem::take(&mut self.nodes[i].children);
            while let Some(c) = stack.pop() {
                stack.append(&mut self.nodes[c].children);
                let node = &mut self.nodes[c];
                node.in_tree = false;
                node.parent = None;
                node.g = f64::INFINITY;
                node.edge_cost = f64::INFINITY;
                if self.f_hat(self.nodes[c].p) >= c_best {
                    keep[c] = false;
                }
            }
            self.nodes[i].in_tree = false;
            self.nodes[i].parent = None;
        }
        // Mark removed nodes with NaN position so `compact` drops them.
        for (node, _) in self.nodes.iter_mut().zip(&keep).filter(|(_, k)| !**k) {
            node.p = Point2::new(f64::NAN, f64::NAN);
            node.in_tree = false;
        }
    }

    fn compact(&mut self) {
        let n = self.nodes.len();
        let mut remap = vec![usize::MAX; n];
        let mut next = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.p.is_finite() {
                remap[i] = next;
                next += 1;
            }
        }
        if next == n {
            return;
        }
        let old = std::mem::take(&mut self.nodes);
        self.nodes = old
            .into_iter()
            .filter(|node| node.p.is_finite())
            .map(|mut node| {
                node.parent = node.parent.map(|p| remap[p]);
                node.children = node.children.iter().map(|&c| remap[c]).collect();
                node
            })
            .collect();
        self.goal_idx = remap[self.goal_idx];
    }

    fn push_vertex(&mut self, v: usize) {
        let node = &self.nodes[v];
        let h = self.h_hat(node.p);
        let entry = QueueEntry {
            key: node.g + h,
            h,
            seq: self.next_seq(),
            from: v,
            to: v,
        };
        self.vertex_queue.push(entry);
    }

    fn push_edge(&mut self, from: usize, to: usize) {
        let (a, b) = (self.nodes[from].p, self.nodes[to].p);
        let h = self.h_hat(b);
        let entry = QueueEntry {
            key: self.nodes[from].g + heuristic_cost(a, b) + h,
            h,
            seq: self.next_seq(),
            from,
            to,
        };
        self.edge_queue.push(entry);
    }

    fn vertex_key(&self, e: &QueueEntry) -> f64 {
        self.nodes[e.from].g + e.h
    }

    fn edge_key(&self, e: &QueueEntry) -> f64 {
        let (a, b) = (&self.nodes[e.from], &self.nodes[e.to]);
        a.g + heuristic_cost(a.p, b.p) + e.h
    }

    /// Refreshes the top of a queue whose stored keys may be stale (vertex
    /// costs only ever decrease) and returns its current key.
    fn best_vertex_value(&mut self) -> f64 {
        while let Some(top) = self.vertex_queue.peek().copied() {
            let key = self.vertex_key(&top);
            if key < top.key {
                self.vertex_queue.pop();
                self.vertex_queue.push(QueueEntry { key, ..top });
                continue;
            }
            return key;
        }
        f64::INFINITY
    }

    fn best_edge_value(&mut self) -> f64 {
        while let Some(top) = self.edge_queue.peek().copied() {
            let key = self.edge_key(&top);
            if key < top.key {
                self.edge_queue.pop();
                self.edge_queue.push(QueueEntry { key, ..top });
                continue;
            }
            return key;
        }
        f64::INFINITY
    }

    fn process_queues(&mut self) {
        loop {
            if self.vertex_queue.is_empty() && self.edge_queue.is_empty() {
                return;
            }
            while !self.vertex_queue.is_empty()
                && self.best_vertex_value() <= self.best_edge_value()
            {
                let v = self.vertex_queue.pop().expect("non-empty").from;
                self.expand_vertex(v);
            }
            let best = self.best_edge_value();
            let Some(edge) = self.edge_queue.pop() else {
                continue;
            };
            let c_best = self.best_cost();
            if best >= c_best {
                self.vertex_queue.clear();
                self.edge_queue.clear();
                return;
            }
            self.try_edge(edge.from, edge.to, c_best);
        }
    }

    fn expand_vertex(&mut self, v: usize) {
        let c_best = self.best_cost();
        let vp = self.nodes[v].p;
        let gv = self.nodes[v].g;
        let g_hat_v = self.g_hat(vp);
        let r = self.radius;
        let is_new = !self.nodes[v].old;

        let mut to_samples = Vec::new();
        let mut to_vertices = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if i == v {
                continue;
            }
            let d = vp.dist(n.p);
            if d > r {
                continue;
            }
            if !n.in_tree {
                if g_hat_v + d + self.h_hat(n.p) < c_best {
                    to_samples.push(i);
                }
            } else if is_new
                && n.parent != Some(v)
                && self.nodes[v].parent != Some(i)
                && g_hat_v + d + self.h_hat(n.p) < c_best
                && gv + d < n.g
            {
                to_vertices.push(i);
            }
        }
        for x in to_samples.into_iter().chain(to_vertices) {
            self.push_edge(v, x);
        }
        // Marked so a re-queued vertex does not re-add its rewiring edges.
        self.nodes[v].old = true;
    }

    fn try_edge(&mut self, v: usize, x: usize, c_best: f64) {
        let (vp, xp) = (self.nodes[v].p, self.nodes[x].p);
        let gv = self.nodes[v].g;
        let c_hat = heuristic_cost(vp, xp);
        if gv + c_hat >= self.nodes[x].g {
            return;
        }
        if !self.free.segment_free(vp, xp) {
            return;
        }
        let c = c_hat;
        if self.g_hat(vp) + c + self.h_hat(xp) >= c_best || gv + c >= self.nodes[x].g {
            return;
        }
        if self.nodes[x].in_tree {
            if let Some(p) = self.nodes[x].parent {
                self.nodes[p].children.retain(|&k| k != x);
            }
        } else {
            self.nodes[x].in_tree = true;
            self.push_vertex(x);
        }
        self.nodes[x].parent = Some(v);
        self.nodes[x].edge_cost = c;
        self.nodes[v].children.push(x);
        self.set_cost(x, gv + c);
    }

    fn set_cost(&mut self, x: usize, g: f64) {
        self.nodes[x].g = g;
        let mut stack = self.nodes[x].children.clone();
        while let Some(c) = stack.pop() {
            let p = self.nodes[c].parent.expect("child has parent");
            self.nodes[c].g = self.nodes[p].g + self.nodes[c].edge_cost;
            stack.extend_from_slice(&self.nodes[c].children);
        }
    }

    /// Current incumbent as a polyline, if any.
    pub fn solution(&self) -> Option<PlannerSolution> {
        let goal = self.goal_idx;
        if !self.nodes[goal].in_tree {
            return None;
        }
        let mut waypoints = vec![self.nodes[goal].p];
        let mut cur = goal;
        while let Some(p) = self.nodes[cur].parent {
            waypoints.push(self.nodes[p].p);
            cur = p;
        }
        waypoints.reverse();
        let cost = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
        Some(PlannerSolution {
            waypoints,
            cost,
            samples_used: self.samples_used,
            batches: self.batches,
            per_batch_costs: self.per_batch_costs.clone(),
        })
    }
}

/// Plans from `start` to `goal` on `scene`, returning the best path found
/// within `max_batches` batches or the time budget.
pub fn plan(
    scene: &SceneSnapshot,
    start: Point2,
    goal: Point2,
    cfg: &PlannerConfig,
) -> Result<PlannerSolution, PlanError> {
    let mut planner = BitStar::new(scene, start, goal, cfg.clone())?;
    if start.dist(goal) == 0.0 {
        return Ok(planner.solution().expect("trivial solution"));
    }
    let deadline = Instant::now() + Duration::from_secs_f64(cfg.time_budget);
    while planner.batches() < cfg.max_batches {
        planner.run_batch();
        if planner.is_optimal() || Instant::now() >= deadline {
            break;
        }
    }
    planner.solution().ok_or(PlanError::NoPath {
        batches: planner.batches(),
        samples: planner.samples_used,
    })
}
