//! Fixed-step closed-loop simulation of either planner in a scenario.

use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::control::{step_robot, track, RobotState, TrackingGains};
use crate::dovs::{arena_walls, dovs_step};
use crate::geometry::{AxisRect, Disc, Point2, Pose2D, Twist};
use crate::replan::{predict_first_collision, replan, ReplanConfig, ReplanOutcome};
use crate::scenario::Scenario;
use crate::trajectory::TimedTrajectory;
use crate::world::{SceneSnapshot, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerKind {
    SequentialBitStar,
    Dovs,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::SequentialBitStar => "seqbit",
            PlannerKind::Dovs => "dovs",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "seqbit" => Some(PlannerKind::SequentialBitStar),
            "dovs" => Some(PlannerKind::Dovs),
            _ => None,
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Reached,
    Crashed,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Event {
    Plan,
    Replan,
    Switch,
    VirtualAdded,
    Crash,
    Goal,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::Plan => "PLAN",
            Event::Replan => "REPLAN",
            Event::Switch => "SWITCH",
            Event::VirtualAdded => "VIRTUAL_ADDED",
            Event::Crash => "CRASH",
            Event::Goal => "GOAL",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Event::Plan,
            Event::Replan,
            Event::Switch,
            Event::VirtualAdded,
            Event::Crash,
            Event::Goal,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub pose: Pose2D,
    pub twist: Twist,
    pub events: Vec<Event>,
}

/// Everything needed to redraw a run: the scene, then one record per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub planner: String,
    pub bounds: AxisRect,
    pub start: Pose2D,
    pub goal: Point2,
    pub robot_radius: f64,
    pub statics: Vec<AxisRect>,
    pub dynamics: Vec<crate::world::DynamicObstacle>,
    pub virtuals: Vec<AxisRect>,
    pub records: Vec<TraceRecord>,
}

/// Bookkeeping for one call of the re-planner.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanCall {
    pub t: f64,
    pub iterations: usize,
    pub virtuals_added: usize,
    pub succeeded: bool,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub path_length: f64,
    /// Wall-clock seconds spent planning; never feeds back into the run.
    pub plan_time: f64,
    /// Simulated seconds until the run ended.
    pub time_to_goal: f64,
    pub outcome: Outcome,
    pub trace: Trace,
    pub virtuals_used: usize,
    /// Smallest robot/obstacle gap seen at any step (walls included).
    pub min_clearance: f64,
    pub replans: Vec<ReplanCall>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub replan: ReplanConfig,
    pub gains: TrackingGains,
    /// Re-check the active reference for collisions every this many seconds.
    pub monitor_period: f64,
    /// Tracking error that triggers a re-plan.
    pub max_tracking_error: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            replan: ReplanConfig::default(),
            gains: TrackingGains::default(),
            monitor_period: 1.0,
            max_tracking_error: 0.3,
        }
    }
}

/// True if the robot disc overlaps a static obstacle, a frozen dynamic
/// obstacle, or leaves the arena. Virtual squares are ignored.
pub fn detect_collision(robot: &Disc, snapshot: &SceneSnapshot) -> bool {
    snapshot.statics().iter().any(|r| robot.overlaps_rect(r))
        || snapshot.dynamics().iter().any(|d| robot.overlaps_disc(d))
        || arena_walls(snapshot.bounds())
            .iter()
            .any(|r| robot.overlaps_rect(r))
}

/// Gap between the robot disc and the nearest physical obstacle at `t`;
/// negative when overlapping.
pub fn clearance(robot: &Disc, world: &World, t: f64) -> f64 {
    let statics = world
        .statics
        .iter()
        .chain(arena_walls(&world.bounds).iter())
        .map(|r| r.distance_to_point(robot.center) - robot.radius)
        .fold(f64::INFINITY, f64::min);
    world
        .dynamics
        .iter()
        .map(|o| robot.center.dist(o.pose_at(t).position()) - robot.radius - o.radius)
        .fold(statics, f64::min)
}

enum Mode {
    NeedPlan,
    Rotate { cmds: Vec<Twist>, next: usize },
    Hold { until: f64 },
    Track,
    Brake,
}

/// Seed of the BIT* instances used by re-plan call `call` of run `seed`.
fn planner_seed(seed: u64, call: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(64 * call as u64)
}

pub fn run(scenario: &Scenario, planner: PlannerKind, seed: u64) -> RunResult {
    run_with(scenario, planner, seed, &SimOptions::default())
}

pub fn run_with(
    scenario: &Scenario,
    planner: PlannerKind,
    seed: u64,
    opts: &SimOptions,
) -> RunResult {
    let mut sim = Sim::new(scenario, planner, seed, opts);
    sim.execute();
    sim.finish()
}

struct Sim<'a> {
    sc: &'a Scenario,
    planner: PlannerKind,
    seed: u64,
    opts: &'a SimOptions,
    world: World,
    state: RobotState,
    step: usize,
    records: Vec<TraceRecord>,
    pending: Vec<Event>,
    mode: Mode,
    reference: Option<TimedTrajectory>,
    replans: Vec<ReplanCall>,
    plan_time: Duration,
    path_length: f64,
    min_clearance: f64,
    outcome: Option<Outcome>,
    next_monitor: f64,
}

impl<'a> Sim<'a> {
    fn new(sc: &'a Scenario, planner: PlannerKind, seed: u64, opts: &'a SimOptions) -> Self {
        let mut world = sc.world.clone();
        world.virtuals.clear();
        let state = RobotState::at_rest(sc.start);
        let min_clearance = clearance(
            &Disc::new(sc.start.position(), sc.robot.radius),
            &world,
            0.0,
        );
        Self {
            sc,
            planner,
            seed,
            opts,
            world,
            state,
            step: 0,
            records: Vec::new(),
            pending: Vec::new(),
            mode: Mode::NeedPlan,
            reference: None,
            replans: Vec::new(),
            plan_time: Duration::ZERO,
            path_length: 0.0,
            min_clearance,
            outcome: None,
            next_monitor: 0.0,
        }
    }

    fn t(&self) -> f64 {
        self.step as f64 * self.sc.sim.dt
    }

    fn record(&mut self) {
        let mut events = std::mem::take(&mut self.pending);
        events.sort();
        events.dedup();
        self.records.push(TraceRecord {
            t: self.t(),
            pose: self.state.pose,
            twist: self.state.twist,
            events,
        });
    }

    fn check_end(&mut self) -> bool {
        let t = self.t();
        let disc = Disc::new(self.state.pose.position(), self.sc.robot.radius);
        let gap = clearance(&disc, &self.world, t);
        self.min_clearance = self.min_clearance.min(gap);
        if detect_collision(&disc, &self.world.snapshot(t, true)) {
            self.pending.push(Event::Crash);
            self.outcome = Some(Outcome::Crashed);
        } else if disc.center.dist(self.sc.goal) <= self.sc.sim.goal_tolerance {
            self.pending.push(Event::Goal);
            self.outcome = Some(Outcome::Reached);
        } else if t >= self.sc.sim.t_max - 1e-9 {
            self.outcome = Some(Outcome::Timeout);
        }
        self.outcome.is_some()
    }

    fn execute(&mut self) {
        if self.check_end() {
            self.record();
            return;
        }
        loop {
            let cmd = match self.planner {
                PlannerKind::Dovs => {
                    let clock = Instant::now();
                    let choice = dovs_step(
                        &self.state,
                        &self.world,
                        self.t(),
                        self.sc.goal,
                        &self.sc.robot,
                        &self.sc.dovs,
                        self.sc.sim.dt,
                    );
                    self.plan_time += clock.elapsed();
                    choice.twist()
                }
                PlannerKind::SequentialBitStar => self.seqbit_command(),
            };
            self.record();
            let prev = self.state.pose.position();
            self.state = step_robot(&self.state, cmd, self.sc.sim.dt, &self.sc.robot.limits);
            self.path_length += prev.dist(self.state.pose.position());
            self.step += 1;
            if self.check_end() {
                self.record();
                return;
            }
        }
    }

    fn start_replan(&mut self) {
        let t = self.t();
        let mut cfg = self.opts.replan.clone();
        cfg.dt = self.sc.sim.dt;
        cfg.planner.rng_seed = planner_seed(self.seed, self.replans.len());
        let before = self.world.virtuals.len();
        let res = replan(
            &mut self.world,
            self.state.pose,
            self.sc.goal,
            t,
            &self.sc.robot,
            &cfg,
        );
        let added = self.world.virtuals.len() - before;
        self.pending.push(if self.replans.is_empty() {
            Event::Plan
        } else {
            Event::Replan
        });
        if added > 0 {
            self.pending.push(Event::VirtualAdded);
        }
        let (iterations, wall, ok) = match &res {
            Ok(o) => (o.state.iterations, o.wall_time, true),
            Err(e) => (
                match e {
                    crate::replan::ReplanError::MaxIterations(s)
                    | crate::replan::ReplanError::NoPath { state: s, .. } => s.iterations,
                    crate::replan::ReplanError::Trajectory(_) => 0,
                },
                Duration::ZERO,
                false,
            ),
        };
        self.replans.push(ReplanCall {
            t,
            iterations,
            virtuals_added: added,
            succeeded: ok,
            wall_time: wall,
        });
        match res {
            Ok(ReplanOutcome {
                trajectory,
                rotation,
                departure,
                wall_time,
                ..
            }) => {
                self.plan_time += wall_time;
                if !rotation.is_empty() {
                    self.pending.push(Event::Switch);
                }
                self.reference = Some(trajectory);
                self.next_monitor = departure + self.opts.monitor_period;
                self.mode = Mode::Rotate {
                    cmds: rotation,
                    next: 0,
                };
            }
            Err(_) => {
                // Wait in place and try again.
                self.reference = None;
                self.mode = Mode::Hold {
                    until: t + cfg.wait_step,
                };
            }
        }
    }

    fn seqbit_command(&mut self) -> Twist {
        loop {
            let now = self.t();
            match &mut self.mode {
                Mode::NeedPlan => {
                    self.start_replan();
                }
                Mode::Rotate { cmds, next } => {
                    if *next < cmds.len() {
                        *next += 1;
                        return cmds[*next - 1];
                    }
                    let until = self.reference.as_ref().map_or(now, |r| r.start_time());
                    self.mode = Mode::Hold { until };
                }
                Mode::Hold { until } => {
                    if now < *until - 1e-9 {
                        return Twist::ZERO;
                    }
                    self.mode = if self.reference.is_some() {
                        Mode::Track
                    } else {
                        Mode::NeedPlan
                    };
                }
                Mode::Track => {
                    let t = self.t();
                    let reference = self.reference.as_ref().expect("tracking needs a reference");
                    let r = reference.sample_at(t);
                    let off = r.pose.position().dist(self.state.pose.position());
                    let mut unsafe_ahead = off > self.opts.max_tracking_error;
                    if !unsafe_ahead && t >= self.next_monitor - 1e-9 {
                        self.next_monitor = t + self.opts.monitor_period;
                        let cfg = &self.opts.replan;
                        unsafe_ahead = predict_first_collision(
                            reference,
                            &self.world.dynamics,
                            self.sc.robot.radius + 0.5 * cfg.clearance,
                            t,
                            reference.end_time() - t,
                            cfg.dt_check,
                        )
                        .is_some();
                    }
                    if unsafe_ahead {
                        self.mode = Mode::Brake;
                        continue;
                    }
                    return track(
                        &self.state,
                        &r.pose,
                        &r.twist,
                        &self.opts.gains,
                        &self.sc.robot.limits,
                    );
                }
                Mode::Brake => {
                    if self.state.twist.v.abs() < 1e-9 && self.state.twist.omega.abs() < 1e-9 {
                        self.mode = Mode::NeedPlan;
                        continue;
                    }
                    return Twist::ZERO;
                }
            }
        }
    }

    fn finish(self) -> RunResult {
        let outcome = self.outcome.unwrap_or(Outcome::Timeout);
        let time_to_goal = self.t();
        let trace = Trace {
            planner: self.planner.name().to_string(),
            bounds: self.world.bounds,
            start: self.sc.start,
            goal: self.sc.goal,
            robot_radius: self.sc.robot.radius,
            statics: self.world.statics.clone(),
            dynamics: self.world.dynamics.clone(),
            virtuals: self.world.virtuals.clone(),
            records: self.records,
        };
        RunResult {
            path_length: self.path_length,
            plan_time: self.plan_time.as_secs_f64(),
            time_to_goal,
            outcome,
            virtuals_used: trace.virtuals.len(),
            trace,
            min_clearance: self.min_clearance,
            replans: self.replans,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample mean and population standard deviation; NaN when empty.
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateStats {
    pub n: usize,
    pub path_length: MeanStd,
    pub plan_time: MeanStd,
    pub time_to_goal: MeanStd,
    /// Fraction of runs that did not reach the goal.
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error("cannot aggregate zero runs")]
    Empty,
}

/// Means over the runs that reached the goal; everything else counts as a
/// failure.
pub fn aggregate(results: &[RunResult]) -> Result<AggregateStats, AggregateError> {
    if results.is_empty() {
        return Err(AggregateError::Empty);
    }
    let ok: Vec<&RunResult> = results
        .iter()
        .filter(|r| r.outcome == Outcome::Reached)
        .collect();
    let col = |f: fn(&RunResult) -> f64| ok.iter().map(|r| f(r)).collect::<Vec<_>>();
    Ok(AggregateStats {
        n: results.len(),
        path_length: MeanStd::of(&col(|r| r.path_length)),
        plan_time: MeanStd::of(&col(|r| r.plan_time)),
        time_to_goal: MeanStd::of(&col(|r| r.time_to_goal)),
        failure_rate: (results.len() - ok.len()) as f64 / results.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario;
    use crate::world::DynamicObstacle;

    fn empty_scenario() -> Scenario {
        load_scenario(
            "[bounds]\nw = 15.0\nh = 11.0\n[robot]\nradius = 0.25\n\
             start = { x = 2.0, y = 2.0, theta = 0.0 }\ngoal = { x = 12.0, y = 8.0 }\n",
        )
        .unwrap()
    }

    #[test]
    fn collision_predicate() {
        let mut w = World::new(AxisRect::from_extent(15., 11.));
        w.statics.push(AxisRect::new(Point2::new(5., 5.), 1., 1.));
        w.virtuals.push(AxisRect::square(Point2::new(10., 5.), 2.0));
        w.dynamics.push(DynamicObstacle::new(
            0.25,
            Pose2D::new(3., 8., 0.),
            0.0,
            0.0,
        ));
        let snap = w.snapshot(0.0, true);
        assert!(!detect_collision(
            &Disc::new(Point2::new(1.5, 1.5), 0.25),
            &snap
        ));
        assert!(detect_collision(
            &Disc::new(Point2::new(5.2, 5.0), 0.25),
            &snap
        ));
        assert!(!detect_collision(
            &Disc::new(Point2::new(10.0, 5.0), 0.25),
            &snap
        ));
        assert!(detect_collision(
            &Disc::new(Point2::new(3.4, 8.0), 0.25),
            &snap
        ));
        assert!(detect_collision(
            &Disc::new(Point2::new(0.1, 5.0), 0.25),
            &snap
        ));
    }

    #[test]
    fn empty_world_both_planners() {
        let sc = empty_scenario();
        let straight = sc.start.position().dist(sc.goal);
        for p in [PlannerKind::SequentialBitStar, PlannerKind::Dovs] {
            let r = run(&sc, p, 3);
            assert_eq!(r.outcome, Outcome::Reached, "{p}");
            assert!(r.path_length >= straight - sc.sim.goal_tolerance);
            assert!(r.path_length <= 1.05 * straight, "{p}: {}", r.path_length);
            assert_eq!(r.virtuals_used, 0);
        }
    }

    #[test]
    fn aggregate_examples() {
        let base = run(&empty_scenario(), PlannerKind::Dovs, 1);
        let one = aggregate(std::slice::from_ref(&base)).unwrap();
        assert_eq!(one.path_length.mean, base.path_length);
        assert_eq!(one.path_length.std, 0.0);
        let mut a = base.clone();
        a.path_length = 10.0;
        let mut b = base.clone();
        b.path_length = 14.0;
        let mut c = base;
        c.outcome = Outcome::Crashed;
        c.path_length = 100.0;
        let s = aggregate(&[a, b, c]).unwrap();
        assert_eq!(s.path_length.mean, 12.0);
        assert!((s.failure_rate - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(aggregate(&[]), Err(AggregateError::Empty));
    }
}
