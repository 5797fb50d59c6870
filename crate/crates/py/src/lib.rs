//! Python bindings: load scenarios, run the simulator, call the planner and
//! the sequential re-planner, and render traces.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use seqbit::bitstar::{self, PlannerConfig, PlannerSolution};
use seqbit::geometry::{AxisRect, Point2};
use seqbit::replan::{self, ReplanConfig};
use seqbit::report;
use seqbit::scenario::{self as sc_mod, Scenario as CoreScenario};
use seqbit::sim::{self, Outcome, PlannerKind, RunResult as CoreRun};

type XY = (f64, f64);
type Rect = (f64, f64, f64, f64);

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn xy(p: Point2) -> XY {
    (p.x, p.y)
}

fn rect(r: &AxisRect) -> Rect {
    (r.center.x, r.center.y, r.half_width, r.half_height)
}

fn planner_kind(name: &str) -> PyResult<PlannerKind> {
    PlannerKind::from_name(name).ok_or_else(|| {
        value_err(format!(
            "unknown planner {name:?}; use \"seqbit\" or \"dovs\""
        ))
    })
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Reached => "reached",
        Outcome::Crashed => "crashed",
        Outcome::Timeout => "timeout",
    }
}

/// A loaded scenario: arena, obstacles, robot, start and goal.
#[pyclass(frozen, module = "seqbit_py")]
struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    /// Parses scenario TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        sc_mod::load_scenario(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| value_err(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// One of the scenarios shipped with the library.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        sc_mod::bundled(name)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn start(&self) -> (f64, f64, f64) {
        let s = self.inner.start;
        (s.x, s.y, s.theta)
    }

    #[getter]
    fn goal(&self) -> XY {
        xy(self.inner.goal)
    }

    /// Static rectangles as `(cx, cy, half_width, half_height)`.
    #[getter]
    fn statics(&self) -> Vec<Rect> {
        self.inner.world.statics.iter().map(rect).collect()
    }

    #[getter]
    fn n_dynamic(&self) -> usize {
        self.inner.world.dynamics.len()
    }

    #[getter]
    fn robot_radius(&self) -> f64 {
        self.inner.robot.radius
    }

    /// Simulates one run with `planner` ("seqbit" or "dovs").
    #[pyo3(signature = (planner = "seqbit", seed = 1))]
    fn run(&self, py: Python<'_>, planner: &str, seed: u64) -> PyResult<RunResult> {
        let kind = planner_kind(planner)?;
        let inner = py.detach(|| sim::run(&self.inner, kind, seed));
        Ok(RunResult { inner })
    }

    /// Plans once on the static map from the start to the goal.
    #[pyo3(signature = (seed = 0, batch_size = 100, max_batches = 10, inflation = None))]
    fn plan(
        &self,
        py: Python<'_>,
        seed: u64,
        batch_size: usize,
        max_batches: usize,
        inflation: Option<f64>,
    ) -> PyResult<Plan> {
        let cfg = PlannerConfig {
            batch_size,
            max_batches,
            rng_seed: seed,
            inflation: inflation.unwrap_or(self.inner.robot.radius),
            ..PlannerConfig::default()
        };
        let scene = self.inner.world.snapshot(0.0, false);
        let start = self.inner.start.position();
        let goal = self.inner.goal;
        py.detach(|| bitstar::plan(&scene, start, goal, &cfg))
            .map(|inner| Plan { inner })
            .map_err(value_err)
    }

    /// One call of the sequential re-planner from the start pose at time
    /// `t_now`, on a copy of the world.
    #[pyo3(signature = (t_now = 0.0, seed = 0))]
    fn replan(&self, py: Python<'_>, t_now: f64, seed: u64) -> PyResult<Replan> {
        let mut cfg = ReplanConfig::default();
        cfg.planner.rng_seed = seed;
        let mut world = self.inner.world.clone();
        let sc = &self.inner;
        let out = py
            .detach(|| replan::replan(&mut world, sc.start, sc.goal, t_now, &sc.robot, &cfg))
            .map_err(value_err)?;
        Ok(Replan {
            plan: Plan {
                inner: out.solution,
            },
            iterations: out.state.iterations,
            virtuals: out.state.virtuals.iter().map(rect).collect(),
            departure: out.departure,
            reference: out
                .trajectory
                .samples
                .iter()
                .map(|s| {
                    (
                        s.t,
                        s.pose.x,
                        s.pose.y,
                        s.pose.theta,
                        s.twist.v,
                        s.twist.omega,
                    )
                })
                .collect(),
            wall_time: out.wall_time.as_secs_f64(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, statics={}, dynamics={})",
            self.inner.name,
            self.inner.world.statics.len(),
            self.inner.world.dynamics.len()
        )
    }
}

/// A BIT* solution: a polyline and its length.
#[pyclass(frozen, skip_from_py_object, module = "seqbit_py")]
#[derive(Clone)]
struct Plan {
    inner: PlannerSolution,
}

#[pymethods]
impl Plan {
    #[getter]
    fn waypoints(&self) -> Vec<XY> {
        self.inner.waypoints.iter().copied().map(xy).collect()
    }

    #[getter]
    fn cost(&self) -> f64 {
        self.inner.cost
    }

    #[getter]
    fn batches(&self) -> usize {
        self.inner.batches
    }

    #[getter]
    fn samples_used(&self) -> usize {
        self.inner.samples_used
    }

    /// Incumbent cost after each batch; `inf` before the first solution.
    #[getter]
    fn per_batch_costs(&self) -> Vec<f64> {
        self.inner.per_batch_costs.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "Plan(cost={:.4}, waypoints={}, batches={})",
            self.inner.cost,
            self.inner.waypoints.len(),
            self.inner.batches
        )
    }
}

/// Result of one re-planner call.
#[pyclass(frozen, module = "seqbit_py")]
struct Replan {
    #[pyo3(get)]
    plan: Plan,
    #[pyo3(get)]
    iterations: usize,
    /// Virtual squares added, as `(cx, cy, half_width, half_height)`.
    #[pyo3(get)]
    virtuals: Vec<Rect>,
    #[pyo3(get)]
    departure: f64,
    /// `(t, x, y, theta, v, omega)` per reference sample.
    #[pyo3(get)]
    reference: Vec<(f64, f64, f64, f64, f64, f64)>,
    #[pyo3(get)]
    wall_time: f64,
}

/// Summary and trace of one simulated run.
#[pyclass(frozen, module = "seqbit_py")]
struct RunResult {
    inner: CoreRun,
}

#[pymethods]
impl RunResult {
    /// "reached", "crashed" or "timeout".
    #[getter]
    fn outcome(&self) -> &'static str {
        outcome_name(self.inner.outcome)
    }

    #[getter]
    fn path_length(&self) -> f64 {
        self.inner.path_length
    }

    #[getter]
    fn time_to_goal(&self) -> f64 {
        self.inner.time_to_goal
    }

    #[getter]
    fn plan_time(&self) -> f64 {
        self.inner.plan_time
    }

    #[getter]
    fn virtuals_used(&self) -> usize {
        self.inner.virtuals_used
    }

    #[getter]
    fn min_clearance(&self) -> f64 {
        self.inner.min_clearance
    }

    #[getter]
    fn replans(&self) -> usize {
        self.inner.replans.len()
    }

    /// Robot poses `(t, x, y, theta)`, one per step.
    #[getter]
    fn poses(&self) -> Vec<(f64, f64, f64, f64)> {
        self.inner
            .trace
            .records
            .iter()
            .map(|r| (r.t, r.pose.x, r.pose.y, r.pose.theta))
            .collect()
    }

    fn trace_csv(&self) -> String {
        report::write_trace(&self.inner.trace)
    }

    fn svg(&self) -> String {
        report::render_svg(&self.inner.trace)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(outcome={:?}, path_length={:.3}, time_to_goal={:.2})",
            self.outcome(),
            self.inner.path_length,
            self.inner.time_to_goal
        )
    }
}

/// Renders a saved trace log as SVG.
#[pyfunction]
fn render_trace(text: &str) -> PyResult<String> {
    report::parse_trace(text)
        .map(|t| report::render_svg(&t))
        .map_err(value_err)
}

/// Names of the scenarios shipped with the library.
#[pyfunction]
fn bundled_names() -> Vec<&'static str> {
    sc_mod::bundled_names().collect()
}

/// The planner's cost-to-go estimate between two `(x, y)` points.
#[pyfunction]
fn heuristic_cost(a: XY, b: XY) -> f64 {
    bitstar::heuristic_cost(Point2::new(a.0, a.1), Point2::new(b.0, b.1))
}

#[pymodule]
fn seqbit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Plan>()?;
    m.add_class::<Replan>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(render_trace, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_names, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic_cost, m)?)?;
    Ok(())
}
