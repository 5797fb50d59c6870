//! Text artifacts: the per-step trace log, SVG path plots, and the bench CSV.
//!
//! Trace log layout: `#`-prefixed scene lines, a CSV header, then one row per
//! simulation step.
//!
//! ```text
//! # planner seqbit
//! # bounds 7.500000 5.500000 7.500000 5.500000
//! # start 1.000000 1.000000 0.000000
//! # goal 13.000000 9.000000
//! # robot_radius 0.250000
//! # static cx cy hw hh
//! # dynamic radius x y theta v omega
//! # virtual cx cy hw hh
//! t,x,y,theta,v,omega,event
//! 0.000000,1.000000,1.000000,0.000000,0.000000,0.000000,PLAN|SWITCH
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::geometry::{AxisRect, Point2, Pose2D, Twist};
use crate::sim::{AggregateStats, Event, MeanStd, Trace, TraceRecord};
use crate::world::DynamicObstacle;

pub const TRACE_HEADER: &str = "t,x,y,theta,v,omega,event";
pub const BENCH_HEADER: &str = "planner,n_dynamic,path_length_mean,path_length_std,plan_time_mean,plan_time_std,time_to_goal_mean,time_to_goal_std,failure_rate";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

fn err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError {
        line,
        msg: msg.into(),
    }
}

fn rect_fields(r: &AxisRect) -> String {
    format!(
        "{:.6} {:.6} {:.6} {:.6}",
        r.center.x, r.center.y, r.half_width, r.half_height
    )
}

pub fn write_trace(trace: &Trace) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# planner {}", trace.planner);
    let _ = writeln!(out, "# bounds {}", rect_fields(&trace.bounds));
    let s = trace.start;
    let _ = writeln!(out, "# start {:.6} {:.6} {:.6}", s.x, s.y, s.theta);
    let _ = writeln!(out, "# goal {:.6} {:.6}", trace.goal.x, trace.goal.y);
    let _ = writeln!(out, "# robot_radius {:.6}", trace.robot_radius);
    for r in &trace.statics {
        let _ = writeln!(out, "# static {}", rect_fields(r));
    }
    for o in &trace.dynamics {
        let p = o.initial_pose;
        let _ = writeln!(
            out,
            "# dynamic {:.6} {:.6} {:.6} {:.6} {:.6} {:.6}",
            o.radius, p.x, p.y, p.theta, o.motion.v, o.motion.omega
        );
    }
    for r in &trace.virtuals {
        let _ = writeln!(out, "# virtual {}", rect_fields(r));
    }
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let events: Vec<&str> = r.events.iter().map(|e| e.name()).collect();
        let _ = writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
            r.t,
            r.pose.x,
            r.pose.y,
            r.pose.theta,
            r.twist.v,
            r.twist.omega,
            events.join("|")
        );
    }
    out
}

fn floats<const N: usize>(line: usize, parts: &[&str]) -> Result<[f64; N], FormatError> {
    if parts.len() != N {
        return Err(err(
            line,
            format!("expected {N} numbers, got {}", parts.len()),
        ));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p
            .parse()
            .map_err(|_| err(line, format!("bad number `{p}`")))?;
    }
    Ok(out)
}

fn rect_from(v: [f64; 4]) -> AxisRect {
    AxisRect::new(Point2::new(v[0], v[1]), v[2], v[3])
}

pub fn parse_trace(text: &str) -> Result<Trace, FormatError> {
    let mut planner = None;
    let mut bounds = None;
    let mut start = None;
    let mut goal = None;
    let mut robot_radius = None;
    let (mut statics, mut dynamics, mut virtuals, mut records) = (vec![], vec![], vec![], vec![]);
    let mut saw_header = false;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if saw_header {
                return Err(err(ln, "scene line after the column header"));
            }
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let Some((&key, vals)) = parts.split_first() else {
                continue;
            };
            match key {
                "planner" => planner = Some(vals.join(" ")),
                "bounds" => bounds = Some(rect_from(floats::<4>(ln, vals)?)),
                "start" => {
                    let v = floats::<3>(ln, vals)?;
                    start = Some(Pose2D::new(v[0], v[1], v[2]));
                }
                "goal" => {
                    let v = floats::<2>(ln, vals)?;
                    goal = Some(Point2::new(v[0], v[1]));
                }
                "robot_radius" => robot_radius = Some(floats::<1>(ln, vals)?[0]),
                "static" => statics.push(rect_from(floats::<4>(ln, vals)?)),
                "virtual" => virtuals.push(rect_from(floats::<4>(ln, vals)?)),
                "dynamic" => {
                    let v = floats::<6>(ln, vals)?;
                    dynamics.push(DynamicObstacle::new(
                        v[0],
                        Pose2D::new(v[1], v[2], v[3]),
                        v[4],
                        v[5],
                    ));
                }
                other => return Err(err(ln, format!("unknown scene key `{other}`"))),
            }
            continue;
        }
        if !saw_header {
            if line != TRACE_HEADER {
                return Err(err(ln, format!("expected header `{TRACE_HEADER}`")));
            }
            saw_header = true;
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(err(ln, format!("expected 7 columns, got {}", cols.len())));
        }
        let v = floats::<6>(ln, &cols[..6])?;
        let mut events = Vec::new();
        for name in cols[6].split('|').filter(|s| !s.is_empty()) {
            events.push(
                Event::from_name(name).ok_or_else(|| err(ln, format!("unknown event `{name}`")))?,
            );
        }
        records.push(TraceRecord {
            t: v[0],
            pose: Pose2D::new(v[1], v[2], v[3]),
            twist: Twist::new(v[4], v[5]),
            events,
        });
    }
    if !saw_header {
        return Err(err(0, "missing column header"));
    }
    let missing = |k: &str| err(0, format!("missing `# {k}` line"));
    Ok(Trace {
        planner: planner.ok_or_else(|| missing("planner"))?,
        bounds: bounds.ok_or_else(|| missing("bounds"))?,
        start: start.ok_or_else(|| missing("start"))?,
        goal: goal.ok_or_else(|| missing("goal"))?,
        robot_radius: robot_radius.ok_or_else(|| missing("robot_radius"))?,
        statics,
        dynamics,
        virtuals,
        records,
    })
}

/// Pixels per meter.
const SCALE: f64 = 50.0;
const MARGIN: f64 = 20.0;

struct Canvas {
    min: Point2,
    height: f64,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.min.x) * SCALE
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.height - (y - self.min.y)) * SCALE
    }

    fn rect(&self, r: &AxisRect, attrs: &str) -> String {
        let (lo, hi) = (r.min(), r.max());
        format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" {attrs}/>\n",
            self.x(lo.x),
            self.y(hi.y),
            (hi.x - lo.x) * SCALE,
            (hi.y - lo.y) * SCALE
        )
    }

    fn points(&self, pts: impl Iterator<Item = Point2>) -> String {
        pts.map(|p| format!("{:.2},{:.2}", self.x(p.x), self.y(p.y)))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Path plot: arena, statics in gray, dashed obstacle tracks, virtual
/// squares in blue, the robot path in red, and start/goal markers. Output
/// depends only on the trace.
pub fn render_svg(trace: &Trace) -> String {
    let b = trace.bounds;
    let cv = Canvas {
        min: b.min(),
        height: b.height(),
    };
    let (w, h) = (
        b.width() * SCALE + 2.0 * MARGIN,
        b.height() * SCALE + 2.0 * MARGIN,
    );
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    out.push_str(&cv.rect(
        &b,
        "class=\"arena\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"",
    ));
    for r in &trace.statics {
        out.push_str(&cv.rect(r, "class=\"static\" fill=\"gray\""));
    }
    for r in &trace.virtuals {
        out.push_str(&cv.rect(
            r,
            "class=\"virtual\" fill=\"blue\" fill-opacity=\"0.25\" stroke=\"blue\"",
        ));
    }
    let t_end = trace.records.last().map_or(0.0, |r| r.t);
    let n = ((t_end / 0.5).ceil() as usize).max(1);
    for o in &trace.dynamics {
        let pts = cv.points((0..=n).map(|k| o.pose_at(t_end * k as f64 / n as f64).position()));
        let _ = writeln!(
            out,
            "<polyline class=\"dynamic\" points=\"{pts}\" fill=\"none\" stroke=\"black\" stroke-dasharray=\"6 4\"/>"
        );
        let p = o.initial_pose.position();
        let _ = writeln!(
            out,
            "<circle class=\"dynamic-start\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
            cv.x(p.x),
            cv.y(p.y),
            o.radius * SCALE
        );
    }
    if !trace.records.is_empty() {
        let pts = cv.points(trace.records.iter().map(|r| r.pose.position()));
        let _ = writeln!(
            out,
            "<polyline class=\"robot\" points=\"{pts}\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>"
        );
    }
    for (class, p, color) in [
        ("start", trace.start.position(), "green"),
        ("goal", trace.goal, "orange"),
    ] {
        let _ = writeln!(
            out,
            "<circle class=\"{class}\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"6\" fill=\"{color}\"/>",
            cv.x(p.x),
            cv.y(p.y)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub planner: String,
    pub n_dynamic: usize,
    pub stats: AggregateStats,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.stats;
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.planner,
            r.n_dynamic,
            s.path_length.mean,
            s.path_length.std,
            s.plan_time.mean,
            s.plan_time.std,
            s.time_to_goal.mean,
            s.time_to_goal.std,
            s.failure_rate
        );
    }
    out
}

/// Parses [`bench_csv`] output. The run count is not stored; it comes back
/// as 0.
pub fn parse_bench_csv(text: &str) -> Result<Vec<BenchRow>, FormatError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == BENCH_HEADER => {}
        _ => return Err(err(1, "missing bench header")),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let ln = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 9 {
            return Err(err(ln, format!("expected 9 columns, got {}", cols.len())));
        }
        let n_dynamic = cols[1]
            .parse()
            .map_err(|_| err(ln, format!("bad n_dynamic `{}`", cols[1])))?;
        let v = floats::<7>(ln, &cols[2..])?;
        rows.push(BenchRow {
            planner: cols[0].to_string(),
            n_dynamic,
            stats: AggregateStats {
                n: 0,
                path_length: MeanStd {
                    mean: v[0],
                    std: v[1],
                },
                plan_time: MeanStd {
                    mean: v[2],
                    std: v[3],
                },
                time_to_goal: MeanStd {
                    mean: v[4],
                    std: v[5],
                },
                failure_rate: v[6],
            },
        });
    }
    Ok(rows)
}
