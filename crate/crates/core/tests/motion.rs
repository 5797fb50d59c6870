mod common;

use std::f64::consts::{PI, TAU};

use common::{arena, random_map};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqbit::bitstar::{plan, FreeSpace, PlannerConfig};
use seqbit::control::{step_robot, switch_maneuver, track, RobotState, TrackingGains};
use seqbit::geometry::{wrap_angle, Point2, Pose2D, Twist};
use seqbit::trajectory::{
    curvature, fit_spline, fit_spline_in, generate_reference, limit_violations, RobotLimits,
    SplinePath, TimedTrajectory,
};
use seqbit::world::SceneSnapshot;

const DT: f64 = 0.05;

/// One-sided second difference `(2f(u) - 5f(u-h) + 4f(u-2h) - f(u-3h)) / h^2`,
/// exact for cubics, so it reads the second derivative of a single piece.
fn second_diff(f: impl Fn(f64) -> Point2, u: f64, h: f64) -> Point2 {
    (f(u) * 2.0 - f(u - h) * 5.0 + f(u - 2.0 * h) * 4.0 - f(u - 3.0 * h)) * (1.0 / (h * h))
}

fn wiggly_points() -> impl Strategy<Value = Vec<Point2>> {
    prop::collection::vec((0.4..2.0f64, -1.2..1.2f64), 3..9).prop_map(|steps| {
        let mut p = Point2::new(0.0, 0.0);
        let mut out = vec![p];
        for (dx, dy) in steps {
            p = Point2::new(p.x + dx, p.y + dy);
            out.push(p);
        }
        out
    })
}

fn planned_spline(seed: u64) -> Option<SplinePath> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rects, start, goal) = random_map(&mut rng, 5, 0.35);
    let cfg = PlannerConfig {
        inflation: 0.35,
        rng_seed: seed,
        max_batches: 3,
        ..PlannerConfig::default()
    };
    let sol = plan(
        &SceneSnapshot::from_obstacles(arena(), rects.clone()),
        start,
        goal,
        &cfg,
    )
    .ok()?;
    let free = FreeSpace::from_parts(&arena(), rects, 0.3);
    Some(fit_spline_in(&free, &sol.waypoints, 0.05).ok()?.0)
}

#[test]
fn circle_knots_give_circle_curvature() {
    for r in [1.0, 2.5, 6.0] {
        let knots: Vec<Point2> = (0..=24)
            .map(|k| {
                let a = PI * k as f64 / 24.0;
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let sp = fit_spline(&knots).unwrap();
        let len = sp.total_length();
        assert!((len - PI * r).abs() / (PI * r) < 1e-3);
        // Away from the natural (zero curvature) ends.
        for i in 3..=21 {
            let s = len * i as f64 / 24.0;
            let k = curvature(&sp, s);
            assert!((k - 1.0 / r).abs() < 0.05 / r, "r={r} s={s} k={k}");
        }
    }
}

#[test]
fn reference_is_feasible_on_planned_paths() {
    let limits = RobotLimits::default();
    let mut checked = 0;
    let mut seed = 0;
    while checked < 100 {
        seed += 1;
        let Some(sp) = planned_spline(seed) else {
            continue;
        };
        let traj = generate_reference(&sp, &limits, DT);
        assert!(
            limit_violations(&traj, &limits, 1e-6).is_empty(),
            "seed {seed}"
        );
        let first = traj.samples.first().unwrap();
        let last = traj.samples.last().unwrap();
        assert_eq!(first.twist.v, 0.0);
        assert!(last.twist.v.abs() < 1e-9);
        assert!((traj.path_length() - sp.total_length()).abs() <= 0.005 * sp.total_length());
        assert_twist_reproduces_poses(&traj);
        checked += 1;
    }
}

/// Replays the reference twists with exact unicycle steps from the first
/// pose; the poses must agree with the stored ones.
fn assert_twist_reproduces_poses(traj: &TimedTrajectory) {
    let s = &traj.samples;
    let mut pose = s[0].pose;
    for w in s.windows(2) {
        let h = w[1].t - w[0].t;
        // Midpoint twist matches the stored pose sequence to second order.
        let mid = Twist::new(
            0.5 * (w[0].twist.v + w[1].twist.v),
            0.5 * (w[0].twist.omega + w[1].twist.omega),
        );
        pose = pose.integrate(mid, h);
        let err = pose.position().dist(w[1].pose.position());
        assert!(err < 0.01, "t={} err={err}", w[1].t);
    }
}

/// Straight reference along +x at 0.4 m/s, robot starting 0.5 m to the
/// side. Returns the final error in the reference frame (along, across).
fn lateral_offset_run(v_max: f64) -> (f64, f64) {
    let limits = RobotLimits {
        v_max,
        ..RobotLimits::default()
    };
    let gains = TrackingGains::default();
    let v = 0.4;
    let mut st = RobotState {
        pose: Pose2D::new(0.0, 0.5, 0.0),
        twist: Twist::new(v, 0.0),
    };
    let steps = (10.0 / DT) as usize;
    for k in 0..steps {
        let t = k as f64 * DT;
        let reference = Pose2D::new(v * t, 0.0, 0.0);
        let cmd = track(&st, &reference, &Twist::new(v, 0.0), &gains, &limits);
        st = step_robot(&st, cmd, DT, &limits);
    }
    let t_end = steps as f64 * DT;
    (v * t_end - st.pose.x, st.pose.y)
}

#[test]
fn lateral_offset_converges() {
    let (along, across) = lateral_offset_run(0.5);
    assert!(
        along.hypot(across) < 0.05,
        "error after 10 s: {along} {across}"
    );
}

#[test]
fn lag_is_permanent_when_reference_runs_at_the_speed_cap() {
    // The detour costs distance that can't be made up at v = v_max.
    let (along, across) = lateral_offset_run(0.4);
    assert!(across.abs() < 0.05, "{across}");
    assert!(along > 0.05 && along < 0.15, "{along}");
}

#[test]
fn tracking_a_planned_reference_stays_close() {
    let limits = RobotLimits::default();
    let gains = TrackingGains::default();
    for seed in 1..=10 {
        let Some(sp) = planned_spline(seed) else {
            continue;
        };
        let traj = generate_reference(&sp, &limits, DT);
        let mut st = RobotState::at_rest(traj.samples[0].pose);
        for w in traj.samples.windows(2) {
            let cmd = track(&st, &w[0].pose, &w[0].twist, &gains, &limits);
            st = step_robot(&st, cmd, DT, &limits);
            let err = st.pose.position().dist(w[1].pose.position());
            assert!(err < 0.1, "seed {seed} t={} err={err}", w[1].t);
        }
    }
}

proptest! {
    #[test]
    fn spline_hits_knots_and_is_c2(pts in wiggly_points()) {
        let sp = fit_spline(&pts).unwrap();
        let u = sp.knot_params().to_vec();
        for (k, &p) in pts.iter().enumerate() {
            prop_assert!(sp.eval_param(u[k]).dist(p) < 1e-9);
        }
        let f = |x: f64| sp.eval_param(x);
        let g = |x: f64| sp.eval_param(-x);
        for k in 1..u.len() - 1 {
            let h = 1e-3 * (u[k] - u[k - 1]).min(u[k + 1] - u[k]);
            let left = second_diff(f, u[k], h);
            // Mirror so the stencil reaches into the right-hand piece.
            let right = second_diff(g, -u[k], h);
            prop_assert!((left - right).norm() < 1e-6, "knot {k}: {left:?} vs {right:?}");
            let d2 = sp.d2_param(u[k]);
            prop_assert!((left - d2).norm() < 1e-6);
        }
    }

    #[test]
    fn plant_respects_limits(v0 in -0.4..0.4f64, w0 in -0.4..0.4f64, cmds in prop::collection::vec((-2.0..2.0f64, -3.0..3.0f64), 1..60)) {
        let limits = RobotLimits::default();
        let mut st = RobotState { pose: Pose2D::default(), twist: Twist::new(v0, w0) };
        for (v, w) in cmds {
            let next = step_robot(&st, Twist::new(v, w), DT, &limits);
            prop_assert!(next.twist.v.abs() <= limits.v_max + 1e-12);
            prop_assert!(next.twist.omega.abs() <= limits.omega_max + 1e-12);
            prop_assert!((next.twist.v - st.twist.v).abs() <= limits.a_max * DT + 1e-12);
            prop_assert!((next.twist.omega - st.twist.omega).abs() <= limits.alpha_max * DT + 1e-12);
            st = next;
        }
    }

    #[test]
    fn switch_maneuver_lands_on_heading(theta0 in -PI..PI, target in -TAU..TAU) {
        let limits = RobotLimits::default();
        let mut st = RobotState::at_rest(Pose2D::new(3.0, 4.0, theta0));
        for c in switch_maneuver(&st, target, &limits, DT) {
            st = step_robot(&st, c, DT, &limits);
        }
        prop_assert!(st.twist.omega.abs() < 1e-9);
        prop_assert!(wrap_angle(st.pose.theta - target).abs() < 1e-6);
    }
}
