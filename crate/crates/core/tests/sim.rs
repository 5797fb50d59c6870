use seqbit::report::{bench_csv, parse_bench_csv, parse_trace, render_svg, write_trace, BenchRow};
use seqbit::scenario::bundled;
use seqbit::sim::{aggregate, run, Event, Outcome, PlannerKind, RunResult};
use seqbit::trajectory::RobotLimits;

const BUNDLED: [&str; 3] = ["paper-1obs", "paper-2obs", "paper-3obs"];

fn check_plant_limits(r: &RunResult, dt: f64) {
    let lim = RobotLimits::default();
    let rec = &r.trace.records;
    for w in rec.windows(2) {
        let (a, b) = (w[0].twist, w[1].twist);
        assert!(b.v.abs() <= lim.v_max + 1e-9 && b.omega.abs() <= lim.omega_max + 1e-9);
        assert!((b.v - a.v).abs() <= lim.a_max * dt + 1e-9, "t={}", w[1].t);
        assert!(
            (b.omega - a.omega).abs() <= lim.alpha_max * dt + 1e-9,
            "t={}",
            w[1].t
        );
    }
}

fn has(r: &RunResult, e: Event) -> bool {
    r.trace.records.iter().any(|x| x.events.contains(&e))
}

#[test]
fn seqbit_is_safe_on_bundled_scenarios() {
    for name in BUNDLED {
        let sc = bundled(name).unwrap();
        for seed in [1, 7, 13] {
            let r = run(&sc, PlannerKind::SequentialBitStar, seed);
            assert_eq!(r.outcome, Outcome::Reached, "{name} seed {seed}");
            assert!(
                r.min_clearance > 0.0,
                "{name} seed {seed}: {}",
                r.min_clearance
            );
            let last = r.trace.records.last().unwrap();
            assert!(last.pose.position().dist(sc.goal) <= sc.sim.goal_tolerance);
            assert!(!has(&r, Event::Crash) && has(&r, Event::Goal));
            assert_eq!(r.virtuals_used, r.trace.virtuals.len());
            check_plant_limits(&r, sc.sim.dt);
        }
    }
}

#[test]
fn three_obstacle_scenario_separates_the_planners() {
    let sc = bundled("paper-3obs").unwrap();
    let s = run(&sc, PlannerKind::SequentialBitStar, 7);
    assert_eq!(s.outcome, Outcome::Reached);
    assert_eq!(s.virtuals_used, 2);
    let d = run(&sc, PlannerKind::Dovs, 7);
    assert_eq!(d.outcome, Outcome::Crashed);
    assert!(has(&d, Event::Crash) && !has(&d, Event::Goal));
    check_plant_limits(&d, sc.sim.dt);
}

#[test]
fn runs_are_byte_deterministic() {
    for name in BUNDLED {
        let sc = bundled(name).unwrap();
        for kind in [PlannerKind::SequentialBitStar, PlannerKind::Dovs] {
            let a = run(&sc, kind, 7);
            let b = run(&sc, kind, 7);
            let ta = write_trace(&a.trace);
            assert!(ta == write_trace(&b.trace), "{name} {}", kind.name());
            assert_eq!(
                (a.path_length, a.time_to_goal, a.outcome),
                (b.path_length, b.time_to_goal, b.outcome)
            );
            // Plotting a saved trace is a pure function of the file.
            let parsed = parse_trace(&ta).unwrap();
            assert!(render_svg(&parsed) == render_svg(&parse_trace(&ta).unwrap()));
            assert!(write_trace(&parsed) == ta);
        }
    }
}

#[test]
fn bench_rows_round_trip() {
    let sc = bundled("paper-1obs").unwrap();
    let results: Vec<RunResult> = (1..=3)
        .map(|s| run(&sc, PlannerKind::SequentialBitStar, s))
        .collect();
    let stats = aggregate(&results).unwrap();
    let rows = vec![BenchRow {
        planner: "seqbit".into(),
        n_dynamic: 1,
        stats,
    }];
    let back = parse_bench_csv(&bench_csv(&rows)).unwrap();
    let got = &back[0].stats;
    assert_eq!(back[0].n_dynamic, 1);
    assert!((got.path_length.mean - stats.path_length.mean).abs() < 1e-6);
    assert!((got.path_length.std - stats.path_length.std).abs() < 1e-6);
    assert!((got.time_to_goal.mean - stats.time_to_goal.mean).abs() < 1e-6);
    assert_eq!(got.failure_rate, stats.failure_rate);
}
