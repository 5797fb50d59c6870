mod common;

use common::random_dynamic_world;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqbit::replan::{predict_first_collision, replan, ReplanConfig};
use seqbit::world::RobotSpec;

fn cfg(seed: u64) -> ReplanConfig {
    let mut c = ReplanConfig::default();
    c.planner.rng_seed = seed;
    c
}

#[test]
fn accepted_reference_is_clear_on_a_fine_recheck() {
    let robot = RobotSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut solved = 0;
    for k in 0..30 {
        let (mut world, start, goal) = random_dynamic_world(&mut rng);
        let c = cfg(k);
        let Ok(out) = replan(&mut world, start, goal, 0.0, &robot, &c) else {
            continue;
        };
        solved += 1;
        let horizon = out.trajectory.end_time();
        let hit = predict_first_collision(
            &out.trajectory,
            &world.dynamics,
            robot.radius,
            0.0,
            horizon,
            c.dt_check / 10.0,
        );
        assert!(hit.is_none(), "scenario {k}: {hit:?}");

        let st = &out.state;
        // One square per rejected plan, centered on its collision point.
        assert_eq!(st.virtuals.len(), st.iterations - 1);
        assert_eq!(st.hits.len(), st.virtuals.len());
        for (v, h) in st.virtuals.iter().zip(&st.hits) {
            assert_eq!(v.center, h.x_hit);
        }
        assert_eq!(&world.virtuals, &st.virtuals);
        assert!(out.departure >= 0.0);
        assert!((out.trajectory.start_time() - out.departure).abs() < 1e-9);
    }
    assert!(solved >= 25, "only {solved} of 30 solved");
}

#[test]
fn later_plans_avoid_every_earlier_square() {
    let robot = RobotSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..30 {
        let (mut world, start, goal) = random_dynamic_world(&mut rng);
        let c = cfg(k);
        let Ok(out) = replan(&mut world, start, goal, 0.0, &robot, &c) else {
            continue;
        };
        let st = &out.state;
        let inflation = robot.radius + c.clearance;
        for (i, path) in st.planned_paths.iter().enumerate() {
            // Plan i saw squares 0..i, minus those covering start or goal.
            for v in &st.virtuals[..i] {
                let grown = seqbit::geometry::AxisRect::new(
                    v.center,
                    v.half_width + inflation,
                    v.half_height + inflation,
                );
                if grown.contains(start.position()) || grown.contains(goal) {
                    continue;
                }
                for w in path.waypoints.windows(2) {
                    let s = seqbit::geometry::Segment2::new(w[0], w[1]);
                    assert!(seqbit::geometry::dist_segment_rect(&s, v) > inflation - 1e-9);
                }
            }
        }
    }
}

#[test]
fn replan_effort_stays_small() {
    let robot = RobotSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut calls = 0;
    let mut total = 0;
    for k in 0..30 {
        let (mut world, start, goal) = random_dynamic_world(&mut rng);
        let iterations = match replan(&mut world, start, goal, 0.0, &robot, &cfg(k)) {
            Ok(out) => out.state.iterations,
            Err(seqbit::replan::ReplanError::MaxIterations(st)) => st.iterations,
            Err(seqbit::replan::ReplanError::NoPath { state, .. }) => state.iterations,
            Err(e) => panic!("{e}"),
        };
        calls += 1;
        total += iterations;
    }
    let mean = total as f64 / calls as f64;
    println!("mean BIT* invocations per call: {mean:.2}");
    assert!((1.0..=4.0).contains(&mean), "mean iterations {mean}");
}
