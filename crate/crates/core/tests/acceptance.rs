//! End-to-end acceptance checks for the planning toolkit.
//!
//! Each test covers one acceptance criterion and prints a single
//! `acceptance <n> (<name>): pass|fail` line (visible with
//! `cargo test --test acceptance -- --nocapture`, or on failure).

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nalgebra::{DVector, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pivotplan::dq::UnitDualQuaternion;
use pivotplan::gait::{
    forward_gait, solve_gait, solve_gait_with, ContactEdgeState, ContactVertex, GaitProblem,
    GaitSolverOptions, SeedCandidate,
};
use pivotplan::kinematics::{
    forward_kinematics, geometric_jacobian, pose_difference, rmrc_track, JointLimits,
    ManipulatorModel, RevoluteJoint, TrackOptions,
};
use pivotplan::pipeline::plan;
use pivotplan::quat::UnitQuaternion;
use pivotplan::scenario::load_scenario;
use pivotplan::screw::{dq_pow, extract_screw, sclerp, ScrewDecomposition};

fn report<F: FnOnce() + std::panic::UnwindSafe>(number: u32, name: &str, body: F) {
    let outcome = std::panic::catch_unwind(body);
    match outcome {
        Ok(()) => println!("acceptance {number} ({name}): pass"),
        Err(payload) => {
            println!("acceptance {number} ({name}): fail");
            std::panic::resume_unwind(payload);
        }
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn wrap_angle(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    if x <= -PI {
        x += 2.0 * PI;
    }
    x
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-2 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion {
    let a = UnitQuaternion::from_axis_angle(&random_unit(rng), rng.random_range(-PI..PI)).unwrap();
    let b = UnitQuaternion::from_axis_angle(&random_unit(rng), rng.random_range(-PI..PI)).unwrap();
    a * b
}

fn random_pose(rng: &mut ChaCha8Rng) -> UnitDualQuaternion {
    let t = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    UnitDualQuaternion::from_rotation_translation(random_rotation(rng), t)
}

fn edge_mismatch(found: &ContactEdgeState, want: &ContactEdgeState) -> (f64, f64) {
    let pos = (found.a - want.a).norm().max((found.b - want.b).norm());
    let ang = wrap_angle(found.alpha - want.alpha).abs();
    (pos, ang)
}

#[test]
fn criterion_1_reference_gait_instance() {
    report(1, "reference gait instance", || {
        let w = 0.2;
        let alpha_f = (-80f64).to_radians();
        let start = ContactEdgeState::new(Vector2::new(0.0, 0.0), Vector2::new(w, 0.0));
        let goal_a = Vector2::new(0.13, 0.13);
        let goal = ContactEdgeState::new(
            goal_a,
            goal_a + w * Vector2::new(alpha_f.cos(), alpha_f.sin()),
        );
        let problem = GaitProblem {
            start,
            goal,
            w,
            alpha_max: 35f64.to_radians(),
            k_max: 10,
        };
        let t0 = Instant::now();
        let solution = solve_gait(&problem).expect("instance is solvable");
        let elapsed = t0.elapsed();

        assert_eq!(solution.k(), 4, "expected a four-step gait");
        assert!(
            solution.position_residual <= 1e-3,
            "position residual {} m",
            solution.position_residual
        );
        assert!(
            solution.angle_residual <= 0.5f64.to_radians(),
            "angle residual {} rad",
            solution.angle_residual
        );

        // Reference solution for this instance, in degrees. The reference
        // tabulates each step about its own pivot vertex, which flips the
        // sign of the steps taken about the second vertex relative to our
        // all-about-world-z convention.
        let reference_deg: [f64; 4] = [-10.55, 29.56, -12.63, 27.25];
        let reference_norm: f64 = reference_deg
            .iter()
            .map(|d| {
                let r = d.to_radians();
                r * r
            })
            .sum::<f64>()
            .sqrt();
        assert!(
            solution.norm() <= reference_norm * 1.01,
            "norm {} rad exceeds reference {} rad by more than 1%",
            solution.norm(),
            reference_norm
        );

        // The reference angles themselves must close the gait through the
        // independent forward oracle, within their printed precision.
        let mapped: Vec<f64> = reference_deg
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let r = d.to_radians();
                if i % 2 == 1 {
                    -r
                } else {
                    r
                }
            })
            .collect();
        let reached = forward_gait(&start, &mapped, solution.start_vertex, w);
        let (pos, ang) = edge_mismatch(&reached, &goal);
        assert!(pos <= 2e-3, "reference angles close within {pos} m");
        assert!(
            ang <= 1f64.to_radians(),
            "reference angles close within {ang} rad"
        );

        assert!(
            elapsed <= Duration::from_secs(5),
            "solver took {elapsed:?}"
        );
    });
}

#[test]
fn criterion_2_shared_fixed_point_pairs() {
    report(2, "shared fixed point pairs", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t0 = Instant::now();
        for _ in 0..1000 {
            let d1 = random_pose(&mut rng);
            let r = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let axis = random_unit(&mut rng);
            let theta = rng.random_range(0.1..3.0);
            let delta = UnitDualQuaternion::from_rotation_about_line(&r, &axis, theta).unwrap();
            let d2 = delta * d1;

            match extract_screw(&(d2 * d1.inverse())) {
                ScrewDecomposition::General(s) => {
                    assert!(s.slide.abs() <= 1e-10, "slide {} m", s.slide)
                }
                other => panic!("expected a rotation, got {other:?}"),
            }
            for i in 0..=10 {
                let tau = f64::from(i) / 10.0;
                let relative = sclerp(&d1, &d2, tau) * d1.inverse();
                let drift = (relative.transform_point(&r) - r).norm();
                assert!(drift <= 1e-9, "fixed point drifted {drift} m at tau {tau}");
            }
        }
        let elapsed = t0.elapsed();
        assert!(
            elapsed <= Duration::from_secs(1),
            "1000 pairs took {elapsed:?}"
        );
    });
}

#[test]
fn criterion_3_sclerp_invariances() {
    report(3, "sclerp invariances", || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let taus = [0.1, 0.25, 0.5, 0.75, 0.9, 1.0];

        // Endpoints.
        for _ in 0..100 {
            let d1 = random_pose(&mut rng);
            let d2 = random_pose(&mut rng);
            assert!(sclerp(&d1, &d2, 0.0).distance_up_to_sign(&d1) <= 1e-12);
            assert!(sclerp(&d1, &d2, 1.0).distance_up_to_sign(&d2) <= 1e-12);
        }

        // The screw axis of the covered motion is the same at every tau.
        for _ in 0..100 {
            let d1 = random_pose(&mut rng);
            let theta = rng.random_range(0.5..3.0);
            let slide = rng.random_range(-0.5..0.5);
            let axis = random_unit(&mut rng);
            let point = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let line = UnitDualQuaternion::from_rotation_about_line(&point, &axis, theta).unwrap();
            let push = UnitDualQuaternion::from_rotation_translation(
                UnitQuaternion::identity(),
                slide * axis,
            );
            let d2 = d1 * (push * line);
            let full = match extract_screw(&(d1.inverse() * d2)) {
                ScrewDecomposition::General(s) => s,
                other => panic!("expected a general screw, got {other:?}"),
            };
            for tau in taus {
                let partial = match extract_screw(&(d1.inverse() * sclerp(&d1, &d2, tau))) {
                    ScrewDecomposition::General(s) => s,
                    other => panic!("expected a general screw, got {other:?}"),
                };
                assert!((partial.axis - full.axis).norm() <= 1e-8);
                assert!((partial.moment - full.moment).norm() <= 1e-8);
            }
        }

        // Left invariance under a change of world frame.
        for _ in 0..100 {
            let d1 = random_pose(&mut rng);
            let d2 = random_pose(&mut rng);
            let g = random_pose(&mut rng);
            for tau in taus {
                let moved = sclerp(&(g * d1), &(g * d2), tau);
                let reference = g * sclerp(&d1, &d2, tau);
                assert!(moved.distance_up_to_sign(&reference) <= 1e-10);
            }
        }

        // Powers add.
        for _ in 0..100 {
            let d = random_pose(&mut rng);
            let a = rng.random_range(0.0..1.0);
            let b = rng.random_range(0.0..1.0);
            let split = dq_pow(&d, a) * dq_pow(&d, b);
            let joint = dq_pow(&d, a + b);
            assert!(split.distance_up_to_sign(&joint) <= 1e-10);
        }
    });
}

#[test]
fn criterion_4_kinematics_suite() {
    report(4, "kinematics suite", || {
        // Jacobian vs. finite differences on every bundled arm model.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut models: Vec<ManipulatorModel> = Vec::new();
        for name in ["planar3.json", "single7dof.json", "dual7dof.json"] {
            let loaded = load_scenario(fixture(name)).expect("fixture loads");
            for arm in loaded.scenario.arms {
                models.push(arm.model);
            }
        }
        assert_eq!(models.len(), 4);
        let h = 1e-6;
        for model in &models {
            for _ in 0..100 {
                let theta = DVector::from_iterator(
                    model.dof(),
                    model.limits().iter().map(|l| {
                        rng.random_range(l.lower.max(-2.5)..l.upper.min(2.5))
                    }),
                );
                let jac = geometric_jacobian(model, &theta).unwrap();
                let base = forward_kinematics(model, &theta).unwrap();
                let scale = jac.amax().max(1.0);
                for j in 0..model.dof() {
                    let mut bumped = theta.clone();
                    bumped[j] += h;
                    let fk = forward_kinematics(model, &bumped).unwrap();
                    let fd = pose_difference(&base, &fk).0 / h;
                    let diff = (jac.column(j) - fd).amax();
                    assert!(
                        diff / scale <= 1e-5,
                        "relative Jacobian error {} in column {j}",
                        diff / scale
                    );
                }
            }
        }

        // RMRC on a two-link arm lands on the closed-form IK solution.
        let two_link = {
            let joints = vec![
                RevoluteJoint {
                    axis: Vector3::z(),
                    point: Vector3::zeros(),
                },
                RevoluteJoint {
                    axis: Vector3::z(),
                    point: Vector3::x(),
                },
            ];
            let home = UnitDualQuaternion::from_rotation_translation(
                UnitQuaternion::identity(),
                Vector3::new(2.0, 0.0, 0.0),
            );
            let limits = vec![
                JointLimits {
                    lower: -PI,
                    upper: PI,
                };
                2
            ];
            ManipulatorModel::new(joints, home, limits, vec![1.0; 2]).unwrap()
        };
        let target_xy: Vector2<f64> = Vector2::new(0.7, 1.1);
        let r2 = target_xy.norm_squared();
        let theta2 = ((r2 - 2.0) / 2.0).acos();
        let theta1 =
            target_xy.y.atan2(target_xy.x) - (theta2.sin()).atan2(1.0 + theta2.cos());
        let closed_form = DVector::from_vec(vec![theta1, theta2]);
        let target = forward_kinematics(&two_link, &closed_form).unwrap();
        let theta0 = DVector::from_vec(vec![0.4, 1.2]);
        // Every waypoint must be reachable for a two-joint arm, so build the
        // path from forward kinematics of a joint-space line; the tracker
        // sees only the poses.
        let waypoints: Vec<UnitDualQuaternion> = (0..=20)
            .map(|i| {
                let s = f64::from(i) / 20.0;
                let theta = &theta0 * (1.0 - s) + &closed_form * s;
                forward_kinematics(&two_link, &theta).unwrap()
            })
            .collect();
        let tracked =
            rmrc_track(&two_link, &theta0, &waypoints, &TrackOptions::default()).unwrap();
        let reached = forward_kinematics(&two_link, tracked.joints.last().unwrap()).unwrap();
        assert!(reached.distance_up_to_sign(&target) <= 1e-8);
        let final_theta = tracked.joints.last().unwrap();
        for j in 0..2 {
            assert!(
                wrap_angle(final_theta[j] - closed_form[j]).abs() <= 1e-6,
                "joint {j}: {} vs closed form {}",
                final_theta[j],
                closed_form[j]
            );
        }

        // A waypoint already reached produces exactly zero joint motion.
        let held =
            rmrc_track(&two_link, &theta0, &[waypoints[0]], &TrackOptions::default()).unwrap();
        assert_eq!(held.joints.len(), 1);
        assert_eq!(held.joints[0], theta0);
    });
}

#[test]
fn criterion_5_single_arm_tip_plan() {
    report(5, "single arm tip plan", || {
        let loaded = load_scenario(fixture("single7dof.json")).expect("fixture loads");
        let scenario = loaded.scenario;

        let t0 = Instant::now();
        let result = plan(&scenario).expect("plan succeeds");
        let out = tempfile::tempdir().unwrap();
        pivotplan::export::export_plan(&result, out.path()).unwrap();
        let elapsed = t0.elapsed();
        assert!(elapsed <= Duration::from_secs(10), "plan took {elapsed:?}");

        // Contact edge: the body vertices grounded in both endpoint poses.
        let contact: Vec<Vector3<f64>> = scenario
            .object
            .vertices()
            .iter()
            .copied()
            .filter(|v| {
                scenario.start_pose.transform_point(v).z.abs() <= 1e-9
                    && scenario.goal_pose.transform_point(v).z.abs() <= 1e-9
            })
            .collect();
        assert_eq!(contact.len(), 2, "tip shares a two-vertex edge");

        // Work from the exported files, not the in-memory result.
        let pose_csv = std::fs::read_to_string(out.path().join("object_poses.csv")).unwrap();
        let mut exported_poses = Vec::new();
        for line in pose_csv.lines().skip(1) {
            let cells: Vec<f64> = line
                .split(',')
                .skip(2)
                .take(7)
                .map(|c| c.parse().unwrap())
                .collect();
            let rotation = UnitQuaternion::new_normalize(
                pivotplan::quat::Quaternion::from_parts(cells[3], cells[4], cells[5], cells[6]),
            )
            .unwrap();
            exported_poses.push(UnitDualQuaternion::from_rotation_translation(
                rotation,
                Vector3::new(cells[0], cells[1], cells[2]),
            ));
        }
        assert_eq!(exported_poses.len(), result.object_poses.len());
        for pose in &exported_poses {
            for v in &contact {
                let z = pose.transform_point(v).z;
                assert!(z.abs() <= 1e-8, "contact vertex left the plane by {z} m");
            }
        }
        let first = exported_poses.first().unwrap();
        let last = exported_poses.last().unwrap();
        assert!(first.distance_up_to_sign(&scenario.start_pose) <= 1e-8);
        assert!(last.distance_up_to_sign(&scenario.goal_pose) <= 1e-8);

        let joints_csv = std::fs::read_to_string(out.path().join("joints_arm1.csv")).unwrap();
        let rows: Vec<Vec<f64>> = joints_csv
            .lines()
            .skip(1)
            .map(|line| {
                line.split(',')
                    .skip(1)
                    .map(|c| c.parse().unwrap())
                    .collect()
            })
            .collect();
        assert_eq!(rows.len(), exported_poses.len());
        for pair in rows.windows(2) {
            for j in 0..pair[0].len() {
                let step = (pair[1][j] - pair[0][j]).abs();
                assert!(step <= 0.1, "joint {j} stepped {step} rad");
            }
        }
    });
}

#[test]
fn criterion_6_dual_arm_rigidity() {
    report(6, "dual arm rigidity", || {
        let loaded = load_scenario(fixture("dual7dof.json")).expect("fixture loads");
        let result = plan(&loaded.scenario).expect("plan succeeds");
        assert_eq!(result.ee_poses.len(), 2);
        let initial = result.ee_poses[0][0].inverse() * result.ee_poses[1][0];
        for s in 0..result.object_poses.len() {
            let relative = result.ee_poses[0][s].inverse() * result.ee_poses[1][s];
            let deviation = relative.distance_up_to_sign(&initial);
            assert!(
                deviation <= 1e-9,
                "relative EE pose moved {deviation} at sample {s}"
            );
        }
    });
}

#[test]
fn criterion_7_gait_round_trip() {
    report(7, "gait round trip", || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w = 0.2;
        let alpha_max = 35f64.to_radians();
        for instance in 0..200 {
            let k = 1 + instance % 4;
            let a = Vector2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            let yaw = rng.random_range(-PI..PI);
            let start = ContactEdgeState::new(a, a + w * Vector2::new(yaw.cos(), yaw.sin()));
            let start_vertex = if rng.random_range(0..2) == 0 {
                ContactVertex::A
            } else {
                ContactVertex::B
            };
            let alphas: Vec<f64> = (0..k)
                .map(|_| rng.random_range(-0.8 * alpha_max..0.8 * alpha_max))
                .collect();
            let goal = forward_gait(&start, &alphas, start_vertex, w);
            let generated_norm = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();

            let problem = GaitProblem {
                start,
                goal,
                w,
                alpha_max,
                k_max: k,
            };
            let options = GaitSolverOptions {
                seed: 7 ^ instance as u64,
                multi_starts: 8,
                seeds: vec![SeedCandidate {
                    start_vertex,
                    alphas: alphas.clone(),
                }],
                ..GaitSolverOptions::default()
            };
            let solution = solve_gait_with(&problem, &options)
                .unwrap_or_else(|e| panic!("instance {instance} infeasible: {e}"));

            // Verify closure through the oracle, not the reported residuals.
            let reached = forward_gait(&start, &solution.alphas, solution.start_vertex, w);
            let (pos, ang) = edge_mismatch(&reached, &goal);
            assert!(pos <= 1e-6, "instance {instance}: position residual {pos}");
            assert!(ang <= 1e-6, "instance {instance}: angle residual {ang}");
            assert!(
                solution.norm() <= generated_norm + 1e-6,
                "instance {instance}: norm {} exceeds generated {}",
                solution.norm(),
                generated_norm
            );
        }
    });
}
