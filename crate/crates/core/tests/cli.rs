//! End-to-end tests of the `pivotplan` binary: exit codes, stdout text, and
//! the files a `plan` run leaves behind.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn pivotplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pivotplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("terminated by exit, not signal")
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = pivotplan(&[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn check_accepts_every_fixture() {
    for name in [
        "planar3.json",
        "single7dof.json",
        "dual7dof.json",
        "threestage.json",
        "gait_flat.json",
        "gait_infeasible.json",
    ] {
        let out = pivotplan(&["check", fixture(name).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{name}: {}", stderr(&out));
        assert!(stdout(&out).contains("scenario OK"), "{name}");
    }
}

#[test]
fn check_reports_stage_classification() {
    let out = pivotplan(&["check", fixture("threestage.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("3 stage(s)"));
    assert!(text.contains("stage 1: shared contact"));
    assert!(text.contains("stage 3: shared contact"));
}

#[test]
fn gait_solves_the_flat_instance() {
    let out = pivotplan(&["gait", fixture("gait_flat.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("k = 4"), "{text}");
    assert!(text.contains("start vertex = a"), "{text}");
    assert!(text.contains("alpha_deg"), "{text}");
}

#[test]
fn gait_seed_override_is_accepted() {
    let out = pivotplan(&[
        "gait",
        fixture("gait_flat.json").to_str().unwrap(),
        "--seed",
        "123",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("k = 4"));
}

#[test]
fn gait_reports_infeasibility_with_exit_one() {
    let out = pivotplan(&["gait", fixture("gait_infeasible.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("no feasible gait"));
}

#[test]
fn plan_writes_the_expected_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("plan");
    let out = pivotplan(&[
        "plan",
        fixture("single7dof.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("samples: 46"), "{text}");
    assert!(text.contains("wrote 5 files"), "{text}");

    for name in [
        "object_poses.csv",
        "ee_poses_arm1.csv",
        "joints_arm1.csv",
        "diagnostics.csv",
        "plan_summary.txt",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }

    let poses = std::fs::read_to_string(out_dir.join("object_poses.csv")).unwrap();
    let mut lines = poses.lines();
    assert_eq!(
        lines.next().unwrap(),
        "index,tau,px,py,pz,qw,qx,qy,qz,stage"
    );
    assert_eq!(lines.count(), 46);

    let joints = std::fs::read_to_string(out_dir.join("joints_arm1.csv")).unwrap();
    assert!(joints.starts_with("index,theta1,theta2,theta3,theta4,theta5,theta6,theta7\n"));
}

#[test]
fn plan_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = fixture("gait_flat.json");
    for sub in ["a", "b"] {
        let out = pivotplan(&[
            "plan",
            scenario.to_str().unwrap(),
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for name in ["object_poses.csv", "joints_arm1.csv", "plan_summary.txt"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn plan_on_an_infeasible_gait_exits_one_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("never");
    let out = pivotplan(&[
        "plan",
        fixture("gait_infeasible.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("no feasible gait"));
    assert!(!out_dir.exists());
}

#[test]
fn rmrc_tracks_the_seven_dof_arm() {
    let out = pivotplan(&["rmrc", fixture("single7dof.json").to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("arm 1 (arm1) tracked 46 waypoints"));
}

#[test]
fn rmrc_reports_nonconvergence_with_exit_one() {
    let out = pivotplan(&["rmrc", fixture("planar3.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("did not converge"));
}

#[test]
fn rmrc_rejects_an_out_of_range_arm_index() {
    let out = pivotplan(&[
        "rmrc",
        fixture("single7dof.json").to_str().unwrap(),
        "--arm",
        "3",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("out of range"));
}

#[test]
fn malformed_json_reports_the_parse_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ \"seed\": 1, \"object\": [not json\n").unwrap();
    let out = pivotplan(&["check", path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line"), "{}", stderr(&out));
}

#[test]
fn sclerp_table_starts_and_ends_at_the_given_poses() {
    let out = pivotplan(&[
        "sclerp",
        "--from",
        "0.1,-0.2,0.3,1,0,0,0",
        "--to",
        "0.4,0.1,0.3,0.9238795325112867,0,0,0.3826834323650898",
        "--steps",
        "5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().starts_with("screw:"));

    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(2)
        .map(|line| line.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let expect_first = [0.0, 0.1, -0.2, 0.3, 1.0, 0.0, 0.0, 0.0];
    let expect_last = [
        1.0,
        0.4,
        0.1,
        0.3,
        0.9238795325112867,
        0.0,
        0.0,
        0.3826834323650898,
    ];
    for (value, expect) in rows[0].iter().zip(expect_first) {
        assert!((value - expect).abs() < 1e-12, "first row: {value} vs {expect}");
    }
    for (value, expect) in rows[4].iter().zip(expect_last) {
        assert!((value - expect).abs() < 1e-12, "last row: {value} vs {expect}");
    }
}
