//! Command-line entry points: `plan`, `gait`, `sclerp`, `rmrc`, `check`.
//!
//! Exit codes: 0 on success, 1 when planning or tracking fails on a valid
//! input (gait infeasibility, non-convergence, joint limits), 2 for input,
//! schema, and usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use nalgebra::Vector3;

use crate::dq::UnitDualQuaternion;
use crate::export::{export_plan, plan_summary};
use crate::gait::{solve_gait_with, ContactVertex, GaitError, GaitSolverOptions};
use crate::pipeline::{classify_case, gait_problem_of, plan, PlanError, Scenario};
use crate::quat::{Quaternion, UnitQuaternion};
use crate::scenario::{load_scenario, LoadedScenario};
use crate::screw::{extract_screw, sclerp_path, ScrewDecomposition, StepPolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser)]
#[command(
    name = "pivotplan",
    version,
    about = "Plans pivoting and gaiting motions for a cuboid moved by fixed-grasp arms"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the full pipeline on a scenario and export trajectory CSVs.
    Plan {
        scenario: PathBuf,
        /// Output directory for the CSV tables and summary.
        #[arg(short, long)]
        out: PathBuf,
        /// Override the scenario's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the tracking tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Solve only the planar gait between the start and goal poses.
    Gait {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Interpolate between two poses along their constant screw.
    Sclerp {
        /// Start pose as px,py,pz,qw,qx,qy,qz.
        #[arg(long)]
        from: String,
        /// End pose in the same format.
        #[arg(long)]
        to: String,
        /// Number of poses to print, endpoints included.
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
    /// Track the planned end-effector path with a single arm.
    Rmrc {
        scenario: PathBuf,
        /// 1-based arm index.
        #[arg(long, default_value_t = 1)]
        arm: usize,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a scenario file and report its classification.
    Check { scenario: PathBuf },
}

/// Parses arguments and dispatches; returns the process exit code.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                EXIT_OK
            } else {
                let _ = write!(err, "{e}");
                EXIT_INPUT
            };
        }
    };
    match cli.command {
        Cmd::Plan {
            scenario,
            out: out_dir,
            seed,
            tol,
        } => cmd_plan(&scenario, &out_dir, seed, tol, out, err),
        Cmd::Gait { scenario, seed } => cmd_gait(&scenario, seed, out, err),
        Cmd::Sclerp { from, to, steps } => cmd_sclerp(&from, &to, steps, out, err),
        Cmd::Rmrc {
            scenario,
            arm,
            tol,
            seed,
        } => cmd_rmrc(&scenario, arm, tol, seed, out, err),
        Cmd::Check { scenario } => cmd_check(&scenario, out, err),
    }
}

fn load(path: &std::path::Path, err: &mut dyn Write) -> Result<Scenario, i32> {
    match load_scenario(path) {
        Ok(LoadedScenario { scenario, warnings }) => {
            for w in warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            Ok(scenario)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Err(EXIT_INPUT)
        }
    }
}

fn plan_error_code(e: &PlanError) -> i32 {
    match e {
        PlanError::InvalidScenario(_) | PlanError::Geometry(_) => EXIT_INPUT,
        PlanError::Gait(GaitError::InvalidProblem(_)) => EXIT_INPUT,
        PlanError::Gait(GaitError::Infeasible { .. }) => EXIT_INFEASIBLE,
        PlanError::Tracking { .. } => EXIT_INFEASIBLE,
    }
}

fn cmd_plan(
    path: &std::path::Path,
    out_dir: &std::path::Path,
    seed: Option<u64>,
    tol: Option<f64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut scenario = match load(path, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(tol) = tol {
        scenario.track.tol = tol;
    }
    match plan(&scenario) {
        Ok(result) => match export_plan(&result, out_dir) {
            Ok(written) => {
                let _ = write!(out, "{}", plan_summary(&result));
                let _ = writeln!(out, "wrote {} files to {}", written.len(), out_dir.display());
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let PlanError::Tracking { partial, .. } = &e {
                let tracked: usize = partial
                    .joint_trajectories
                    .last()
                    .map(|j| j.len())
                    .unwrap_or(0);
                let _ = writeln!(
                    err,
                    "tracked {tracked} of {} samples before failing",
                    partial.object_poses.len()
                );
            }
            plan_error_code(&e)
        }
    }
}

fn cmd_gait(
    path: &std::path::Path,
    seed: Option<u64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut scenario = match load(path, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    let problem = match gait_problem_of(&scenario) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return plan_error_code(&e);
        }
    };
    let options = GaitSolverOptions {
        seed: scenario.seed,
        ..GaitSolverOptions::default()
    };
    match solve_gait_with(&problem, &options) {
        Ok(solution) => {
            let vertex = match solution.start_vertex {
                ContactVertex::A => "a",
                ContactVertex::B => "b",
            };
            let _ = writeln!(out, "k = {}", solution.k());
            let _ = writeln!(out, "start vertex = {vertex}");
            let alphas: Vec<String> = solution
                .alphas
                .iter()
                .map(|a| format!("{:.4}", a.to_degrees()))
                .collect();
            let _ = writeln!(out, "alpha_deg = [{}]", alphas.join(", "));
            let _ = writeln!(
                out,
                "position residual = {:.3e} m, angle residual = {:.3e} rad",
                solution.position_residual, solution.angle_residual
            );
            EXIT_OK
        }
        Err(e @ GaitError::Infeasible { .. }) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INFEASIBLE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}

fn parse_pose(text: &str) -> Result<UnitDualQuaternion, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 7 {
        return Err(format!(
            "expected 7 comma-separated numbers (px,py,pz,qw,qx,qy,qz), got {}",
            parts.len()
        ));
    }
    let mut values = [0.0; 7];
    for (i, part) in parts.iter().enumerate() {
        values[i] = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("field {}: {e}", i + 1))?;
    }
    let q = Quaternion::from_parts(values[3], values[4], values[5], values[6]);
    if q.norm() == 0.0 {
        return Err("orientation quaternion has zero norm".into());
    }
    let rotation = UnitQuaternion::new_normalize(q).expect("norm checked");
    Ok(UnitDualQuaternion::from_rotation_translation(
        rotation,
        Vector3::new(values[0], values[1], values[2]),
    ))
}

fn cmd_sclerp(
    from: &str,
    to: &str,
    steps: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let (d1, d2) = match (parse_pose(from), parse_pose(to)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => {
            let _ = writeln!(err, "error: --from: {e}");
            return EXIT_INPUT;
        }
        (_, Err(e)) => {
            let _ = writeln!(err, "error: --to: {e}");
            return EXIT_INPUT;
        }
    };
    if steps < 2 {
        let _ = writeln!(err, "error: --steps must be at least 2");
        return EXIT_INPUT;
    }
    match extract_screw(&(d2 * d1.inverse())) {
        ScrewDecomposition::General(s) => {
            let _ = writeln!(
                out,
                "screw: theta = {:.6} deg, slide d = {:.6e} m, axis l = ({:.6}, {:.6}, {:.6}), \
                 moment m = ({:.6}, {:.6}, {:.6})",
                s.angle.to_degrees(),
                s.slide,
                s.axis.x,
                s.axis.y,
                s.axis.z,
                s.moment.x,
                s.moment.y,
                s.moment.z
            );
        }
        ScrewDecomposition::PureTranslation {
            direction,
            distance,
        } => {
            let _ = writeln!(
                out,
                "pure translation: {:.6e} m along ({:.6}, {:.6}, {:.6})",
                distance, direction.x, direction.y, direction.z
            );
        }
        ScrewDecomposition::Identity => {
            let _ = writeln!(out, "identity displacement");
        }
    }
    let path = match sclerp_path(&d1, &d2, StepPolicy::Count(steps)) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let _ = writeln!(out, "tau,px,py,pz,qw,qx,qy,qz");
    let m = path.len() - 1;
    for (i, pose) in path.iter().enumerate() {
        let p = pose.translation();
        let q = pose.real();
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            i as f64 / m as f64,
            p.x,
            p.y,
            p.z,
            q.w,
            q.v.x,
            q.v.y,
            q.v.z
        );
    }
    EXIT_OK
}

fn cmd_rmrc(
    path: &std::path::Path,
    arm: usize,
    tol: Option<f64>,
    seed: Option<u64>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let mut scenario = match load(path, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if arm == 0 || arm > scenario.arms.len() {
        let _ = writeln!(
            err,
            "error: --arm {arm} is out of range; the scenario has {} arms",
            scenario.arms.len()
        );
        return EXIT_INPUT;
    }
    if let Some(tol) = tol {
        scenario.track.tol = tol;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    scenario.arms = vec![scenario.arms[arm - 1].clone()];
    match plan(&scenario) {
        Ok(result) => {
            let waypoints = result.joint_trajectories[0].len();
            let max_error = result
                .diagnostics
                .segments
                .iter()
                .filter_map(|s| s.arms.first())
                .map(|s| s.max_error)
                .fold(0.0, f64::max);
            let max_iterations = result
                .diagnostics
                .segments
                .iter()
                .filter_map(|s| s.arms.first())
                .map(|s| s.max_iterations)
                .max()
                .unwrap_or(0);
            let _ = writeln!(
                out,
                "arm {} ({}) tracked {waypoints} waypoints: max error = {:.3e}, \
                 max iterations = {max_iterations}, regrasps = {}",
                arm,
                result.arm_names[0],
                max_error,
                result.diagnostics.regrasps.len()
            );
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            plan_error_code(&e)
        }
    }
}

fn cmd_check(path: &std::path::Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let scenario = match load(path, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if let Err(e) = scenario.validate() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    let stages = scenario.stage_count();
    let _ = writeln!(
        out,
        "scenario OK: {} arm(s), {} stage(s), object half-extents ({}, {}, {})",
        scenario.arms.len(),
        stages,
        scenario.object.half_extents().x,
        scenario.object.half_extents().y,
        scenario.object.half_extents().z
    );
    for stage in 0..stages {
        let (from, to) = scenario.stage_pose_pair(stage);
        match classify_case(&from, &to, &scenario.object) {
            Ok(case) => {
                let _ = writeln!(out, "stage {}: {case}", stage + 1);
            }
            Err(e) => {
                let _ = writeln!(err, "error: stage {}: {e}", stage + 1);
                return EXIT_INPUT;
            }
        }
    }
    EXIT_OK
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("pivotplan").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn no_arguments_is_a_usage_error() {
        let (code, _, err) = run_cli(&[]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("Usage"));
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run_cli(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("sclerp"));
    }

    #[test]
    fn sclerp_prints_a_translation_table() {
        let (code, out, _) = run_cli(&[
            "sclerp",
            "--from",
            "0,0,0,1,0,0,0",
            "--to",
            "0.1,0,0,1,0,0,0",
            "--steps",
            "3",
        ]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("pure translation"));
        assert_eq!(out.lines().count(), 5);
        let last = out.lines().last().unwrap();
        assert!(last.starts_with("1.0000000000000000e0,1.0000000000000001e-1"));
    }

    #[test]
    fn sclerp_rejects_malformed_poses() {
        let (code, _, err) = run_cli(&["sclerp", "--from", "0,0,0", "--to", "0,0,0,1,0,0,0"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("--from"));
    }

    #[test]
    fn missing_scenario_file_is_an_input_error() {
        let (code, _, err) = run_cli(&["check", "/nonexistent/scenario.json"]);
        assert_eq!(code, EXIT_INPUT);
        assert!(err.contains("cannot read"));
    }
}
