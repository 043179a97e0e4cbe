//! Plan export: CSV trajectory tables plus a human-readable summary.
//!
//! All floating-point values are written with 17 significant digits, so a
//! parsed value is bit-identical to the in-memory one. Exports are
//! deterministic: re-exporting the same plan produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dq::UnitDualQuaternion;
use crate::pipeline::PlanResult;
use crate::screw::ScrewDecomposition;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn pose_fields(pose: &UnitDualQuaternion) -> String {
    let p = pose.translation();
    let q = pose.real();
    format!(
        "{},{},{},{},{},{},{}",
        fmt_f(p.x),
        fmt_f(p.y),
        fmt_f(p.z),
        fmt_f(q.w),
        fmt_f(q.v.x),
        fmt_f(q.v.y),
        fmt_f(q.v.z)
    )
}

fn pose_table(result: &PlanResult, poses: &[UnitDualQuaternion]) -> String {
    let mut out = String::from("index,tau,px,py,pz,qw,qx,qy,qz,stage\n");
    for (i, pose) in poses.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i},{},{},{}",
            fmt_f(result.taus[i]),
            pose_fields(pose),
            result.sample_stages[i]
        );
    }
    out
}

fn joints_table(joints: &[nalgebra::DVector<f64>]) -> String {
    let dof = joints.first().map(|j| j.len()).unwrap_or(0);
    let mut out = String::from("index");
    for j in 1..=dof {
        let _ = write!(out, ",theta{j}");
    }
    out.push('\n');
    for (i, config) in joints.iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in config.iter() {
            let _ = write!(out, ",{}", fmt_f(*v));
        }
        out.push('\n');
    }
    out
}

fn screw_fields(screw: &ScrewDecomposition) -> [f64; 8] {
    match screw {
        ScrewDecomposition::General(s) => [
            s.axis.x, s.axis.y, s.axis.z, s.moment.x, s.moment.y, s.moment.z, s.angle, s.slide,
        ],
        ScrewDecomposition::PureTranslation {
            direction,
            distance,
        } => [
            direction.x,
            direction.y,
            direction.z,
            0.0,
            0.0,
            0.0,
            0.0,
            *distance,
        ],
        ScrewDecomposition::Identity => [0.0; 8],
    }
}

fn diagnostics_table(result: &PlanResult) -> String {
    let mut out = String::from(
        "segment,stage,label,arm,lx,ly,lz,mx,my,mz,theta_rad,d_m,\
         max_pivot_height_m,max_pivot_drift_m,max_task_error,max_iterations\n",
    );
    for seg in &result.diagnostics.segments {
        let screw = screw_fields(&seg.screw);
        let screw_csv: Vec<String> = screw.iter().copied().map(fmt_f).collect();
        if seg.arms.is_empty() {
            let _ = writeln!(
                out,
                "{},{},{},-,{},{},{},0,0",
                seg.segment,
                seg.stage,
                seg.label,
                screw_csv.join(","),
                fmt_f(seg.max_pivot_height),
                fmt_f(seg.max_pivot_drift),
            );
            continue;
        }
        for (a, stats) in seg.arms.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                seg.segment,
                seg.stage,
                seg.label,
                result.arm_names.get(a).map(String::as_str).unwrap_or("-"),
                screw_csv.join(","),
                fmt_f(seg.max_pivot_height),
                fmt_f(seg.max_pivot_drift),
                fmt_f(stats.max_error),
                stats.max_iterations,
            );
        }
    }
    out
}

fn summary_text(result: &PlanResult) -> String {
    let d = &result.diagnostics;
    let mut out = String::new();
    let _ = writeln!(out, "samples: {}", result.object_poses.len());
    let _ = writeln!(
        out,
        "stage markers: [{}]",
        result
            .stage_markers
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    for (stage, case) in &d.cases {
        let _ = writeln!(out, "stage {stage}: {case}");
    }
    for (stage, gait) in &d.gaits {
        let vertex = match gait.start_vertex {
            crate::gait::ContactVertex::A => "a",
            crate::gait::ContactVertex::B => "b",
        };
        let alphas: Vec<String> = gait
            .alphas
            .iter()
            .map(|a| fmt_f(a.to_degrees()))
            .collect();
        let _ = writeln!(
            out,
            "stage {stage} gait: k = {}, start vertex = {vertex}, position residual = {:.3e} m, \
             angle residual = {:.3e} rad",
            gait.k(),
            gait.position_residual,
            gait.angle_residual
        );
        let _ = writeln!(out, "stage {stage} gait alpha_deg: [{}]", alphas.join(", "));
    }
    for seg in &d.segments {
        let screw = screw_fields(&seg.screw);
        let _ = writeln!(
            out,
            "segment {} (stage {}, {}): axis = ({:.6}, {:.6}, {:.6}), moment = ({:.6}, {:.6}, \
             {:.6}), theta = {:.6} rad, d = {:.3e} m, samples {}..{}, pivot height <= {:.3e} m, \
             pivot drift <= {:.3e} m",
            seg.segment,
            seg.stage,
            seg.label,
            screw[0],
            screw[1],
            screw[2],
            screw[3],
            screw[4],
            screw[5],
            screw[6],
            screw[7],
            seg.first_sample,
            seg.last_sample,
            seg.max_pivot_height,
            seg.max_pivot_drift
        );
    }
    for regrasp in &d.regrasps {
        let _ = writeln!(
            out,
            "regrasp: arm {} into stage {} at sample {} ({} iterations)",
            regrasp.arm, regrasp.stage, regrasp.sample_index, regrasp.iterations
        );
    }
    for note in &d.notes {
        let _ = writeln!(out, "note: {note}");
    }
    for (a, name) in result.arm_names.iter().enumerate() {
        let max_error = d
            .segments
            .iter()
            .filter_map(|s| s.arms.get(a))
            .map(|s| s.max_error)
            .fold(0.0, f64::max);
        let max_iterations = d
            .segments
            .iter()
            .filter_map(|s| s.arms.get(a))
            .map(|s| s.max_iterations)
            .max()
            .unwrap_or(0);
        let _ = writeln!(
            out,
            "tracking arm {} ({name}): max waypoint error = {:.3e}, max iterations = {}",
            a + 1,
            max_error,
            max_iterations
        );
    }
    let _ = writeln!(out, "max contact drift: {:.3e} m", d.max_contact_drift);
    let _ = writeln!(out, "max grasp defect: {:.3e}", d.max_grasp_defect);
    out
}

fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "arm".into()
    } else {
        cleaned
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, ExportError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| ExportError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(path)
}

/// Writes the trajectory tables and summary into `out_dir` (created if
/// missing) and returns the written paths.
pub fn export_plan(result: &PlanResult, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, ExportError> {
    let dir = out_dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| ExportError::Io {
        path: dir.display().to_string(),
        source: e,
    })?;
    let mut written = Vec::new();
    written.push(write_file(
        dir,
        "object_poses.csv",
        &pose_table(result, &result.object_poses),
    )?);
    for (a, name) in result.arm_names.iter().enumerate() {
        let stem = sanitize(name);
        written.push(write_file(
            dir,
            &format!("ee_poses_{stem}.csv"),
            &pose_table(result, &result.ee_poses[a]),
        )?);
        if let Some(joints) = result.joint_trajectories.get(a) {
            written.push(write_file(
                dir,
                &format!("joints_{stem}.csv"),
                &joints_table(joints),
            )?);
        }
    }
    written.push(write_file(dir, "diagnostics.csv", &diagnostics_table(result))?);
    written.push(write_file(dir, "plan_summary.txt", &summary_text(result))?);
    Ok(written)
}

/// The summary text alone, as printed by the command-line planner.
pub fn plan_summary(result: &PlanResult) -> String {
    summary_text(result)
}
