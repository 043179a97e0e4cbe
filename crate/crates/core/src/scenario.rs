//! Scenario files: the JSON schema, loading with field-path diagnostics,
//! and conversion into a validated [`crate::pipeline::Scenario`].
//!
//! Angles cross this boundary in degrees (`*_deg` keys) and are radians
//! everywhere inside. Poses are a position plus a `wxyz` quaternion, which
//! is normalized on load; corrections larger than 1e-6 produce a warning.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dq::UnitDualQuaternion;
use crate::kinematics::{JointLimits, ManipulatorModel, RevoluteJoint, TrackOptions};
use crate::pipeline::{ArmSpec, GaitConfig, Scenario};
use crate::quat::{Quaternion, UnitQuaternion};
use crate::screw::StepPolicy;
use nalgebra::{DVector, Vector3};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Schema { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// On-disk pose: position in meters, orientation quaternion in wxyz order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PoseSpec {
    pub position: [f64; 3],
    pub orientation_wxyz: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub half_extents: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PosesSpec {
    pub start: PoseSpec,
    pub goal: PoseSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub axis: [f64; 3],
    pub point: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArmFileSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub joints: Vec<JointSpec>,
    pub home_pose: PoseSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_pose: Option<PoseSpec>,
    /// Per-joint (min, max) in degrees; omitted joints default to one full
    /// turn either way.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits_deg: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0_deg: Option<Vec<f64>>,
    /// One grasp transform per stage.
    pub grasp_transforms: Vec<PoseSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GaitSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_max_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InterpolationSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dtheta_max_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dd_max_m: Option<f64>,
    /// Fixed pose count per segment; mutually exclusive with the increments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrackingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_gain: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_inner: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angular_scale: Option<f64>,
}

/// Root of the scenario JSON document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub object: ObjectSpec,
    pub poses: PosesSpec,
    /// Intermediate object poses at stage boundaries (regrasp points).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<PoseSpec>>,
    pub arms: Vec<ArmFileSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gait: Option<GaitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<InterpolationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracking: Option<TrackingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tumble_first: Option<bool>,
}

/// A converted scenario plus any normalization warnings collected on load.
#[derive(Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub warnings: Vec<String>,
}

fn pose_from_spec(
    spec: &PoseSpec,
    path: &str,
    warnings: &mut Vec<String>,
) -> Result<UnitDualQuaternion, ScenarioError> {
    let [w, x, y, z] = spec.orientation_wxyz;
    let q = Quaternion::from_parts(w, x, y, z);
    let n = q.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(schema(
            format!("{path}.orientation_wxyz"),
            format!("quaternion norm is {n}, cannot normalize"),
        ));
    }
    if (n - 1.0).abs() > 1e-6 {
        warnings.push(format!(
            "{path}.orientation_wxyz: normalized quaternion with norm {n:.9}"
        ));
    }
    let rotation = UnitQuaternion::new_normalize(q).expect("norm checked above");
    let position = Vector3::new(spec.position[0], spec.position[1], spec.position[2]);
    Ok(UnitDualQuaternion::from_rotation_translation(
        rotation, position,
    ))
}

fn pose_to_spec(pose: &UnitDualQuaternion) -> PoseSpec {
    let q = pose.real();
    let p = pose.translation();
    PoseSpec {
        position: [p.x, p.y, p.z],
        orientation_wxyz: [q.w, q.v.x, q.v.y, q.v.z],
    }
}

fn arm_from_spec(
    spec: &ArmFileSpec,
    index: usize,
    warnings: &mut Vec<String>,
) -> Result<ArmSpec, ScenarioError> {
    let path = format!("arms[{index}]");
    if spec.joints.is_empty() {
        return Err(schema(format!("{path}.joints"), "at least one joint is required"));
    }
    let dof = spec.joints.len();
    let joints: Vec<RevoluteJoint> = spec
        .joints
        .iter()
        .map(|j| RevoluteJoint {
            axis: Vector3::new(j.axis[0], j.axis[1], j.axis[2]),
            point: Vector3::new(j.point[0], j.point[1], j.point[2]),
        })
        .collect();
    let limits = match &spec.limits_deg {
        Some(rows) => {
            if rows.len() != dof {
                return Err(schema(
                    format!("{path}.limits_deg"),
                    format!("{} rows for {dof} joints", rows.len()),
                ));
            }
            rows.iter()
                .map(|[lo, hi]| JointLimits {
                    lower: lo.to_radians(),
                    upper: hi.to_radians(),
                })
                .collect()
        }
        None => vec![
            JointLimits {
                lower: -360.0_f64.to_radians(),
                upper: 360.0_f64.to_radians(),
            };
            dof
        ],
    };
    let weights = match &spec.weights {
        Some(w) => {
            if w.len() != dof {
                return Err(schema(
                    format!("{path}.weights"),
                    format!("{} entries for {dof} joints", w.len()),
                ));
            }
            w.clone()
        }
        None => vec![1.0; dof],
    };
    let home = pose_from_spec(&spec.home_pose, &format!("{path}.home_pose"), warnings)?;
    let model = ManipulatorModel::new(joints, home, limits, weights)
        .map_err(|e| schema(path.clone(), e.to_string()))?;
    let base_pose = match &spec.base_pose {
        Some(p) => pose_from_spec(p, &format!("{path}.base_pose"), warnings)?,
        None => UnitDualQuaternion::identity(),
    };
    let theta0 = match &spec.theta0_deg {
        Some(t) => {
            if t.len() != dof {
                return Err(schema(
                    format!("{path}.theta0_deg"),
                    format!("{} entries for {dof} joints", t.len()),
                ));
            }
            DVector::from_iterator(dof, t.iter().map(|d| d.to_radians()))
        }
        None => DVector::zeros(dof),
    };
    let mut grasps = Vec::with_capacity(spec.grasp_transforms.len());
    for (g, pose) in spec.grasp_transforms.iter().enumerate() {
        grasps.push(pose_from_spec(
            pose,
            &format!("{path}.grasp_transforms[{g}]"),
            warnings,
        )?);
    }
    if grasps.is_empty() {
        return Err(schema(
            format!("{path}.grasp_transforms"),
            "at least one grasp transform is required",
        ));
    }
    Ok(ArmSpec {
        name: spec
            .name
            .clone()
            .unwrap_or_else(|| format!("arm{}", index + 1)),
        model,
        base_pose,
        grasps,
        theta0,
    })
}

fn step_policy_from_spec(spec: &Option<InterpolationSpec>) -> Result<StepPolicy, ScenarioError> {
    let Some(spec) = spec else {
        return Ok(StepPolicy::default());
    };
    let has_increment = spec.dtheta_max_deg.is_some() || spec.dd_max_m.is_some();
    match (spec.steps, has_increment) {
        (Some(_), true) => Err(schema(
            "interpolation",
            "specify either steps or increment bounds, not both",
        )),
        (Some(n), false) => {
            if n < 2 {
                Err(schema("interpolation.steps", "must be at least 2"))
            } else {
                Ok(StepPolicy::Count(n))
            }
        }
        (None, _) => {
            let default = StepPolicy::default();
            let (da, dd) = match default {
                StepPolicy::MaxIncrement {
                    max_angle,
                    max_slide,
                } => (max_angle, max_slide),
                StepPolicy::Count(_) => unreachable!("default policy is increment-bounded"),
            };
            Ok(StepPolicy::MaxIncrement {
                max_angle: spec.dtheta_max_deg.map(f64::to_radians).unwrap_or(da),
                max_slide: spec.dd_max_m.unwrap_or(dd),
            })
        }
    }
}

/// Converts a parsed file into a runnable scenario, validating schema-level
/// constraints and collecting normalization warnings.
pub fn scenario_from_file(file: &ScenarioFile) -> Result<LoadedScenario, ScenarioError> {
    let mut warnings = Vec::new();
    let [hx, hy, hz] = file.object.half_extents;
    let object = crate::gait::CuboidObject::new(hx, hy, hz)
        .map_err(|e| schema("object.half_extents", e.to_string()))?;
    let start_pose = pose_from_spec(&file.poses.start, "poses.start", &mut warnings)?;
    let goal_pose = pose_from_spec(&file.poses.goal, "poses.goal", &mut warnings)?;
    let mut stage_boundaries = Vec::new();
    if let Some(stages) = &file.stages {
        for (i, pose) in stages.iter().enumerate() {
            stage_boundaries.push(pose_from_spec(pose, &format!("stages[{i}]"), &mut warnings)?);
        }
    }
    if file.arms.is_empty() {
        return Err(schema("arms", "at least one arm is required"));
    }
    let mut arms = Vec::with_capacity(file.arms.len());
    for (i, arm) in file.arms.iter().enumerate() {
        arms.push(arm_from_spec(arm, i, &mut warnings)?);
    }
    let gait_spec = file.gait.clone().unwrap_or_default();
    let defaults = GaitConfig::default();
    let gait = GaitConfig {
        beta: gait_spec
            .beta_deg
            .map(f64::to_radians)
            .unwrap_or(defaults.beta),
        alpha_max: gait_spec
            .alpha_max_deg
            .map(f64::to_radians)
            .unwrap_or(defaults.alpha_max),
        k_max: gait_spec.k_max.unwrap_or(defaults.k_max),
    };
    let step_policy = step_policy_from_spec(&file.interpolation)?;
    let tracking = file.tracking.clone().unwrap_or_default();
    let default_track = TrackOptions::default();
    let track = TrackOptions {
        step_gain: tracking.step_gain.unwrap_or(default_track.step_gain),
        tol: tracking.tol.unwrap_or(default_track.tol),
        max_inner: tracking.max_inner.unwrap_or(default_track.max_inner),
        angular_scale: tracking.angular_scale.unwrap_or(default_track.angular_scale),
    };
    let scenario = Scenario {
        object,
        start_pose,
        goal_pose,
        stage_boundaries,
        arms,
        gait,
        step_policy,
        track,
        seed: file.seed.unwrap_or(0),
        tumble_first: file.tumble_first.unwrap_or(true),
    };
    Ok(LoadedScenario { scenario, warnings })
}

/// Parses scenario JSON from a string.
pub fn parse_scenario_str(text: &str) -> Result<LoadedScenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    scenario_from_file(&file)
}

/// Loads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario_str(&text)
}

/// Serializes a scenario file; numeric fields survive a parse round trip
/// bit-exactly (shortest-representation float encoding).
pub fn scenario_to_json(file: &ScenarioFile) -> String {
    serde_json::to_string_pretty(file).expect("scenario schema serializes")
}

/// File-level view of a runnable scenario, for re-export.
pub fn scenario_to_file(scenario: &Scenario) -> ScenarioFile {
    ScenarioFile {
        seed: Some(scenario.seed),
        object: ObjectSpec {
            half_extents: {
                let h = scenario.object.half_extents();
                [h.x, h.y, h.z]
            },
        },
        poses: PosesSpec {
            start: pose_to_spec(&scenario.start_pose),
            goal: pose_to_spec(&scenario.goal_pose),
        },
        stages: if scenario.stage_boundaries.is_empty() {
            None
        } else {
            Some(scenario.stage_boundaries.iter().map(pose_to_spec).collect())
        },
        arms: scenario
            .arms
            .iter()
            .map(|arm| ArmFileSpec {
                name: Some(arm.name.clone()),
                joints: arm
                    .model
                    .joints()
                    .iter()
                    .map(|j| JointSpec {
                        axis: [j.axis.x, j.axis.y, j.axis.z],
                        point: [j.point.x, j.point.y, j.point.z],
                    })
                    .collect(),
                home_pose: pose_to_spec(arm.model.home_ee_pose()),
                base_pose: Some(pose_to_spec(&arm.base_pose)),
                limits_deg: Some(
                    arm.model
                        .limits()
                        .iter()
                        .map(|l| [l.lower.to_degrees(), l.upper.to_degrees()])
                        .collect(),
                ),
                weights: Some(arm.model.weights().iter().copied().collect()),
                theta0_deg: Some(arm.theta0.iter().map(|t| t.to_degrees()).collect()),
                grasp_transforms: arm.grasps.iter().map(pose_to_spec).collect(),
            })
            .collect(),
        gait: Some(GaitSpec {
            beta_deg: Some(scenario.gait.beta.to_degrees()),
            alpha_max_deg: Some(scenario.gait.alpha_max.to_degrees()),
            k_max: Some(scenario.gait.k_max),
        }),
        interpolation: Some(match scenario.step_policy {
            StepPolicy::Count(n) => InterpolationSpec {
                steps: Some(n),
                ..InterpolationSpec::default()
            },
            StepPolicy::MaxIncrement {
                max_angle,
                max_slide,
            } => InterpolationSpec {
                dtheta_max_deg: Some(max_angle.to_degrees()),
                dd_max_m: Some(max_slide),
                steps: None,
            },
        }),
        tracking: Some(TrackingSpec {
            step_gain: Some(scenario.track.step_gain),
            tol: Some(scenario.track.tol),
            max_inner: Some(scenario.track.max_inner),
            angular_scale: Some(scenario.track.angular_scale),
        }),
        tumble_first: Some(scenario.tumble_first),
    }
}
