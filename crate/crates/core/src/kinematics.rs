//! Serial-arm kinematics and resolved-motion rate control.
//!
//! Arms are modeled as chains of revolute joints, each given by its axis
//! line in the arm base frame at the zero configuration. Forward kinematics
//! is the product of the joint screw displacements times the home pose of
//! the end effector. Task-space errors are expressed as 6-vectors
//! `(linear; angular)` referenced at the current end-effector position,
//! matching the geometric Jacobian built here, and joint trajectories are
//! obtained by iterating `theta += gain * J_pinv * error` per waypoint.

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use thiserror::Error;

use crate::dq::UnitDualQuaternion;
use crate::screw::{extract_screw, sclerp_path, ScrewDecomposition, StepPolicy};

/// Revolute joint axis in the arm base frame at zero configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevoluteJoint {
    /// Unit direction of the rotation axis.
    pub axis: Vector3<f64>,
    /// Any point on the axis line.
    pub point: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
}

impl JointLimits {
    pub fn contains(&self, angle: f64) -> bool {
        self.lower <= angle && angle <= self.upper
    }
}

/// Kinematic description of one arm.
#[derive(Debug, Clone)]
pub struct ManipulatorModel {
    joints: Vec<RevoluteJoint>,
    home_ee_pose: UnitDualQuaternion,
    limits: Vec<JointLimits>,
    weights: Vec<f64>,
}

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("invalid manipulator model: {0}")]
    InvalidModel(String),

    #[error("configuration has {got} joint angles but the model has {expected} joints")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("step gain must lie in (0, 1], got {0}")]
    InvalidStepGain(f64),

    #[error(
        "initial configuration is too far from the first waypoint: task error {error:.3e} \
         exceeds {allowed:.3e}"
    )]
    StartTooFar { error: f64, allowed: f64 },

    #[error(
        "waypoint {index} did not converge within {iterations} iterations (task error {error:.3e})"
    )]
    NotConverged {
        index: usize,
        iterations: usize,
        error: f64,
        partial: TrackedTrajectory,
    },

    #[error(
        "joint {joint} leaves its limits at waypoint {index}: {value:.4} rad not in \
         [{lower:.4}, {upper:.4}]"
    )]
    LimitViolation {
        index: usize,
        joint: usize,
        value: f64,
        lower: f64,
        upper: f64,
        partial: TrackedTrajectory,
    },
}

impl ManipulatorModel {
    /// Validates and normalizes the chain description. Axis directions are
    /// normalized here so everything downstream can assume unit axes.
    pub fn new(
        joints: Vec<RevoluteJoint>,
        home_ee_pose: UnitDualQuaternion,
        limits: Vec<JointLimits>,
        weights: Vec<f64>,
    ) -> Result<Self, KinematicsError> {
        if joints.is_empty() {
            return Err(KinematicsError::InvalidModel(
                "an arm needs at least one joint".into(),
            ));
        }
        if limits.len() != joints.len() || weights.len() != joints.len() {
            return Err(KinematicsError::InvalidModel(format!(
                "joints ({}), limits ({}) and weights ({}) must have equal lengths",
                joints.len(),
                limits.len(),
                weights.len()
            )));
        }
        let mut joints = joints;
        for (i, joint) in joints.iter_mut().enumerate() {
            let n = joint.axis.norm();
            if n < 1e-12 {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {i} has a zero axis"
                )));
            }
            joint.axis /= n;
        }
        for (i, l) in limits.iter().enumerate() {
            if !(l.lower < l.upper) {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {i} limits [{}, {}] are not an interval",
                    l.lower, l.upper
                )));
            }
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {i} weight {w} must be positive"
                )));
            }
        }
        Ok(Self {
            joints,
            home_ee_pose,
            limits,
            weights,
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[RevoluteJoint] {
        &self.joints
    }

    pub fn limits(&self) -> &[JointLimits] {
        &self.limits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn home_ee_pose(&self) -> &UnitDualQuaternion {
        &self.home_ee_pose
    }

    pub fn within_limits(&self, theta: &DVector<f64>) -> Option<usize> {
        (0..self.dof()).find(|&i| !self.limits[i].contains(theta[i]))
    }

    fn check_dim(&self, theta: &DVector<f64>) -> Result<(), KinematicsError> {
        if theta.len() != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                got: theta.len(),
            });
        }
        Ok(())
    }
}

fn joint_displacement(joint: &RevoluteJoint, angle: f64) -> UnitDualQuaternion {
    UnitDualQuaternion::from_rotation_about_line(&joint.point, &joint.axis, angle)
        .expect("joint axes are unit by model validation")
}

/// End-effector pose in the arm base frame: the product of the joint screw
/// displacements applied to the home pose.
pub fn forward_kinematics(
    model: &ManipulatorModel,
    theta: &DVector<f64>,
) -> Result<UnitDualQuaternion, KinematicsError> {
    model.check_dim(theta)?;
    let mut acc = UnitDualQuaternion::identity();
    for (joint, &angle) in model.joints.iter().zip(theta.iter()) {
        acc = acc * joint_displacement(joint, angle);
    }
    Ok(acc * model.home_ee_pose)
}

/// Geometric Jacobian, 6 x dof. Column `j` is
/// `(omega_j x (p_ee - p_j); omega_j)` with `omega_j` the world direction of
/// axis `j` and `p_j` a point on it, both at the current configuration; rows
/// 0..3 are linear, rows 3..6 angular. This references linear velocity at
/// the current end-effector position, the same convention as
/// [`pose_difference`].
pub fn geometric_jacobian(
    model: &ManipulatorModel,
    theta: &DVector<f64>,
) -> Result<DMatrix<f64>, KinematicsError> {
    model.check_dim(theta)?;
    let dof = model.dof();
    let mut axes = Vec::with_capacity(dof);
    let mut points = Vec::with_capacity(dof);
    let mut prefix = UnitDualQuaternion::identity();
    for (joint, &angle) in model.joints.iter().zip(theta.iter()) {
        axes.push(prefix.transform_vector(&joint.axis));
        points.push(prefix.transform_point(&joint.point));
        prefix = prefix * joint_displacement(joint, angle);
    }
    let p_ee = (prefix * model.home_ee_pose).translation();

    let mut jac = DMatrix::zeros(6, dof);
    for j in 0..dof {
        let linear = axes[j].cross(&(p_ee - points[j]));
        for r in 0..3 {
            jac[(r, j)] = linear[r];
            jac[(r + 3, j)] = axes[j][r];
        }
    }
    Ok(jac)
}

/// Task-space error 6-vector `(linear; angular)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskError(pub Vector6<f64>);

impl TaskError {
    pub fn zero() -> Self {
        Self(Vector6::zeros())
    }

    pub fn linear(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into()
    }

    pub fn angular(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into()
    }

    /// Mixed norm with angular components weighted by `angular_scale`
    /// (meters per radian), so one scalar can gate convergence.
    pub fn scaled_norm(&self, angular_scale: f64) -> f64 {
        (self.linear().norm_squared() + (angular_scale * self.angular()).norm_squared()).sqrt()
    }
}

/// Displacement from `current` to `target` written as a twist referenced at
/// the current end-effector position.
///
/// The screw of `target * current^-1` has angle `theta` about the line
/// `(l, m)` with slide `d`; the angular part is `theta l` and the linear
/// part `theta m + d l + (theta l) x p_current`, i.e. the velocity the point
/// currently at the end effector would have under a unit-time traversal of
/// the screw. Driving this to zero with the Jacobian above is consistent:
/// both reference linear motion at the same point.
pub fn pose_difference(current: &UnitDualQuaternion, target: &UnitDualQuaternion) -> TaskError {
    let relative = *target * current.inverse();
    match extract_screw(&relative) {
        ScrewDecomposition::Identity => TaskError::zero(),
        ScrewDecomposition::PureTranslation {
            direction,
            distance,
        } => {
            let v = distance * direction;
            TaskError(Vector6::new(v.x, v.y, v.z, 0.0, 0.0, 0.0))
        }
        ScrewDecomposition::General(s) => {
            let omega = s.angle * s.axis;
            let v = s.angle * s.moment + s.slide * s.axis + omega.cross(&current.translation());
            TaskError(Vector6::new(v.x, v.y, v.z, omega.x, omega.y, omega.z))
        }
    }
}

/// Singular values below this trigger damping in [`weighted_pseudoinverse`].
pub const DAMPING_SINGULAR_THRESHOLD: f64 = 1e-4;
/// Damping factor added when near a singularity.
pub const DAMPING_LAMBDA: f64 = 1e-4;

/// Weighted, selectively damped pseudoinverse
/// `W^-1 J^T (J W^-1 J^T + lambda^2 I)^-1`.
///
/// `lambda` is zero away from singularities and `DAMPING_LAMBDA` when the
/// smallest singular value of `J` drops below `DAMPING_SINGULAR_THRESHOLD`,
/// or structurally when the arm has fewer than six joints (then
/// `J W^-1 J^T` is rank-deficient for every configuration).
pub fn weighted_pseudoinverse(
    jacobian: &DMatrix<f64>,
    weights: &[f64],
) -> Result<DMatrix<f64>, KinematicsError> {
    let dof = jacobian.ncols();
    if weights.len() != dof || jacobian.nrows() != 6 {
        return Err(KinematicsError::DimensionMismatch {
            expected: dof,
            got: weights.len(),
        });
    }
    let w_inv = DMatrix::from_diagonal(&DVector::from_iterator(
        dof,
        weights.iter().map(|w| 1.0 / w),
    ));
    let jt = jacobian.transpose();
    let mut a = jacobian * &w_inv * &jt;

    let sigma_min = jacobian
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(f64::INFINITY, |acc, &s| acc.min(s));
    if sigma_min < DAMPING_SINGULAR_THRESHOLD || dof < 6 {
        for i in 0..6 {
            a[(i, i)] += DAMPING_LAMBDA * DAMPING_LAMBDA;
        }
    }
    let a_inv = a.try_inverse().ok_or_else(|| {
        KinematicsError::InvalidModel("task-space matrix is singular even after damping".into())
    })?;
    Ok(w_inv * jt * a_inv)
}

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    /// Fraction of the task error applied per iteration.
    pub step_gain: f64,
    /// Convergence threshold on the scaled task-error norm.
    pub tol: f64,
    /// Iteration budget per waypoint.
    pub max_inner: usize,
    /// Meters-per-radian weight for the angular error in the scalar norm.
    pub angular_scale: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            step_gain: 0.5,
            tol: 1e-8,
            max_inner: 200,
            angular_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointDiagnostics {
    pub iterations: usize,
    pub error: f64,
}

/// Joint path through a waypoint sequence, one configuration per waypoint.
#[derive(Debug, Clone, Default)]
pub struct TrackedTrajectory {
    pub joints: Vec<DVector<f64>>,
    pub waypoints: Vec<WaypointDiagnostics>,
}

/// Tracks a sequence of end-effector waypoints (in the arm base frame) with
/// resolved-motion rate control, starting from `theta0`.
///
/// Each waypoint is converged before moving to the next, so the returned
/// trajectory has exactly one configuration per waypoint; the first entry is
/// `theta0` polished onto the first waypoint. The start must already be on
/// the path: its task error may not exceed ten times the convergence
/// tolerance, since rate control corrects small deviations but is not a
/// global inverse-kinematics search.
pub fn rmrc_track(
    model: &ManipulatorModel,
    theta0: &DVector<f64>,
    waypoints: &[UnitDualQuaternion],
    options: &TrackOptions,
) -> Result<TrackedTrajectory, KinematicsError> {
    model.check_dim(theta0)?;
    if !(options.step_gain > 0.0 && options.step_gain <= 1.0) {
        return Err(KinematicsError::InvalidStepGain(options.step_gain));
    }
    let mut result = TrackedTrajectory::default();
    let Some(first) = waypoints.first() else {
        return Ok(result);
    };

    let start_error =
        pose_difference(&forward_kinematics(model, theta0)?, first).scaled_norm(options.angular_scale);
    let allowed = 10.0 * options.tol;
    if start_error > allowed {
        return Err(KinematicsError::StartTooFar {
            error: start_error,
            allowed,
        });
    }

    let mut theta = theta0.clone();
    for (index, target) in waypoints.iter().enumerate() {
        let mut iterations = 0;
        let mut error;
        loop {
            let current = forward_kinematics(model, &theta)?;
            let task = pose_difference(&current, target);
            error = task.scaled_norm(options.angular_scale);
            if error <= options.tol {
                break;
            }
            if iterations >= options.max_inner {
                return Err(KinematicsError::NotConverged {
                    index,
                    iterations,
                    error,
                    partial: result,
                });
            }
            let jac = geometric_jacobian(model, &theta)?;
            let pinv = weighted_pseudoinverse(&jac, &model.weights)?;
            theta += options.step_gain * (pinv * task.0);
            iterations += 1;
        }
        if let Some(joint) = model.within_limits(&theta) {
            return Err(KinematicsError::LimitViolation {
                index,
                joint,
                value: theta[joint],
                lower: model.limits[joint].lower,
                upper: model.limits[joint].upper,
                partial: result,
            });
        }
        result.joints.push(theta.clone());
        result.waypoints.push(WaypointDiagnostics { iterations, error });
    }
    Ok(result)
}

/// Moves the arm from `theta_from` until the end effector reaches `target`
/// (base frame), by tracking an interpolated path to it. Used for regrasp
/// transitions, where the intermediate motion is free-space and not part of
/// the planned object motion.
pub fn solve_to_pose(
    model: &ManipulatorModel,
    theta_from: &DVector<f64>,
    target: &UnitDualQuaternion,
    options: &TrackOptions,
) -> Result<(DVector<f64>, usize), KinematicsError> {
    let start = forward_kinematics(model, theta_from)?;
    let path = sclerp_path(&start, target, StepPolicy::default())
        .expect("default step policy is valid");
    let tracked = rmrc_track(model, theta_from, &path, options)?;
    let iterations = tracked.waypoints.iter().map(|w| w.iterations).sum();
    let theta = tracked
        .joints
        .last()
        .cloned()
        .unwrap_or_else(|| theta_from.clone());
    Ok((theta, iterations))
}
