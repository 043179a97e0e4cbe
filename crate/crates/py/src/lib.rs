//! Python bindings for the pivotplan toolkit.
//!
//! The module mirrors the Rust API with plain Python types at the boundary:
//! poses become `Pose` objects, trajectories become lists, screw and gait
//! results become dicts. All angles are radians and all lengths are meters,
//! matching the Rust crate; only the JSON scenario files use degrees.

use nalgebra::{DVector, Vector2, Vector3};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pivotplan::dq::UnitDualQuaternion;
use pivotplan::gait::{
    forward_gait as forward_gait_rs, solve_gait_with, ContactEdgeState, ContactVertex,
    GaitError, GaitProblem, GaitSolverOptions,
};
use pivotplan::kinematics::{
    forward_kinematics, geometric_jacobian, rmrc_track, solve_to_pose, JointLimits,
    KinematicsError, ManipulatorModel, RevoluteJoint, TrackOptions,
};
use pivotplan::pipeline::{classify_case, plan, PlanError, PlanResult};
use pivotplan::quat::{Quaternion, UnitQuaternion};
use pivotplan::scenario::load_scenario;
use pivotplan::screw::{
    dq_pow, extract_screw, fixed_point_of, sclerp as sclerp_rs, sclerp_path as sclerp_path_rs,
    ScrewDecomposition, StepPolicy,
};

fn v3(t: (f64, f64, f64)) -> Vector3<f64> {
    Vector3::new(t.0, t.1, t.2)
}

fn t3(v: &Vector3<f64>) -> (f64, f64, f64) {
    (v.x, v.y, v.z)
}

fn kin_err(e: KinematicsError) -> PyErr {
    match e {
        KinematicsError::NotConverged { .. }
        | KinematicsError::LimitViolation { .. }
        | KinematicsError::StartTooFar { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn plan_err(e: PlanError) -> PyErr {
    match &e {
        PlanError::Gait(GaitError::Infeasible { .. }) | PlanError::Tracking { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A rigid-body pose (position plus orientation quaternion), stored as a
/// unit dual quaternion.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Pose {
    inner: UnitDualQuaternion,
}

impl Pose {
    fn wrap(inner: UnitDualQuaternion) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl Pose {
    /// Pose(position=(0, 0, 0), orientation=(1, 0, 0, 0))
    ///
    /// `orientation` is a quaternion `(w, x, y, z)`; it is normalized here.
    #[new]
    #[pyo3(signature = (position=(0.0, 0.0, 0.0), orientation=(1.0, 0.0, 0.0, 0.0)))]
    fn new(position: (f64, f64, f64), orientation: (f64, f64, f64, f64)) -> PyResult<Self> {
        let q = Quaternion::from_parts(orientation.0, orientation.1, orientation.2, orientation.3);
        let rotation =
            UnitQuaternion::new_normalize(q).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self::wrap(UnitDualQuaternion::from_rotation_translation(
            rotation,
            v3(position),
        )))
    }

    #[staticmethod]
    fn identity() -> Self {
        Self::wrap(UnitDualQuaternion::identity())
    }

    /// Pure rotation of `angle` about the line through `point` along
    /// `direction`.
    #[staticmethod]
    fn rotation_about_line(
        point: (f64, f64, f64),
        direction: (f64, f64, f64),
        angle: f64,
    ) -> PyResult<Self> {
        UnitDualQuaternion::from_rotation_about_line(&v3(point), &v3(direction), angle)
            .map(Self::wrap)
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn position(&self) -> (f64, f64, f64) {
        t3(&self.inner.translation())
    }

    /// Orientation quaternion as `(w, x, y, z)`.
    #[getter]
    fn orientation(&self) -> (f64, f64, f64, f64) {
        let q = self.inner.real();
        (q.w, q.v.x, q.v.y, q.v.z)
    }

    fn inverse(&self) -> Self {
        Self::wrap(self.inner.inverse())
    }

    fn transform_point(&self, point: (f64, f64, f64)) -> (f64, f64, f64) {
        t3(&self.inner.transform_point(&v3(point)))
    }

    fn transform_vector(&self, vector: (f64, f64, f64)) -> (f64, f64, f64) {
        t3(&self.inner.transform_vector(&v3(vector)))
    }

    /// Dual-quaternion distance to `other`, insensitive to the double-cover
    /// sign.
    fn distance_to(&self, other: Pose) -> f64 {
        self.inner.distance_up_to_sign(&other.inner)
    }

    fn __mul__(&self, rhs: Pose) -> Self {
        Self::wrap(self.inner * rhs.inner)
    }

    fn __repr__(&self) -> String {
        let p = self.inner.translation();
        let q = self.inner.real();
        format!(
            "Pose(position=({:.6}, {:.6}, {:.6}), orientation=({:.6}, {:.6}, {:.6}, {:.6}))",
            p.x, p.y, p.z, q.w, q.v.x, q.v.y, q.v.z
        )
    }
}

/// Interpolates between two poses along their constant screw at `tau` in
/// [0, 1].
#[pyfunction]
fn sclerp(start: Pose, end: Pose, tau: f64) -> Pose {
    Pose::wrap(sclerp_rs(&start.inner, &end.inner, tau))
}

/// Samples the screw path from `start` to `end`.
///
/// Either give `steps` (total pose count, endpoints included) or bounds on
/// the per-step rotation and slide; the defaults bound steps by 2 degrees
/// and 5 mm.
#[pyfunction]
#[pyo3(signature = (start, end, steps=None, max_angle=None, max_slide=None))]
fn sclerp_path(
    start: Pose,
    end: Pose,
    steps: Option<usize>,
    max_angle: Option<f64>,
    max_slide: Option<f64>,
) -> PyResult<Vec<Pose>> {
    let policy = match (steps, max_angle, max_slide) {
        (Some(n), None, None) => StepPolicy::Count(n),
        (None, angle, slide) => {
            let default = StepPolicy::default();
            let (default_angle, default_slide) = match default {
                StepPolicy::MaxIncrement {
                    max_angle,
                    max_slide,
                } => (max_angle, max_slide),
                _ => unreachable!(),
            };
            StepPolicy::MaxIncrement {
                max_angle: angle.unwrap_or(default_angle),
                max_slide: slide.unwrap_or(default_slide),
            }
        }
        _ => {
            return Err(PyValueError::new_err(
                "give either steps or max_angle/max_slide, not both",
            ))
        }
    };
    let path = sclerp_path_rs(&start.inner, &end.inner, policy)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(path.into_iter().map(Pose::wrap).collect())
}

/// The displacement that traverses a fraction `tau` of `pose`'s screw.
#[pyfunction]
fn pose_power(pose: Pose, tau: f64) -> Pose {
    Pose::wrap(dq_pow(&pose.inner, tau))
}

/// Factors a displacement into its screw.
///
/// Returns a dict with `kind` one of `"general"`, `"pure_translation"`, or
/// `"identity"` and the matching fields (`axis`, `moment`, `point_on_axis`,
/// `angle`, `slide` for the general case; `direction` and `distance` for a
/// pure translation).
#[pyfunction]
fn screw_of<'py>(py: Python<'py>, displacement: Pose) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    match extract_screw(&displacement.inner) {
        ScrewDecomposition::General(s) => {
            dict.set_item("kind", "general")?;
            dict.set_item("axis", t3(&s.axis))?;
            dict.set_item("moment", t3(&s.moment))?;
            dict.set_item("point_on_axis", t3(&s.point_on_axis()))?;
            dict.set_item("angle", s.angle)?;
            dict.set_item("slide", s.slide)?;
        }
        ScrewDecomposition::PureTranslation {
            direction,
            distance,
        } => {
            dict.set_item("kind", "pure_translation")?;
            dict.set_item("direction", t3(&direction))?;
            dict.set_item("distance", distance)?;
        }
        ScrewDecomposition::Identity => {
            dict.set_item("kind", "identity")?;
        }
    }
    Ok(dict)
}

/// The point (if any) left fixed by a displacement, nearest the origin.
#[pyfunction]
fn fixed_point(displacement: Pose) -> Option<(f64, f64, f64)> {
    fixed_point_of(&displacement.inner).map(|p| t3(&p))
}

fn parse_vertex(name: &str) -> PyResult<ContactVertex> {
    match name {
        "a" => Ok(ContactVertex::A),
        "b" => Ok(ContactVertex::B),
        _ => Err(PyValueError::new_err(format!(
            "start_vertex must be \"a\" or \"b\", got {name:?}"
        ))),
    }
}

fn vertex_name(v: ContactVertex) -> &'static str {
    match v {
        ContactVertex::A => "a",
        ContactVertex::B => "b",
    }
}

/// Applies pivot angles to a ground edge, alternating the pivot vertex, and
/// returns the resulting edge as `{"a": (x, y), "b": (x, y), "alpha": yaw}`.
#[pyfunction]
#[pyo3(signature = (a, b, alphas, start_vertex="a"))]
fn forward_gait<'py>(
    py: Python<'py>,
    a: (f64, f64),
    b: (f64, f64),
    alphas: Vec<f64>,
    start_vertex: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let start = ContactEdgeState::new(Vector2::new(a.0, a.1), Vector2::new(b.0, b.1));
    let vertex = parse_vertex(start_vertex)?;
    let end = forward_gait_rs(&start, &alphas, vertex, start.edge_length());
    let dict = PyDict::new(py);
    dict.set_item("a", (end.a.x, end.a.y))?;
    dict.set_item("b", (end.b.x, end.b.y))?;
    dict.set_item("alpha", end.alpha)?;
    Ok(dict)
}

/// Solves for pivot angles that walk the ground edge `(a_start, b_start)`
/// onto `(a_goal, b_goal)`.
///
/// Returns `{"alphas", "start_vertex", "k", "norm", "position_residual",
/// "angle_residual"}`; raises `RuntimeError` when no gait with at most
/// `k_max` steps and per-step angles within `alpha_max` closes the motion.
#[pyfunction]
#[pyo3(signature = (a_start, b_start, a_goal, b_goal, alpha_max, k_max, seed=0, multi_starts=32))]
#[allow(clippy::too_many_arguments)]
fn solve_gait<'py>(
    py: Python<'py>,
    a_start: (f64, f64),
    b_start: (f64, f64),
    a_goal: (f64, f64),
    b_goal: (f64, f64),
    alpha_max: f64,
    k_max: usize,
    seed: u64,
    multi_starts: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let start = ContactEdgeState::new(
        Vector2::new(a_start.0, a_start.1),
        Vector2::new(b_start.0, b_start.1),
    );
    let goal = ContactEdgeState::new(
        Vector2::new(a_goal.0, a_goal.1),
        Vector2::new(b_goal.0, b_goal.1),
    );
    let problem = GaitProblem {
        w: start.edge_length(),
        start,
        goal,
        alpha_max,
        k_max,
    };
    let options = GaitSolverOptions {
        seed,
        multi_starts,
        ..GaitSolverOptions::default()
    };
    let solution = match solve_gait_with(&problem, &options) {
        Ok(s) => s,
        Err(e @ GaitError::Infeasible { .. }) => {
            return Err(PyRuntimeError::new_err(e.to_string()))
        }
        Err(e) => return Err(PyValueError::new_err(e.to_string())),
    };
    let dict = PyDict::new(py);
    dict.set_item("alphas", solution.alphas.clone())?;
    dict.set_item("start_vertex", vertex_name(solution.start_vertex))?;
    dict.set_item("k", solution.k())?;
    dict.set_item("norm", solution.norm())?;
    dict.set_item("position_residual", solution.position_residual)?;
    dict.set_item("angle_residual", solution.angle_residual)?;
    Ok(dict)
}

/// A serial chain of revolute joints with a fixed end-effector offset.
#[pyclass(frozen)]
struct Arm {
    model: ManipulatorModel,
}

fn track_options(
    step_gain: f64,
    tol: f64,
    max_inner: usize,
    angular_scale: f64,
) -> TrackOptions {
    TrackOptions {
        step_gain,
        tol,
        max_inner,
        angular_scale,
    }
}

#[pymethods]
impl Arm {
    /// Arm(joints, home, limits, weights=None)
    ///
    /// `joints` is a list of `(axis, point)` pairs at the zero configuration,
    /// `home` the end-effector pose at zero, `limits` a list of
    /// `(lower, upper)` bounds in radians. `weights` penalizes joint motion
    /// in redundancy resolution and defaults to 1 for every joint.
    #[new]
    #[pyo3(signature = (joints, home, limits, weights=None))]
    fn new(
        joints: Vec<((f64, f64, f64), (f64, f64, f64))>,
        home: Pose,
        limits: Vec<(f64, f64)>,
        weights: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let joints: Vec<RevoluteJoint> = joints
            .into_iter()
            .map(|(axis, point)| RevoluteJoint {
                axis: v3(axis),
                point: v3(point),
            })
            .collect();
        let weights = weights.unwrap_or_else(|| vec![1.0; joints.len()]);
        let limits = limits
            .into_iter()
            .map(|(lower, upper)| JointLimits { lower, upper })
            .collect();
        let model =
            ManipulatorModel::new(joints, home.inner, limits, weights).map_err(kin_err)?;
        Ok(Self { model })
    }

    #[getter]
    fn dof(&self) -> usize {
        self.model.dof()
    }

    fn forward_kinematics(&self, theta: Vec<f64>) -> PyResult<Pose> {
        forward_kinematics(&self.model, &DVector::from_vec(theta))
            .map(Pose::wrap)
            .map_err(kin_err)
    }

    /// The 6 x dof geometric Jacobian (linear rows first) as nested lists.
    fn jacobian(&self, theta: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let jac = geometric_jacobian(&self.model, &DVector::from_vec(theta)).map_err(kin_err)?;
        Ok((0..6)
            .map(|r| (0..jac.ncols()).map(|c| jac[(r, c)]).collect())
            .collect())
    }

    /// Tracks the waypoint poses from `theta0` and returns a dict with the
    /// joint trajectory (`"joints"`, one configuration per waypoint), the
    /// task error reached at each waypoint (`"errors"`), and the iteration
    /// counts (`"iterations"`).
    #[pyo3(signature = (theta0, waypoints, step_gain=0.5, tol=1e-8, max_inner=200, angular_scale=1.0))]
    fn track<'py>(
        &self,
        py: Python<'py>,
        theta0: Vec<f64>,
        waypoints: Vec<Pose>,
        step_gain: f64,
        tol: f64,
        max_inner: usize,
        angular_scale: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let poses: Vec<UnitDualQuaternion> = waypoints.iter().map(|p| p.inner).collect();
        let tracked = rmrc_track(
            &self.model,
            &DVector::from_vec(theta0),
            &poses,
            &track_options(step_gain, tol, max_inner, angular_scale),
        )
        .map_err(kin_err)?;
        let joints: Vec<Vec<f64>> = tracked
            .joints
            .iter()
            .map(|j| j.iter().copied().collect())
            .collect();
        let errors: Vec<f64> = tracked.waypoints.iter().map(|w| w.error).collect();
        let iterations: Vec<usize> = tracked.waypoints.iter().map(|w| w.iterations).collect();
        let dict = PyDict::new(py);
        dict.set_item("joints", joints)?;
        dict.set_item("errors", errors)?;
        dict.set_item("iterations", iterations)?;
        Ok(dict)
    }

    /// Moves the arm from `theta0` until the end effector reaches `target`,
    /// returning the final configuration.
    #[pyo3(signature = (theta0, target, step_gain=0.5, tol=1e-8, max_inner=200, angular_scale=1.0))]
    fn solve_to_pose(
        &self,
        theta0: Vec<f64>,
        target: Pose,
        step_gain: f64,
        tol: f64,
        max_inner: usize,
        angular_scale: f64,
    ) -> PyResult<Vec<f64>> {
        let (theta, _) = solve_to_pose(
            &self.model,
            &DVector::from_vec(theta0),
            &target.inner,
            &track_options(step_gain, tol, max_inner, angular_scale),
        )
        .map_err(kin_err)?;
        Ok(theta.iter().copied().collect())
    }
}

fn plan_dict<'py>(py: Python<'py>, result: &PlanResult) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    dict.set_item("arm_names", result.arm_names.clone())?;
    dict.set_item(
        "object_poses",
        result
            .object_poses
            .iter()
            .map(|p| Pose::wrap(*p))
            .collect::<Vec<_>>(),
    )?;
    dict.set_item("taus", result.taus.clone())?;
    dict.set_item("sample_stages", result.sample_stages.clone())?;
    dict.set_item("stage_markers", result.stage_markers.clone())?;
    let ee: Vec<Vec<Pose>> = result
        .ee_poses
        .iter()
        .map(|arm| arm.iter().map(|p| Pose::wrap(*p)).collect())
        .collect();
    dict.set_item("ee_poses", ee)?;
    let joints: Vec<Vec<Vec<f64>>> = result
        .joint_trajectories
        .iter()
        .map(|arm| arm.iter().map(|j| j.iter().copied().collect()).collect())
        .collect();
    dict.set_item("joints", joints)?;
    dict.set_item("regrasps", result.diagnostics.regrasps.len())?;
    Ok(dict)
}

/// Runs the full pipeline on a scenario JSON file.
///
/// Returns a dict with the object pose samples, per-arm end-effector poses
/// and joint trajectories, stage markers, and the regrasp count. Raises
/// `ValueError` for bad input and `RuntimeError` when planning or tracking
/// fails on a valid scenario.
#[pyfunction]
fn plan_file<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyDict>> {
    let loaded = load_scenario(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let result = plan(&loaded.scenario).map_err(plan_err)?;
    plan_dict(py, &result)
}

/// Validates a scenario file and returns the manipulation case of each
/// stage as a string.
#[pyfunction]
fn check_file(path: &str) -> PyResult<Vec<String>> {
    let loaded = load_scenario(path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let scenario = loaded.scenario;
    scenario.validate().map_err(plan_err)?;
    let mut cases = Vec::new();
    for stage in 0..scenario.stage_count() {
        let (from, to) = scenario.stage_pose_pair(stage);
        let case = classify_case(&from, &to, &scenario.object)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        cases.push(case.to_string());
    }
    Ok(cases)
}

#[pymodule]
fn pivotplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Pose>()?;
    m.add_class::<Arm>()?;
    m.add_function(wrap_pyfunction!(sclerp, m)?)?;
    m.add_function(wrap_pyfunction!(sclerp_path, m)?)?;
    m.add_function(wrap_pyfunction!(pose_power, m)?)?;
    m.add_function(wrap_pyfunction!(screw_of, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(forward_gait, m)?)?;
    m.add_function(wrap_pyfunction!(solve_gait, m)?)?;
    m.add_function(wrap_pyfunction!(plan_file, m)?)?;
    m.add_function(wrap_pyfunction!(check_file, m)?)?;
    Ok(())
}
