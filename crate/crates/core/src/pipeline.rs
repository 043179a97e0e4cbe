//! End-to-end planning: classify how the start and goal poses relate, build
//! the chain of intermediate poses (each consecutive pair connected by one
//! constant-screw pivoting move), sample every move on a shared `tau` grid,
//! and track the resulting end-effector paths with each arm.
//!
//! The support surface is the world plane `z = 0`. Three situations are
//! distinguished: the poses already share a grounded contact vertex or edge
//! (a single pivot connects them), the same object face is down in both (the
//! object gaits across the plane), or different faces are down (the object
//! first tumbles over bottom edges to change face, then gaits).

use nalgebra::{DVector, Vector3};
use thiserror::Error;

use crate::dq::UnitDualQuaternion;
use crate::gait::{
    edge_contact_pose, edge_state_of_pose, gait_intermediate_poses, lean_angle_gamma,
    solve_gait_with, ContactEdgeAxis, ContactVertex, CuboidObject, GaitError, GaitPoseParams,
    GaitProblem, GaitSolution, GaitSolverOptions,
};
use crate::kinematics::{
    rmrc_track, solve_to_pose, KinematicsError, ManipulatorModel, TrackOptions,
    TrackedTrajectory,
};
use crate::quat::UnitQuaternion;
use crate::screw::{extract_screw, fixed_point_of, sclerp_path, ScrewDecomposition, StepPolicy};
use crate::tol;
use crate::Error;

/// World distance under which two grounded vertices count as the same
/// contact point when classifying a pose pair.
const CONTACT_MATCH_EPS: f64 = 1e-6;

/// Body face of the cuboid, named by its outward normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    NegX,
    PosX,
    NegY,
    PosY,
    NegZ,
    PosZ,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::NegX,
        Face::PosX,
        Face::NegY,
        Face::PosY,
        Face::NegZ,
        Face::PosZ,
    ];

    fn axis_index(self) -> usize {
        match self {
            Face::NegX | Face::PosX => 0,
            Face::NegY | Face::PosY => 1,
            Face::NegZ | Face::PosZ => 2,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Face::PosX | Face::PosY | Face::PosZ => 1.0,
            _ => -1.0,
        }
    }

    pub fn normal(self) -> Vector3<f64> {
        let mut n = Vector3::zeros();
        n[self.axis_index()] = self.sign();
        n
    }

    pub fn opposite(self) -> Face {
        match self {
            Face::NegX => Face::PosX,
            Face::PosX => Face::NegX,
            Face::NegY => Face::PosY,
            Face::PosY => Face::NegY,
            Face::NegZ => Face::PosZ,
            Face::PosZ => Face::NegZ,
        }
    }

    pub fn is_adjacent(self, other: Face) -> bool {
        self != other && self != other.opposite()
    }

    /// Body rotation that maps the gait-canonical body frame (object resting
    /// on its `-z` face) onto a frame where this face is the resting one:
    /// it sends the canonical down direction `-z` to this face's normal.
    fn relabel(self) -> UnitQuaternion {
        use std::f64::consts::{FRAC_PI_2, PI};
        let (axis, angle): (Vector3<f64>, f64) = match self {
            Face::NegZ => (Vector3::x(), 0.0),
            Face::PosZ => (Vector3::y(), PI),
            Face::NegX => (Vector3::y(), FRAC_PI_2),
            Face::PosX => (Vector3::y(), -FRAC_PI_2),
            Face::NegY => (Vector3::x(), -FRAC_PI_2),
            Face::PosY => (Vector3::x(), FRAC_PI_2),
        };
        UnitQuaternion::from_axis_angle(&axis, angle).expect("axes are unit")
    }

    /// Half-extents of the object as seen from the relabeled frame in which
    /// this face is the `-z` face.
    fn canonical_half_extents(self, h: Vector3<f64>) -> (f64, f64, f64) {
        match self.axis_index() {
            0 => (h.z, h.y, h.x),
            1 => (h.x, h.z, h.y),
            _ => (h.x, h.y, h.z),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Face::NegX => "-x",
            Face::PosX => "+x",
            Face::NegY => "-y",
            Face::PosY => "+y",
            Face::NegZ => "-z",
            Face::PosZ => "+z",
        }
    }
}

/// How the start and goal poses relate on the support plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManipulationCase {
    /// A grounded vertex or edge occupies the same world location in both
    /// poses; one pivoting move about it suffices.
    SharedContact,
    /// The same face is down in both poses but no contact is shared; the
    /// object gaits.
    SameFace,
    /// Different faces are down; the object tumbles to change face, then
    /// gaits.
    FaceChange,
}

impl std::fmt::Display for ManipulationCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ManipulationCase::SharedContact => "shared contact",
            ManipulationCase::SameFace => "same face",
            ManipulationCase::FaceChange => "face change",
        })
    }
}

/// The object feature a segment pivots about, in body coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PivotContact {
    Vertex(Vector3<f64>),
    Edge(Vector3<f64>, Vector3<f64>),
}

impl PivotContact {
    fn points(&self) -> Vec<Vector3<f64>> {
        match self {
            PivotContact::Vertex(v) => vec![*v],
            PivotContact::Edge(a, b) => vec![*a, *b],
        }
    }
}

/// One constant-screw move of the object.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPlan {
    pub from: UnitDualQuaternion,
    pub to: UnitDualQuaternion,
    /// 0-based stage this segment belongs to.
    pub stage: usize,
    pub pivot: PivotContact,
    pub label: &'static str,
}

/// One arm: kinematic model, fixed base pose in the world frame, one grasp
/// transform per stage (end-effector pose = object pose * grasp^-1), and the
/// joint configuration the arm starts from.
#[derive(Debug, Clone)]
pub struct ArmSpec {
    pub name: String,
    pub model: ManipulatorModel,
    pub base_pose: UnitDualQuaternion,
    pub grasps: Vec<UnitDualQuaternion>,
    pub theta0: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitConfig {
    /// Tilt angle that frees the unloaded vertex during a gait step, radians.
    pub beta: f64,
    /// Per-step pivot angle bound, radians.
    pub alpha_max: f64,
    /// Largest gait step count to try.
    pub k_max: usize,
}

impl Default for GaitConfig {
    fn default() -> Self {
        Self {
            beta: 10.0_f64.to_radians(),
            alpha_max: 35.0_f64.to_radians(),
            k_max: 10,
        }
    }
}

/// A fully specified planning instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub object: CuboidObject,
    pub start_pose: UnitDualQuaternion,
    pub goal_pose: UnitDualQuaternion,
    /// Intermediate object poses at which one stage ends and the next
    /// begins; grasp transforms switch at these boundaries.
    pub stage_boundaries: Vec<UnitDualQuaternion>,
    pub arms: Vec<ArmSpec>,
    pub gait: GaitConfig,
    pub step_policy: StepPolicy,
    pub track: TrackOptions,
    /// RNG seed for the gait solver multi-starts.
    pub seed: u64,
    /// For face changes: tumble onto the goal's face first and gait there
    /// (the default), or gait on the start's face and tumble at the end.
    pub tumble_first: bool,
}

impl Scenario {
    pub fn stage_count(&self) -> usize {
        self.stage_boundaries.len() + 1
    }

    /// Start and end object pose of a 0-based stage.
    pub fn stage_pose_pair(&self, stage: usize) -> (UnitDualQuaternion, UnitDualQuaternion) {
        let from = if stage == 0 {
            self.start_pose
        } else {
            self.stage_boundaries[stage - 1]
        };
        let to = if stage == self.stage_count() - 1 {
            self.goal_pose
        } else {
            self.stage_boundaries[stage]
        };
        (from, to)
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.arms.is_empty() {
            return Err(PlanError::InvalidScenario("at least one arm is required".into()));
        }
        let stages = self.stage_count();
        for (i, arm) in self.arms.iter().enumerate() {
            if arm.grasps.len() != stages {
                return Err(PlanError::InvalidScenario(format!(
                    "arm {} ({}) supplies {} grasp transforms for {} stages",
                    i + 1,
                    arm.name,
                    arm.grasps.len(),
                    stages
                )));
            }
            if arm.theta0.len() != arm.model.dof() {
                return Err(PlanError::InvalidScenario(format!(
                    "arm {} ({}) theta0 has {} entries for {} joints",
                    i + 1,
                    arm.name,
                    arm.theta0.len(),
                    arm.model.dof()
                )));
            }
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(self.gait.beta > 0.0 && self.gait.beta < half_pi) {
            return Err(PlanError::InvalidScenario(format!(
                "gait tilt angle beta = {} must lie in (0, pi/2)",
                self.gait.beta
            )));
        }
        if !(self.gait.alpha_max > 0.0 && self.gait.alpha_max <= half_pi) {
            return Err(PlanError::InvalidScenario(format!(
                "alpha_max = {} must lie in (0, pi/2]",
                self.gait.alpha_max
            )));
        }
        if self.gait.k_max == 0 {
            return Err(PlanError::InvalidScenario("k_max must be at least 1".into()));
        }
        match self.step_policy {
            StepPolicy::Count(n) if n < 2 => {
                return Err(PlanError::InvalidScenario(
                    "interpolation step count must be at least 2".into(),
                ));
            }
            StepPolicy::MaxIncrement { max_angle, max_slide }
                if !(max_angle > 0.0 && max_slide > 0.0) =>
            {
                return Err(PlanError::InvalidScenario(
                    "interpolation increments must be positive".into(),
                ));
            }
            _ => {}
        }
        if !(self.track.tol > 0.0) {
            return Err(PlanError::InvalidScenario("tracking tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Geometry(#[from] Error),

    #[error(transparent)]
    Gait(#[from] GaitError),

    #[error("arm {arm} ({name}) failed to track stage {stage}: {source}")]
    Tracking {
        /// 1-based arm index.
        arm: usize,
        name: String,
        /// 1-based stage index.
        stage: usize,
        source: KinematicsError,
        /// Object path and every completed arm trajectory up to the failure.
        partial: Box<PlanResult>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSegmentStats {
    pub max_error: f64,
    pub max_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentDiagnostics {
    /// 1-based segment index.
    pub segment: usize,
    /// 1-based stage index.
    pub stage: usize,
    pub label: &'static str,
    /// Screw decomposition of the segment's relative displacement.
    pub screw: ScrewDecomposition,
    pub first_sample: usize,
    pub last_sample: usize,
    /// Largest distance of any pivot point from the support plane across
    /// the segment's samples, meters.
    pub max_pivot_height: f64,
    /// Largest in-plane wander of any pivot point from its initial location,
    /// meters.
    pub max_pivot_drift: f64,
    /// Per-arm tracking stats over this segment's samples.
    pub arms: Vec<ArmSegmentStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegraspEvent {
    /// 1-based arm index.
    pub arm: usize,
    /// 1-based stage the arm regrasps into.
    pub stage: usize,
    /// Sample index at which the object holds still for the regrasp.
    pub sample_index: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDiagnostics {
    /// Classification per 1-based stage.
    pub cases: Vec<(usize, ManipulationCase)>,
    /// Gait solutions per 1-based stage, for stages that gaited.
    pub gaits: Vec<(usize, GaitSolution)>,
    pub segments: Vec<SegmentDiagnostics>,
    pub regrasps: Vec<RegraspEvent>,
    /// Free-form remarks (two-tumble reorientations and similar).
    pub notes: Vec<String>,
    /// Worst pivot height or in-plane wander over all segments, meters.
    pub max_contact_drift: f64,
    /// Worst defect of end-effector pose * grasp against the object pose.
    pub max_grasp_defect: f64,
}

/// The complete plan: all sequences share one sample index set.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    /// Arm names in scenario order, labeling the per-arm sequences.
    pub arm_names: Vec<String>,
    pub object_poses: Vec<UnitDualQuaternion>,
    /// Segment-local interpolation parameter of each sample.
    pub taus: Vec<f64>,
    /// 1-based stage of each sample; a stage-boundary sample belongs to the
    /// earlier stage.
    pub sample_stages: Vec<usize>,
    /// World-frame end-effector poses, `[arm][sample]`.
    pub ee_poses: Vec<Vec<UnitDualQuaternion>>,
    /// Joint configurations, `[arm][sample]`.
    pub joint_trajectories: Vec<Vec<DVector<f64>>>,
    /// Sample indices where the pivot axis or a grasp transform changes.
    pub stage_markers: Vec<usize>,
    pub diagnostics: PlanDiagnostics,
}

/// Grounded vertices of a pose: body and world coordinates of every vertex
/// within [`tol::GROUND_EPS`] of the support plane.
fn grounded_vertices(
    obj: &CuboidObject,
    pose: &UnitDualQuaternion,
) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    obj.vertices()
        .iter()
        .filter_map(|v| {
            let w = pose.transform_point(v);
            (w.z.abs() <= tol::GROUND_EPS).then_some((*v, w))
        })
        .collect()
}

/// Body vertices grounded in both poses at the same world location.
fn shared_contacts(
    obj: &CuboidObject,
    c_o: &UnitDualQuaternion,
    c_f: &UnitDualQuaternion,
) -> Vec<Vector3<f64>> {
    let start = grounded_vertices(obj, c_o);
    let goal = grounded_vertices(obj, c_f);
    start
        .iter()
        .filter_map(|(body, world)| {
            goal.iter()
                .any(|(gb, gw)| (gb - body).norm() < 1e-12 && (gw - world).norm() <= CONTACT_MATCH_EPS)
                .then_some(*body)
        })
        .collect()
}

/// The face resting flat on the support plane (all four of its vertices
/// within [`tol::GROUND_EPS`] of it).
pub fn down_face(obj: &CuboidObject, pose: &UnitDualQuaternion) -> Result<Face, Error> {
    let h = obj.half_extents();
    if let Some(v) = obj
        .vertices()
        .iter()
        .find(|v| pose.transform_point(v).z < -tol::GROUND_EPS)
    {
        return Err(Error::InvalidGeometry(format!(
            "vertex {:?} lies below the support plane at z = {}",
            (v.x, v.y, v.z),
            pose.transform_point(v).z
        )));
    }
    for face in Face::ALL {
        let axis = face.axis_index();
        let grounded = obj
            .vertices()
            .iter()
            .filter(|v| v[axis] * face.sign() > 0.0)
            .all(|v| pose.transform_point(v).z.abs() <= tol::GROUND_EPS);
        if grounded {
            return Ok(face);
        }
    }
    Err(Error::InvalidGeometry(format!(
        "no face of the object (half-extents {:?}) rests flat on the support plane",
        (h.x, h.y, h.z)
    )))
}

/// Classifies how two resting poses relate; see [`ManipulationCase`].
pub fn classify_case(
    c_o: &UnitDualQuaternion,
    c_f: &UnitDualQuaternion,
    obj: &CuboidObject,
) -> Result<ManipulationCase, PlanError> {
    for (name, pose) in [("start", c_o), ("goal", c_f)] {
        if grounded_vertices(obj, pose).is_empty() {
            return Err(PlanError::InvalidScenario(format!(
                "{name} pose has no vertex on the support plane"
            )));
        }
    }
    if !shared_contacts(obj, c_o, c_f).is_empty() {
        return Ok(ManipulationCase::SharedContact);
    }
    let start_face = down_face(obj, c_o).map_err(|e| {
        PlanError::InvalidScenario(format!("start pose shares no contact with the goal and {e}"))
    })?;
    let goal_face = down_face(obj, c_f).map_err(|e| {
        PlanError::InvalidScenario(format!("goal pose shares no contact with the start and {e}"))
    })?;
    if start_face == goal_face {
        Ok(ManipulationCase::SameFace)
    } else {
        Ok(ManipulationCase::FaceChange)
    }
}

/// Object and relabeling for gaiting on an arbitrary down face: `relabel`
/// maps gait-canonical body coordinates to actual body coordinates, and
/// `object` is the cuboid as seen in the canonical frame.
struct CanonicalFrame {
    object: CuboidObject,
    relabel: UnitQuaternion,
    transform: UnitDualQuaternion,
}

impl CanonicalFrame {
    fn for_face(obj: &CuboidObject, face: Face) -> Self {
        let (hx, hy, hz) = face.canonical_half_extents(obj.half_extents());
        let relabel = face.relabel();
        Self {
            object: CuboidObject::new(hx, hy, hz).expect("permuted extents stay positive"),
            relabel,
            transform: UnitDualQuaternion::from_rotation_translation(relabel, Vector3::zeros()),
        }
    }

    fn to_canonical(&self, pose: &UnitDualQuaternion) -> UnitDualQuaternion {
        *pose * self.transform
    }

    fn from_canonical(&self, pose: &UnitDualQuaternion) -> UnitDualQuaternion {
        *pose * self.transform.inverse()
    }

    fn body_point(&self, canonical: &Vector3<f64>) -> Vector3<f64> {
        self.relabel.rotate_vector(canonical)
    }
}

struct StageReport {
    case: ManipulationCase,
    gait: Option<GaitSolution>,
    notes: Vec<String>,
}

/// The planar gait problem between the scenario's start and goal poses,
/// which must rest flat on the same face.
pub fn gait_problem_of(scenario: &Scenario) -> Result<GaitProblem, PlanError> {
    let start_face = down_face(&scenario.object, &scenario.start_pose)?;
    let goal_face = down_face(&scenario.object, &scenario.goal_pose)?;
    if start_face != goal_face {
        return Err(PlanError::InvalidScenario(format!(
            "start rests on {} and goal on {}; the gait subproblem is defined on a single face",
            start_face.label(),
            goal_face.label()
        )));
    }
    let frame = CanonicalFrame::for_face(&scenario.object, start_face);
    let start = edge_state_of_pose(&frame.object, &frame.to_canonical(&scenario.start_pose))?;
    let goal = edge_state_of_pose(&frame.object, &frame.to_canonical(&scenario.goal_pose))?;
    Ok(GaitProblem {
        start,
        goal,
        w: frame.object.gait_edge_length(),
        alpha_max: scenario.gait.alpha_max,
        k_max: scenario.gait.k_max,
    })
}

/// Segments for a pose pair already sharing a grounded contact: one screw.
fn direct_segments(
    obj: &CuboidObject,
    from: &UnitDualQuaternion,
    to: &UnitDualQuaternion,
    stage: usize,
) -> Result<Vec<SegmentPlan>, PlanError> {
    if from.distance_up_to_sign(to) < 1e-12 {
        return Ok(Vec::new());
    }
    let shared = shared_contacts(obj, from, to);
    let pivot = match shared.len() {
        0 => {
            return Err(PlanError::InvalidScenario(
                "poses share no contact point for a direct pivot".into(),
            ))
        }
        1 => PivotContact::Vertex(shared[0]),
        _ => PivotContact::Edge(shared[0], shared[1]),
    };
    Ok(vec![SegmentPlan {
        from: *from,
        to: *to,
        stage,
        pivot,
        label: "pivot",
    }])
}

/// Gait segments between two poses resting on the same face: lean onto the
/// gait edge, alternate tilt/swing pairs per solved step, lean back flat.
fn gait_segments(
    scenario: &Scenario,
    from: &UnitDualQuaternion,
    to: &UnitDualQuaternion,
    face: Face,
    stage: usize,
) -> Result<(Vec<SegmentPlan>, GaitSolution), PlanError> {
    let frame = CanonicalFrame::for_face(&scenario.object, face);
    let from_c = frame.to_canonical(from);
    let to_c = frame.to_canonical(to);
    let start = edge_state_of_pose(&frame.object, &from_c)?;
    let goal = edge_state_of_pose(&frame.object, &to_c)?;
    let problem = GaitProblem {
        start,
        goal,
        w: frame.object.gait_edge_length(),
        alpha_max: scenario.gait.alpha_max,
        k_max: scenario.gait.k_max,
    };
    let options = GaitSolverOptions {
        seed: scenario.seed,
        ..GaitSolverOptions::default()
    };
    let solution = solve_gait_with(&problem, &options)?;

    if solution.k() == 0 {
        if from.distance_up_to_sign(to) > 1e-9 {
            return Err(PlanError::InvalidScenario(
                "start and goal coincide within the gait tolerance but the poses differ; \
                 tighten the input poses"
                    .into(),
            ));
        }
        return Ok((Vec::new(), solution));
    }

    let gamma = lean_angle_gamma(&frame.object, ContactEdgeAxis::AlongY);
    let edge_pivot = PivotContact::Edge(
        frame.body_point(&frame.object.gait_vertex(ContactVertex::A)),
        frame.body_point(&frame.object.gait_vertex(ContactVertex::B)),
    );

    // Canonical-frame pose chain: lean, then (tilt, swing) per step, then
    // settle flat on the goal pose.
    let mut poses = vec![from_c, edge_contact_pose(&frame.object, &start, gamma)];
    let mut pivots = vec![(edge_pivot, "lean")];
    let mut pivot_vertex = solution.start_vertex;
    for &alpha in &solution.alphas {
        let params = GaitPoseParams {
            beta: scenario.gait.beta,
            gamma,
            pivot_vertex,
        };
        let c1 = *poses.last().expect("chain is nonempty");
        let (c2, c3) = gait_intermediate_poses(&c1, &params, alpha, &frame.object)?;
        let vertex_pivot =
            PivotContact::Vertex(frame.body_point(&frame.object.gait_vertex(pivot_vertex)));
        poses.push(c2);
        pivots.push((vertex_pivot, "tilt"));
        poses.push(c3);
        pivots.push((vertex_pivot, "swing"));
        pivot_vertex = pivot_vertex.other();
    }
    poses.push(to_c);
    pivots.push((edge_pivot, "unlean"));

    let world: Vec<UnitDualQuaternion> = poses.iter().map(|p| frame.from_canonical(p)).collect();
    let mut segments = Vec::with_capacity(world.len() - 1);
    for (i, (pivot, label)) in pivots.into_iter().enumerate() {
        segments.push(SegmentPlan {
            from: if i == 0 { *from } else { world[i] },
            to: if i == world.len() - 2 { *to } else { world[i + 1] },
            stage,
            pivot,
            label,
        });
    }
    Ok((segments, solution))
}

/// One tumble of the object over the bottom edge it shares with `target`,
/// which becomes the new down face.
fn tumble_step(
    obj: &CuboidObject,
    pose: &UnitDualQuaternion,
    current: Face,
    target: Face,
) -> Result<SegmentPlan, PlanError> {
    debug_assert!(current.is_adjacent(target));
    let h = obj.half_extents();
    let shared: Vec<Vector3<f64>> = obj
        .vertices()
        .iter()
        .filter(|v| {
            v[current.axis_index()] * current.sign() > 0.0
                && v[target.axis_index()] * target.sign() > 0.0
        })
        .copied()
        .collect();
    debug_assert_eq!(shared.len(), 2, "adjacent faces share one edge of {h:?}");
    let p0 = pose.transform_point(&shared[0]);
    let p1 = pose.transform_point(&shared[1]);
    let direction = (p1 - p0).normalize();

    let rotated_normal = pose.transform_vector(&target.normal());
    // The target normal is horizontal before the tumble; exactly one of the
    // quarter turns about the shared edge points it straight down.
    let mut angle = std::f64::consts::FRAC_PI_2;
    let turned = UnitQuaternion::from_axis_angle(&direction, angle)
        .expect("edge direction is unit")
        .rotate_vector(&rotated_normal);
    if turned.z > 0.0 {
        angle = -angle;
    }
    let delta = UnitDualQuaternion::from_rotation_about_line(&p0, &direction, angle)?;
    let to = delta * *pose;
    debug_assert!(to.transform_vector(&target.normal()).z < -0.999);
    Ok(SegmentPlan {
        from: *pose,
        to,
        stage: 0, // stage is assigned by the caller
        pivot: PivotContact::Edge(shared[0], shared[1]),
        label: "tumble",
    })
}

/// Tumbles until `target` is the down face: one step for adjacent faces,
/// two greedy steps (via the first shared neighbor, noted) for opposite
/// faces.
fn tumble_segments(
    obj: &CuboidObject,
    pose: &UnitDualQuaternion,
    target: Face,
) -> Result<(Vec<SegmentPlan>, Vec<String>), PlanError> {
    let current = down_face(obj, pose)?;
    if current == target {
        return Ok((Vec::new(), Vec::new()));
    }
    if current.is_adjacent(target) {
        return Ok((vec![tumble_step(obj, pose, current, target)?], Vec::new()));
    }
    let via = Face::ALL
        .into_iter()
        .find(|f| f.is_adjacent(current) && f.is_adjacent(target))
        .expect("opposite faces always have a common neighbor");
    let first = tumble_step(obj, pose, current, via)?;
    let second = tumble_step(obj, &first.to, via, target)?;
    let note = format!(
        "opposite faces {} and {}: composed two tumbles via {}",
        current.label(),
        target.label(),
        via.label()
    );
    Ok((vec![first, second], vec![note]))
}

/// Builds the segments of one stage according to its classification.
fn stage_segments(
    scenario: &Scenario,
    from: &UnitDualQuaternion,
    to: &UnitDualQuaternion,
    stage: usize,
) -> Result<(Vec<SegmentPlan>, StageReport), PlanError> {
    let obj = &scenario.object;
    let case = classify_case(from, to, obj)?;
    let mut report = StageReport {
        case,
        gait: None,
        notes: Vec::new(),
    };
    let mut segments = match case {
        ManipulationCase::SharedContact => direct_segments(obj, from, to, stage)?,
        ManipulationCase::SameFace => {
            let face = down_face(obj, from)?;
            let (segs, solution) = gait_segments(scenario, from, to, face, stage)?;
            report.gait = Some(solution);
            segs
        }
        ManipulationCase::FaceChange => {
            let goal_face = down_face(obj, to)?;
            let start_face = down_face(obj, from)?;
            if scenario.tumble_first {
                let (mut tumbles, notes) = tumble_segments(obj, from, goal_face)?;
                report.notes = notes;
                let mid = tumbles.last().expect("faces differ").to;
                let rest = if !shared_contacts(obj, &mid, to).is_empty() {
                    direct_segments(obj, &mid, to, stage)?
                } else {
                    let (segs, solution) = gait_segments(scenario, &mid, to, goal_face, stage)?;
                    report.gait = Some(solution);
                    segs
                };
                tumbles.extend(rest);
                tumbles
            } else {
                let (reverse, notes) = tumble_segments(obj, to, start_face)?;
                report.notes = notes;
                let mid = reverse.last().expect("faces differ").to;
                let mut segs = if !shared_contacts(obj, from, &mid).is_empty() {
                    direct_segments(obj, from, &mid, stage)?
                } else {
                    let (segs, solution) = gait_segments(scenario, from, &mid, start_face, stage)?;
                    report.gait = Some(solution);
                    segs
                };
                segs.extend(reverse.into_iter().rev().map(|s| SegmentPlan {
                    from: s.to,
                    to: s.from,
                    stage,
                    pivot: s.pivot,
                    label: s.label,
                }));
                segs
            }
        }
    };
    for seg in &mut segments {
        seg.stage = stage;
    }
    Ok((segments, report))
}

fn all_segments(scenario: &Scenario) -> Result<(Vec<SegmentPlan>, Vec<StageReport>), PlanError> {
    let mut segments = Vec::new();
    let mut reports = Vec::new();
    for stage in 0..scenario.stage_count() {
        let (from, to) = scenario.stage_pose_pair(stage);
        let (segs, report) = stage_segments(scenario, &from, &to, stage)?;
        segments.extend(segs);
        reports.push(report);
    }
    // Every move must be a genuine pivot: its screw keeps a point fixed.
    for seg in &segments {
        if fixed_point_of(&(seg.to * seg.from.inverse())).is_none() {
            return Err(PlanError::InvalidScenario(format!(
                "{} segment in stage {} is not a pivoting move (its screw has nonzero slide)",
                seg.label,
                seg.stage + 1
            )));
        }
    }
    Ok((segments, reports))
}

/// The chain of intermediate object poses `[start, ..., goal]`. A scenario
/// whose start and goal coincide yields the single pose `[start]`.
pub fn build_pose_sequence(scenario: &Scenario) -> Result<Vec<UnitDualQuaternion>, PlanError> {
    scenario.validate()?;
    let (segments, _) = all_segments(scenario)?;
    let mut poses = vec![scenario.start_pose];
    for seg in &segments {
        poses.push(seg.to);
    }
    Ok(poses)
}

struct SampledPath {
    poses: Vec<UnitDualQuaternion>,
    taus: Vec<f64>,
    stages: Vec<usize>,
    /// Per segment: (first sample index, last sample index).
    ranges: Vec<(usize, usize)>,
}

fn sample_segments(
    segments: &[SegmentPlan],
    policy: StepPolicy,
    start_pose: &UnitDualQuaternion,
) -> Result<SampledPath, Error> {
    let mut poses = Vec::new();
    let mut taus = Vec::new();
    let mut stages = Vec::new();
    let mut ranges = Vec::new();
    if segments.is_empty() {
        poses.push(*start_pose);
        taus.push(0.0);
        stages.push(1);
        return Ok(SampledPath {
            poses,
            taus,
            stages,
            ranges,
        });
    }
    for (i, seg) in segments.iter().enumerate() {
        let path = sclerp_path(&seg.from, &seg.to, policy)?;
        let m = path.len() - 1;
        let first_global = if i == 0 { 0 } else { poses.len() - 1 };
        for (j, pose) in path.into_iter().enumerate() {
            if i > 0 && j == 0 {
                // The previous segment already emitted this pose; keep the
                // earlier stage's ownership of the boundary sample.
                continue;
            }
            poses.push(pose);
            taus.push(j as f64 / m as f64);
            stages.push(seg.stage + 1);
        }
        ranges.push((first_global, poses.len() - 1));
    }
    Ok(SampledPath {
        poses,
        taus,
        stages,
        ranges,
    })
}

/// World line of a segment's screw axis, for change-of-axis detection:
/// direction and moment, sign-normalized.
fn axis_signature(seg: &SegmentPlan) -> Option<(Vector3<f64>, Vector3<f64>)> {
    match extract_screw(&(seg.to * seg.from.inverse())) {
        ScrewDecomposition::General(s) => {
            let (l, m) = if first_nonzero_negative(&s.axis) {
                (-s.axis, -s.moment)
            } else {
                (s.axis, s.moment)
            };
            Some((l, m))
        }
        ScrewDecomposition::PureTranslation { direction, .. } => {
            let d = if first_nonzero_negative(&direction) {
                -direction
            } else {
                direction
            };
            Some((d, Vector3::zeros()))
        }
        ScrewDecomposition::Identity => None,
    }
}

fn first_nonzero_negative(v: &Vector3<f64>) -> bool {
    for c in v.iter() {
        if c.abs() > 1e-12 {
            return *c < 0.0;
        }
    }
    false
}

fn stage_markers(
    segments: &[SegmentPlan],
    ranges: &[(usize, usize)],
    arms: &[ArmSpec],
) -> Vec<usize> {
    let mut markers = Vec::new();
    for i in 1..segments.len() {
        let prev = &segments[i - 1];
        let next = &segments[i];
        let axis_changed = match (axis_signature(prev), axis_signature(next)) {
            (Some((l1, m1)), Some((l2, m2))) => (l1 - l2).norm() > 1e-9 || (m1 - m2).norm() > 1e-9,
            (a, b) => a.is_some() != b.is_some(),
        };
        let grasp_changed = prev.stage != next.stage
            && arms.iter().any(|arm| {
                arm.grasps[prev.stage].distance_up_to_sign(&arm.grasps[next.stage]) > 1e-12
            });
        if axis_changed || grasp_changed {
            markers.push(ranges[i - 1].1);
        }
    }
    markers
}

/// Runs the full pipeline: classify, build and sample the pose sequence,
/// then track the end-effector path of every arm. All returned sequences
/// share one sample index set; see [`PlanResult`].
pub fn plan(scenario: &Scenario) -> Result<PlanResult, PlanError> {
    scenario.validate()?;
    let (segments, reports) = all_segments(scenario)?;
    let sampled = sample_segments(&segments, scenario.step_policy, &scenario.start_pose)?;
    let n = sampled.poses.len();

    // Per-segment contact bookkeeping: pivot points must stay on the plane.
    let mut seg_diags: Vec<SegmentDiagnostics> = Vec::with_capacity(segments.len());
    let mut max_contact_drift: f64 = 0.0;
    for (i, seg) in segments.iter().enumerate() {
        let (first, last) = sampled.ranges[i];
        let body_points = seg.pivot.points();
        let anchors: Vec<Vector3<f64>> = body_points
            .iter()
            .map(|p| sampled.poses[first].transform_point(p))
            .collect();
        let mut max_height: f64 = 0.0;
        let mut max_drift: f64 = 0.0;
        for s in first..=last {
            for (body, anchor) in body_points.iter().zip(&anchors) {
                let world = sampled.poses[s].transform_point(body);
                max_height = max_height.max(world.z.abs());
                max_drift = max_drift.max((world.xy() - anchor.xy()).norm());
            }
        }
        max_contact_drift = max_contact_drift.max(max_height).max(max_drift);
        seg_diags.push(SegmentDiagnostics {
            segment: i + 1,
            stage: seg.stage + 1,
            label: seg.label,
            screw: extract_screw(&(seg.to * seg.from.inverse())),
            first_sample: first,
            last_sample: last,
            max_pivot_height: max_height,
            max_pivot_drift: max_drift,
            arms: Vec::new(),
        });
    }

    // End-effector poses per arm, world frame; a boundary sample uses the
    // earlier stage's grasp.
    let mut ee_poses: Vec<Vec<UnitDualQuaternion>> = Vec::with_capacity(scenario.arms.len());
    let mut max_grasp_defect: f64 = 0.0;
    for arm in &scenario.arms {
        let mut poses = Vec::with_capacity(n);
        for s in 0..n {
            let grasp = &arm.grasps[sampled.stages[s] - 1];
            let ee = sampled.poses[s] * grasp.inverse();
            max_grasp_defect =
                max_grasp_defect.max((ee * *grasp).distance_up_to_sign(&sampled.poses[s]));
            poses.push(ee);
        }
        ee_poses.push(poses);
    }

    let markers = stage_markers(&segments, &sampled.ranges, &scenario.arms);

    let mut diagnostics = PlanDiagnostics {
        cases: reports
            .iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r.case))
            .collect(),
        gaits: reports
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.gait.clone().map(|g| (i + 1, g)))
            .collect(),
        segments: seg_diags,
        regrasps: Vec::new(),
        notes: reports.iter().flat_map(|r| r.notes.clone()).collect(),
        max_contact_drift,
        max_grasp_defect,
    };

    let mut joint_trajectories: Vec<Vec<DVector<f64>>> = Vec::new();
    let mut all_stats: Vec<Vec<crate::kinematics::WaypointDiagnostics>> = Vec::new();
    for (arm_index, arm) in scenario.arms.iter().enumerate() {
        let base_inv = arm.base_pose.inverse();
        let mut joints: Vec<DVector<f64>> = Vec::with_capacity(n);
        let mut stats = Vec::with_capacity(n);
        let mut theta = arm.theta0.clone();

        let mut track_failure: Option<(usize, KinematicsError)> = None;
        'stages: for stage in 0..scenario.stage_count() {
            let indices: Vec<usize> = (0..n).filter(|&s| sampled.stages[s] == stage + 1).collect();
            let mut path: Vec<UnitDualQuaternion> = Vec::with_capacity(indices.len() + 1);
            if stage > 0 {
                let grasp_changed = arm.grasps[stage - 1]
                    .distance_up_to_sign(&arm.grasps[stage])
                    > 1e-12;
                let (stage_from, _) = scenario.stage_pose_pair(stage);
                let regrasp_target = base_inv * (stage_from * arm.grasps[stage].inverse());
                if grasp_changed {
                    match solve_to_pose(&arm.model, &theta, &regrasp_target, &scenario.track) {
                        Ok((new_theta, iterations)) => {
                            theta = new_theta;
                            diagnostics.regrasps.push(RegraspEvent {
                                arm: arm_index + 1,
                                stage: stage + 1,
                                sample_index: joints.len().saturating_sub(1),
                                iterations,
                            });
                        }
                        Err(e) => {
                            track_failure = Some((stage, e));
                            break 'stages;
                        }
                    }
                }
                path.push(regrasp_target);
            }
            for &s in &indices {
                path.push(base_inv * ee_poses[arm_index][s]);
            }
            if path.is_empty() {
                continue;
            }
            match rmrc_track(&arm.model, &theta, &path, &scenario.track) {
                Ok(tracked) => {
                    theta = tracked.joints.last().expect("path is nonempty").clone();
                    let skip = usize::from(stage > 0);
                    joints.extend(tracked.joints.into_iter().skip(skip));
                    stats.extend(tracked.waypoints.into_iter().skip(skip));
                }
                Err(e) => {
                    let partial = partial_trajectory(&e);
                    if let Some(t) = partial {
                        let skip = usize::from(stage > 0);
                        joints.extend(t.joints.iter().skip(skip).cloned());
                        stats.extend(t.waypoints.iter().skip(skip).copied());
                    }
                    track_failure = Some((stage, e));
                    break 'stages;
                }
            }
        }

        if let Some((stage, source)) = track_failure {
            let mut partial_joints = joint_trajectories.clone();
            partial_joints.push(joints);
            let mut partial_stats = all_stats.clone();
            partial_stats.push(stats);
            attach_arm_stats(&mut diagnostics, &partial_stats);
            let partial = PlanResult {
                arm_names: scenario.arms.iter().map(|a| a.name.clone()).collect(),
                object_poses: sampled.poses,
                taus: sampled.taus,
                sample_stages: sampled.stages,
                ee_poses,
                joint_trajectories: partial_joints,
                stage_markers: markers,
                diagnostics,
            };
            return Err(PlanError::Tracking {
                arm: arm_index + 1,
                name: arm.name.clone(),
                stage: stage + 1,
                source,
                partial: Box::new(partial),
            });
        }
        debug_assert_eq!(joints.len(), n);
        joint_trajectories.push(joints);
        all_stats.push(stats);
    }

    attach_arm_stats(&mut diagnostics, &all_stats);
    Ok(PlanResult {
        arm_names: scenario.arms.iter().map(|a| a.name.clone()).collect(),
        object_poses: sampled.poses,
        taus: sampled.taus,
        sample_stages: sampled.stages,
        ee_poses,
        joint_trajectories,
        stage_markers: markers,
        diagnostics,
    })
}

fn partial_trajectory(error: &KinematicsError) -> Option<&TrackedTrajectory> {
    match error {
        KinematicsError::NotConverged { partial, .. }
        | KinematicsError::LimitViolation { partial, .. } => Some(partial),
        _ => None,
    }
}

fn attach_arm_stats(
    diagnostics: &mut PlanDiagnostics,
    stats: &[Vec<crate::kinematics::WaypointDiagnostics>],
) {
    for seg in &mut diagnostics.segments {
        seg.arms = stats
            .iter()
            .map(|arm_stats| {
                let slice = arm_stats
                    .get(seg.first_sample..=seg.last_sample.min(arm_stats.len().saturating_sub(1)))
                    .unwrap_or(&[]);
                ArmSegmentStats {
                    max_error: slice.iter().map(|w| w.error).fold(0.0, f64::max),
                    max_iterations: slice.iter().map(|w| w.iterations).max().unwrap_or(0),
                }
            })
            .collect();
    }
}
