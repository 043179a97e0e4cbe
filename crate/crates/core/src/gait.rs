//! Gait planning: walking a cuboid across a flat support plane.
//!
//! The object rests leaned on one bottom edge `ab`. Tilting it slightly
//! about the line through one end of that edge frees the other end, the
//! object is swung about the vertical axis through the loaded vertex, and
//! the roles alternate; the contact edge advances across the plane like a
//! waddling gait. Planning reduces to a planar problem: find pivot angles
//! `alpha_1..alpha_k`, each bounded by `alpha_max`, that move the edge from
//! its start position and orientation to the goal.
//!
//! Conventions used throughout: gaiting happens on the bottom (`-z`) face's
//! `-x` edge, which runs along the body `y` axis; vertex `a` is the end at
//! `+hy`, vertex `b` at `-hy`, so the edge length is `w = 2 hy`. Positive
//! pivot angles rotate counterclockwise in the plane (seen from `+z`).

use nalgebra::{DMatrix, DVector, Rotation2, Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dq::UnitDualQuaternion;
use crate::nls::{self, LmOptions};
use crate::quat::UnitQuaternion;
use crate::tol;
use crate::Error;

/// Axis-aligned cuboid described by its half-extents, body frame at the
/// center of mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuboidObject {
    half_extents: Vector3<f64>,
}

impl CuboidObject {
    pub fn new(hx: f64, hy: f64, hz: f64) -> Result<Self, Error> {
        if !(hx > 0.0 && hy > 0.0 && hz > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "half-extents must be positive, got ({hx}, {hy}, {hz})"
            )));
        }
        Ok(Self {
            half_extents: Vector3::new(hx, hy, hz),
        })
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        self.half_extents
    }

    /// The eight corners in body coordinates, indexed by sign bits
    /// `(x: bit 2, y: bit 1, z: bit 0)` with a set bit meaning the positive
    /// side.
    pub fn vertices(&self) -> [Vector3<f64>; 8] {
        let h = self.half_extents;
        std::array::from_fn(|i| {
            Vector3::new(
                if i & 4 != 0 { h.x } else { -h.x },
                if i & 2 != 0 { h.y } else { -h.y },
                if i & 1 != 0 { h.z } else { -h.z },
            )
        })
    }

    /// Body position of a gait contact vertex.
    pub fn gait_vertex(&self, v: ContactVertex) -> Vector3<f64> {
        let h = self.half_extents;
        match v {
            ContactVertex::A => Vector3::new(-h.x, h.y, -h.z),
            ContactVertex::B => Vector3::new(-h.x, -h.y, -h.z),
        }
    }

    /// Length of the gait contact edge.
    pub fn gait_edge_length(&self) -> f64 {
        2.0 * self.half_extents.y
    }
}

/// Which body edge of the resting face the object is tilted onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactEdgeAxis {
    AlongX,
    AlongY,
}

/// Lean angle that places the center of mass vertically above the contact
/// edge, so the object balances there with no moment.
pub fn lean_angle_gamma(obj: &CuboidObject, axis: ContactEdgeAxis) -> f64 {
    let h = obj.half_extents();
    match axis {
        ContactEdgeAxis::AlongX => h.y.atan2(h.z),
        ContactEdgeAxis::AlongY => h.x.atan2(h.z),
    }
}

/// One of the two ends of the contact edge. Doubles as the start-vertex
/// choice of a gait (the pivot of the first step).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContactVertex {
    A,
    B,
}

impl ContactVertex {
    pub fn other(self) -> Self {
        match self {
            Self::A => Self::B,
            Self::B => Self::A,
        }
    }
}

/// Planar state of the contact edge: world positions of its two ends and
/// its orientation `alpha = atan2(b - a)` relative to the world x axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEdgeState {
    pub a: Vector2<f64>,
    pub b: Vector2<f64>,
    pub alpha: f64,
}

impl ContactEdgeState {
    pub fn new(a: Vector2<f64>, b: Vector2<f64>) -> Self {
        let d = b - a;
        Self {
            a,
            b,
            alpha: d.y.atan2(d.x),
        }
    }

    pub fn edge_length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    pub fn validate(&self, w: f64) -> Result<(), Error> {
        let len = self.edge_length();
        if (len - w).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "contact edge length {len} differs from w = {w}"
            )));
        }
        let d = self.b - self.a;
        if wrap_angle(self.alpha - d.y.atan2(d.x)).abs() > 1e-9 {
            return Err(Error::InvalidGeometry(
                "edge orientation alpha does not match atan2(b - a)".into(),
            ));
        }
        Ok(())
    }
}

/// Wraps to `(-pi, pi]`.
pub(crate) fn wrap_angle(x: f64) -> f64 {
    let wrapped = (-x + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
    std::f64::consts::PI - wrapped
}

/// Applies each pivot angle as a planar rotation of the free vertex about
/// the current pivot vertex, alternating pivots each step. This is the
/// ground-truth geometry the optimization in [`solve_gait`] is checked
/// against, so it is kept as literal as possible.
pub fn forward_gait(
    start: &ContactEdgeState,
    alphas: &[f64],
    start_vertex: ContactVertex,
    w: f64,
) -> ContactEdgeState {
    debug_assert!((start.edge_length() - w).abs() <= 1e-9);
    let mut a = start.a;
    let mut b = start.b;
    let mut pivot = start_vertex;
    for &alpha in alphas {
        let rot = Rotation2::new(alpha);
        match pivot {
            ContactVertex::A => b = a + rot * (b - a),
            ContactVertex::B => a = b + rot * (a - b),
        }
        pivot = pivot.other();
    }
    ContactEdgeState::new(a, b)
}

/// Start and goal edge states plus the box and search bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitProblem {
    pub start: ContactEdgeState,
    pub goal: ContactEdgeState,
    /// Contact edge length in meters.
    pub w: f64,
    /// Per-step pivot angle bound, radians.
    pub alpha_max: f64,
    /// Largest step count to try.
    pub k_max: usize,
}

impl GaitProblem {
    pub fn validate(&self) -> Result<(), GaitError> {
        if !(self.w > 0.0) {
            return Err(GaitError::InvalidProblem(format!(
                "edge length w = {} must be positive",
                self.w
            )));
        }
        if !(self.alpha_max > 0.0 && self.alpha_max <= std::f64::consts::FRAC_PI_2) {
            return Err(GaitError::InvalidProblem(format!(
                "alpha_max = {} must lie in (0, pi/2]",
                self.alpha_max
            )));
        }
        if self.k_max == 0 {
            return Err(GaitError::InvalidProblem("k_max must be at least 1".into()));
        }
        self.start
            .validate(self.w)
            .and_then(|_| self.goal.validate(self.w))
            .map_err(|e| GaitError::InvalidProblem(e.to_string()))
    }
}

/// A feasible gait: pivot angles, which vertex pivots first, and the closure
/// residuals as recomputed by [`forward_gait`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaitSolution {
    pub alphas: Vec<f64>,
    pub start_vertex: ContactVertex,
    /// Worst vertex position mismatch at the goal, meters.
    pub position_residual: f64,
    /// Edge orientation mismatch at the goal, radians.
    pub angle_residual: f64,
}

impl GaitSolution {
    pub fn k(&self) -> usize {
        self.alphas.len()
    }

    pub fn norm(&self) -> f64 {
        self.alphas.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Closest-to-feasible attempt, reported when no gait closes.
#[derive(Debug, Clone, PartialEq)]
pub struct BestAttempt {
    pub k: usize,
    pub start_vertex: ContactVertex,
    pub alphas: Vec<f64>,
    pub position_residual: f64,
    pub angle_residual: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GaitError {
    #[error("invalid gait problem: {0}")]
    InvalidProblem(String),

    #[error(
        "no feasible gait within k_max = {k_max}: best attempt used k = {}, position residual \
         {:.3e} m, angle residual {:.3e} rad",
        best.k,
        best.position_residual,
        best.angle_residual
    )]
    Infeasible { k_max: usize, best: BestAttempt },
}

/// A known (or suspected) feasible angle sequence supplied to the solver as
/// an extra multi-start seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCandidate {
    pub start_vertex: ContactVertex,
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GaitSolverOptions {
    /// RNG seed for the random multi-starts; a fixed seed makes the solver
    /// deterministic.
    pub seed: u64,
    /// Number of random starts per (k, start-vertex) subproblem.
    pub multi_starts: usize,
    /// Feasibility threshold on the position residual, meters.
    pub position_tol: f64,
    /// Feasibility threshold on the angle residual, radians.
    pub angle_tol: f64,
    /// Extra starting points, polished at their own step count. When any of
    /// these turns out feasible, the returned solution is the minimum-norm
    /// candidate over both the regular smallest-k search and the polished
    /// seeds, so supplying a feasible seed can never make the result worse
    /// (at the cost of not insisting on the smallest k).
    pub seeds: Vec<SeedCandidate>,
}

impl Default for GaitSolverOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            multi_starts: 32,
            position_tol: 1e-6,
            angle_tol: 1e-8,
            seeds: Vec::new(),
        }
    }
}

/// Oracle-recomputed residuals of an angle sequence against the goal.
fn closure_residuals(
    problem: &GaitProblem,
    alphas: &[f64],
    start_vertex: ContactVertex,
) -> (f64, f64) {
    let end = forward_gait(&problem.start, alphas, start_vertex, problem.w);
    let position = (end.a - problem.goal.a)
        .norm()
        .max((end.b - problem.goal.b).norm());
    let angle = wrap_angle(end.alpha - problem.goal.alpha).abs();
    (position, angle)
}

/// Closed-form restatement of the forward gait used inside the optimizer.
///
/// Writing `e(t) = (cos t, sin t)` and `theta_i = alpha_O + sum of the first
/// i angles, each step moves the free vertex by `w (e(theta_i) -
/// e(theta_{i-1}))` (plus for `b`, minus for `a`). The goal-angle residual is
/// expressed as `2 w sin((theta_k - alpha_F) / 2)`, which is smooth and
/// vanishes exactly at equality modulo full turns; scaling by `w` keeps all
/// residual rows in meters.
struct ClosureModel {
    start: ContactEdgeState,
    goal: ContactEdgeState,
    w: f64,
    start_vertex: ContactVertex,
}

impl ClosureModel {
    fn residuals(&self, phi: &DVector<f64>) -> DVector<f64> {
        let mut a = self.start.a;
        let mut b = self.start.b;
        let mut theta = self.start.alpha;
        let mut e_prev = Vector2::new(theta.cos(), theta.sin());
        let mut pivot = self.start_vertex;
        for &step in phi.iter() {
            theta += step;
            let e = Vector2::new(theta.cos(), theta.sin());
            let delta = self.w * (e - e_prev);
            match pivot {
                ContactVertex::A => b += delta,
                ContactVertex::B => a -= delta,
            }
            e_prev = e;
            pivot = pivot.other();
        }
        let angle_row = 2.0 * self.w * (0.5 * (theta - self.goal.alpha)).sin();
        DVector::from_vec(vec![
            a.x - self.goal.a.x,
            a.y - self.goal.a.y,
            b.x - self.goal.b.x,
            b.y - self.goal.b.y,
            angle_row,
        ])
    }

    fn jacobian(&self, phi: &DVector<f64>) -> DMatrix<f64> {
        let k = phi.len();
        let mut jac = DMatrix::zeros(5, k);
        let mut theta = self.start.alpha;
        let mut pivot = self.start_vertex;
        let mut thetas = Vec::with_capacity(k + 1);
        thetas.push(theta);
        for &step in phi.iter() {
            theta += step;
            thetas.push(theta);
        }
        // d e(theta_i) / d phi_j = e'(theta_i) for j <= i.
        for i in 1..=k {
            let (rows, sign) = match pivot {
                ContactVertex::A => (2, self.w),
                ContactVertex::B => (0, -self.w),
            };
            let de_i = Vector2::new(-thetas[i].sin(), thetas[i].cos());
            let de_prev = Vector2::new(-thetas[i - 1].sin(), thetas[i - 1].cos());
            for j in 0..i {
                jac[(rows, j)] += sign * de_i.x;
                jac[(rows + 1, j)] += sign * de_i.y;
            }
            for j in 0..i - 1 {
                jac[(rows, j)] -= sign * de_prev.x;
                jac[(rows + 1, j)] -= sign * de_prev.y;
            }
            pivot = pivot.other();
        }
        let half = 0.5 * (thetas[k] - self.goal.alpha);
        for j in 0..k {
            jac[(4, j)] = self.w * half.cos();
        }
        jac
    }
}

/// Minimizes the closure residuals from one starting point, with a fading
/// penalty `mu |w phi|^2` that steers early iterations toward small angles
/// before pure feasibility takes over.
fn polish_candidate(
    model: &ClosureModel,
    start: DVector<f64>,
    alpha_max: f64,
    mu_stages: &[f64],
) -> DVector<f64> {
    let k = start.len();
    let bounds = (
        DVector::from_element(k, -alpha_max),
        DVector::from_element(k, alpha_max),
    );
    let mut x = start;
    for &mu in mu_stages {
        let penalty = mu.sqrt() * model.w;
        let residuals = |phi: &DVector<f64>| {
            let base = model.residuals(phi);
            let mut out = DVector::zeros(5 + k);
            out.rows_mut(0, 5).copy_from(&base);
            for j in 0..k {
                out[5 + j] = penalty * phi[j];
            }
            out
        };
        let jacobian = |phi: &DVector<f64>| {
            let base = model.jacobian(phi);
            let mut out = DMatrix::zeros(5 + k, k);
            out.rows_mut(0, 5).copy_from(&base);
            for j in 0..k {
                out[(5 + j, j)] = penalty;
            }
            out
        };
        let opts = LmOptions {
            max_iterations: 150,
            cost_tol: 1e-28,
            bounds: Some(bounds.clone()),
            ..LmOptions::default()
        };
        x = nls::minimize(residuals, jacobian, x, &opts).x;
    }
    x
}

struct SubproblemOutcome {
    feasible: Option<GaitSolution>,
    best_attempt: BestAttempt,
}

/// All multi-starts for one (k, start_vertex) subproblem.
fn solve_subproblem(
    problem: &GaitProblem,
    k: usize,
    start_vertex: ContactVertex,
    options: &GaitSolverOptions,
) -> SubproblemOutcome {
    let model = ClosureModel {
        start: problem.start,
        goal: problem.goal,
        w: problem.w,
        start_vertex,
    };

    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(options.multi_starts + 4);
    starts.push(DVector::zeros(k));
    // Spread the net orientation change uniformly over the steps.
    let net = wrap_angle(problem.goal.alpha - problem.start.alpha);
    starts.push(DVector::from_element(k, net / k as f64));
    // Arc heuristic: alternating pushes sized for the travel distance, on
    // top of the uniform orientation change; both handednesses.
    let mid_start = 0.5 * (problem.start.a + problem.start.b);
    let mid_goal = 0.5 * (problem.goal.a + problem.goal.b);
    let travel = (mid_goal - mid_start).norm();
    let psi = (2.0 * travel / (problem.w * k as f64)).min(0.9 * problem.alpha_max);
    for handedness in [1.0, -1.0] {
        starts.push(DVector::from_iterator(
            k,
            (0..k).map(|i| net / k as f64 + handedness * if i % 2 == 0 { psi } else { -psi }),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(
        options.seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
            ^ match start_vertex {
                ContactVertex::A => 0,
                ContactVertex::B => 0x5851_F42D_4C95_7F2D,
            },
    );
    for _ in 0..options.multi_starts {
        starts.push(DVector::from_iterator(
            k,
            (0..k).map(|_| rng.random_range(-problem.alpha_max..=problem.alpha_max)),
        ));
    }

    let mut feasible: Option<GaitSolution> = None;
    let mut best_attempt: Option<BestAttempt> = None;
    for start in starts {
        let x = polish_candidate(&model, start, problem.alpha_max, &[1e-2, 1e-4, 0.0]);
        let alphas: Vec<f64> = x.iter().copied().collect();
        let (position, angle) = closure_residuals(problem, &alphas, start_vertex);
        let attempt_score = position + problem.w * angle;
        let better_attempt = best_attempt
            .as_ref()
            .map(|b| attempt_score < b.position_residual + problem.w * b.angle_residual)
            .unwrap_or(true);
        if better_attempt {
            best_attempt = Some(BestAttempt {
                k,
                start_vertex,
                alphas: alphas.clone(),
                position_residual: position,
                angle_residual: angle,
            });
        }
        if position <= options.position_tol && angle <= options.angle_tol {
            let candidate = GaitSolution {
                alphas,
                start_vertex,
                position_residual: position,
                angle_residual: angle,
            };
            let improves = feasible
                .as_ref()
                .map(|f| candidate.norm() < f.norm())
                .unwrap_or(true);
            if improves {
                feasible = Some(candidate);
            }
        }
    }
    SubproblemOutcome {
        feasible,
        best_attempt: best_attempt.expect("at least one start is always evaluated"),
    }
}

/// Solves the gait-sequencing problem with default solver options.
///
/// Searches k upward from 1 and stops at the first step count with a
/// feasible solution, which implements "use as few contact edges as
/// possible"; among the two start-vertex choices at that k the smaller
/// `|alpha|` wins. Identical start and goal short-circuit to an empty k = 0
/// solution.
pub fn solve_gait(problem: &GaitProblem) -> Result<GaitSolution, GaitError> {
    solve_gait_with(problem, &GaitSolverOptions::default())
}

/// [`solve_gait`] with explicit options; see [`GaitSolverOptions::seeds`]
/// for how supplied seeds interact with the smallest-k rule.
pub fn solve_gait_with(
    problem: &GaitProblem,
    options: &GaitSolverOptions,
) -> Result<GaitSolution, GaitError> {
    problem.validate()?;

    let (position, angle) = closure_residuals(problem, &[], ContactVertex::A);
    if position <= options.position_tol && angle <= options.angle_tol {
        return Ok(GaitSolution {
            alphas: Vec::new(),
            start_vertex: ContactVertex::A,
            position_residual: position,
            angle_residual: angle,
        });
    }

    let mut candidates: Vec<GaitSolution> = Vec::new();
    let mut best_attempt: Option<BestAttempt> = None;
    for k in 1..=problem.k_max {
        for start_vertex in [ContactVertex::A, ContactVertex::B] {
            let outcome = solve_subproblem(problem, k, start_vertex, options);
            let better = best_attempt
                .as_ref()
                .map(|b| {
                    outcome.best_attempt.position_residual
                        + problem.w * outcome.best_attempt.angle_residual
                        < b.position_residual + problem.w * b.angle_residual
                })
                .unwrap_or(true);
            if better {
                best_attempt = Some(outcome.best_attempt.clone());
            }
            if let Some(sol) = outcome.feasible {
                candidates.push(sol);
            }
        }
        if !candidates.is_empty() {
            break;
        }
    }

    for seed in &options.seeds {
        if seed.alphas.is_empty() || seed.alphas.len() > problem.k_max {
            continue;
        }
        let model = ClosureModel {
            start: problem.start,
            goal: problem.goal,
            w: problem.w,
            start_vertex: seed.start_vertex,
        };
        let clamped = DVector::from_iterator(
            seed.alphas.len(),
            seed.alphas
                .iter()
                .map(|a| a.clamp(-problem.alpha_max, problem.alpha_max)),
        );
        let x = polish_candidate(&model, clamped, problem.alpha_max, &[0.0]);
        let alphas: Vec<f64> = x.iter().copied().collect();
        let (position, angle) = closure_residuals(problem, &alphas, seed.start_vertex);
        if position <= options.position_tol && angle <= options.angle_tol {
            candidates.push(GaitSolution {
                alphas,
                start_vertex: seed.start_vertex,
                position_residual: position,
                angle_residual: angle,
            });
        }
    }

    candidates
        .into_iter()
        .min_by(|x, y| {
            (x.norm(), x.k())
                .partial_cmp(&(y.norm(), y.k()))
                .expect("norms are finite")
        })
        .ok_or_else(|| GaitError::Infeasible {
            k_max: problem.k_max,
            best: best_attempt.expect("search visited at least one subproblem"),
        })
}

/// Pose of the object leaned on its gait edge: the edge lies along the
/// world direction `(cos alpha, sin alpha)` with vertex `a` at `edge.a`,
/// and the body is tilted by `gamma` about the edge (COM directly above it
/// when `gamma` is the balance angle). `gamma = 0` gives the flat pose
/// resting on the bottom face.
pub fn edge_contact_pose(
    obj: &CuboidObject,
    edge: &ContactEdgeState,
    gamma: f64,
) -> UnitDualQuaternion {
    let yaw = UnitQuaternion::from_axis_angle(
        &Vector3::z(),
        edge.alpha + std::f64::consts::FRAC_PI_2,
    )
    .expect("z axis is nonzero");
    let lean = UnitQuaternion::from_axis_angle(&Vector3::y(), -gamma).expect("y axis is nonzero");
    let rotation = yaw * lean;
    let a_world = Vector3::new(edge.a.x, edge.a.y, 0.0);
    let position = a_world - rotation.rotate_vector(&obj.gait_vertex(ContactVertex::A));
    UnitDualQuaternion::from_rotation_translation(rotation, position)
}

/// Recovers the planar edge state from a pose whose gait edge is on the
/// support plane (flat or leaned).
pub fn edge_state_of_pose(
    obj: &CuboidObject,
    pose: &UnitDualQuaternion,
) -> Result<ContactEdgeState, Error> {
    let a = pose.transform_point(&obj.gait_vertex(ContactVertex::A));
    let b = pose.transform_point(&obj.gait_vertex(ContactVertex::B));
    if a.z.abs() > tol::GROUND_EPS || b.z.abs() > tol::GROUND_EPS {
        return Err(Error::InvalidGeometry(format!(
            "gait edge is not on the support plane (vertex heights {:.3e}, {:.3e})",
            a.z, b.z
        )));
    }
    Ok(ContactEdgeState::new(a.xy(), b.xy()))
}

/// Tilt and swing parameters for one gait step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitPoseParams {
    /// Tilt angle freeing the unloaded vertex, radians.
    pub beta: f64,
    /// Lean angle of the edge-contact pose, radians.
    pub gamma: f64,
    pub pivot_vertex: ContactVertex,
}

impl GaitPoseParams {
    pub fn validate(&self) -> Result<(), Error> {
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(0.0..half_pi).contains(&self.beta) || !(0.0..half_pi).contains(&self.gamma) {
            return Err(Error::InvalidGeometry(format!(
                "beta = {} and gamma = {} must lie in [0, pi/2)",
                self.beta, self.gamma
            )));
        }
        Ok(())
    }
}

/// Intermediate poses of one gait step from the edge-contact pose `c1`:
/// the tilt `c2` that frees the unloaded vertex, and the swing `c3` rotated
/// by `alpha` about the world vertical through the pivot vertex.
///
/// The tilt axis is the body `x` direction through the pivot vertex
/// (perpendicular to the contact edge), by `-beta` when pivoting about `a`
/// and `+beta` about `b`; either sign choice lifts the free vertex while the
/// pivot vertex stays put. `c3` equals the edge-contact pose of the advanced
/// edge state, so consecutive steps chain exactly.
pub fn gait_intermediate_poses(
    c1: &UnitDualQuaternion,
    params: &GaitPoseParams,
    alpha: f64,
    obj: &CuboidObject,
) -> Result<(UnitDualQuaternion, UnitDualQuaternion), Error> {
    params.validate()?;
    let state = edge_state_of_pose(obj, c1)?;
    let expected = edge_contact_pose(obj, &state, params.gamma);
    let defect = c1.distance_up_to_sign(&expected);
    if defect > 1e-6 {
        return Err(Error::InvalidGeometry(format!(
            "pose is {defect:.3e} away from an edge-contact pose at lean angle {}",
            params.gamma
        )));
    }

    let pivot_world = c1.transform_point(&obj.gait_vertex(params.pivot_vertex));
    let tilt_axis = c1.transform_vector(&Vector3::x());
    let tilt_angle = match params.pivot_vertex {
        ContactVertex::A => -params.beta,
        ContactVertex::B => params.beta,
    };
    let c2 = UnitDualQuaternion::from_rotation_about_line(&pivot_world, &tilt_axis, tilt_angle)?
        * *c1;
    let c3 =
        UnitDualQuaternion::from_rotation_about_line(&pivot_world, &Vector3::z(), alpha)? * *c1;
    Ok((c2, c3))
}
