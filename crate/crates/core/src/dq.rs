//! Dual quaternions and rigid-body poses.
//!
//! A dual quaternion is `D = P + eps Q` with quaternions `P`, `Q` and the
//! dual unit `eps^2 = 0`. A rigid displacement with rotation `q_r` and
//! translation `p` is the unit dual quaternion `D = q_r + (eps/2) p q_r`
//! (writing `p` for the pure quaternion of the translation). Unitness means
//! `|P| = 1` and `P Q* + Q P* = 0`; as with rotations, `D` and `-D` encode
//! the same displacement.

use std::ops::{Add, Mul, Neg};

use nalgebra::{Matrix3, Vector3};

use crate::quat::{Quaternion, UnitQuaternion};
use crate::tol;
use crate::Error;

/// General dual quaternion, `real + eps * dual`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualQuaternion {
    pub real: Quaternion,
    pub dual: Quaternion,
}

impl DualQuaternion {
    pub const fn new(real: Quaternion, dual: Quaternion) -> Self {
        Self { real, dual }
    }

    pub fn identity() -> Self {
        Self::new(Quaternion::identity(), Quaternion::zero())
    }

    /// Quaternion conjugate `D* = P* + eps Q*`; for unit dual quaternions
    /// this is the inverse displacement.
    pub fn conjugate(&self) -> Self {
        Self::new(self.real.conjugate(), self.dual.conjugate())
    }

    /// Combined quaternion and dual-number conjugate `P* - eps Q*`, the
    /// right-hand factor in the point transform `D (1 + eps v) D^dagger`.
    pub fn dagger(&self) -> Self {
        Self::new(self.real.conjugate(), -self.dual.conjugate())
    }

    /// Defect of the two unit conditions: `(||P| - 1|, |scalar(P Q* + Q P*)|)`.
    ///
    /// The second expression equals `2 P . Q`, so orthogonality of the two
    /// four-vectors is what is actually measured.
    pub fn unit_defect(&self) -> (f64, f64) {
        let norm_defect = (self.real.norm() - 1.0).abs();
        let orthogonality_defect = 2.0 * self.real.dot(&self.dual).abs();
        (norm_defect, orthogonality_defect)
    }
}

impl Add for DualQuaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.real + rhs.real, self.dual + rhs.dual)
    }
}

impl Neg for DualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.real, -self.dual)
    }
}

/// `(P1 + eps Q1)(P2 + eps Q2) = P1 P2 + eps (P1 Q2 + Q1 P2)`.
impl Mul for DualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.real * rhs.real,
            self.real * rhs.dual + self.dual * rhs.real,
        )
    }
}

impl Mul<f64> for DualQuaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.real * s, self.dual * s)
    }
}

/// Rotation-matrix-plus-position form of a pose, for interchange with code
/// that works in homogeneous coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRp {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl PoseRp {
    /// Validates that `rotation` is orthonormal and proper to within
    /// `tol::VALIDATION`. The matrix is stored as given, not re-orthonormalized.
    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Result<Self, Error> {
        let defect = (rotation.transpose() * rotation - Matrix3::identity())
            .abs()
            .max();
        if defect > tol::VALIDATION {
            return Err(Error::NotOrthonormal {
                defect,
                tol: tol::VALIDATION,
            });
        }
        let det = rotation.determinant();
        if det < 0.0 {
            return Err(Error::NotProperRotation { det });
        }
        Ok(Self { rotation, position })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.position
    }
}

/// Dual quaternion constrained to the unit conditions, representing a rigid
/// displacement. Operations renormalize, so the real part stays unit within
/// `tol::POST_OP` and the dual part orthogonal to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitDualQuaternion(DualQuaternion);

impl UnitDualQuaternion {
    pub fn identity() -> Self {
        Self(DualQuaternion::identity())
    }

    /// Builds the displacement `q_r + (eps/2) p q_r`.
    pub fn from_rotation_translation(rotation: UnitQuaternion, translation: Vector3<f64>) -> Self {
        let real = *rotation.as_quaternion();
        let dual = Quaternion::pure(translation) * real * 0.5;
        Self(DualQuaternion::new(real, dual))
    }

    pub fn from_pose(pose: &PoseRp) -> Result<Self, Error> {
        let rotation = UnitQuaternion::from_rotation_matrix(&pose.rotation)?;
        Ok(Self::from_rotation_translation(rotation, pose.position))
    }

    /// Pure rotation of `angle` about the line through `point` with direction
    /// `direction`; the workhorse for pivoting motions.
    pub fn from_rotation_about_line(
        point: &Vector3<f64>,
        direction: &Vector3<f64>,
        angle: f64,
    ) -> Result<Self, Error> {
        let rotation = UnitQuaternion::from_axis_angle(direction, angle)?;
        let translation = point - rotation.rotate_vector(point);
        Ok(Self::from_rotation_translation(rotation, translation))
    }

    /// Accepts a dual quaternion satisfying the unit conditions to within
    /// `tol::VALIDATION`, then renormalizes the residual defect away.
    pub fn try_new(d: DualQuaternion) -> Result<Self, Error> {
        let (norm_defect, orthogonality_defect) = d.unit_defect();
        if norm_defect > tol::VALIDATION || orthogonality_defect > tol::VALIDATION {
            return Err(Error::NotUnitDualQuaternion {
                norm_defect,
                orthogonality_defect,
                tol: tol::VALIDATION,
            });
        }
        Ok(Self::renormalize(d))
    }

    /// Projects a near-unit dual quaternion back onto the unit manifold:
    /// the real part is scaled to unit norm and the component of the dual
    /// part parallel to it is removed.
    fn renormalize(d: DualQuaternion) -> Self {
        let inv_norm = 1.0 / d.real.norm();
        let real = d.real * inv_norm;
        let dual = d.dual * inv_norm;
        let dual = dual - real * real.dot(&dual);
        let out = DualQuaternion::new(real, dual);
        debug_assert!({
            let (n, o) = out.unit_defect();
            n <= tol::POST_OP && o <= tol::POST_OP
        });
        Self(out)
    }

    pub(crate) fn renormalize_trusted(d: DualQuaternion) -> Self {
        debug_assert!(d.real.norm() > 0.5, "real part collapsed");
        Self::renormalize(d)
    }

    pub fn as_dual_quaternion(&self) -> &DualQuaternion {
        &self.0
    }

    pub fn real(&self) -> &Quaternion {
        &self.0.real
    }

    pub fn dual(&self) -> &Quaternion {
        &self.0.dual
    }

    pub fn rotation(&self) -> UnitQuaternion {
        UnitQuaternion::new_normalize(self.0.real).expect("real part is unit by invariant")
    }

    /// Translation `p = 2 Q P*` (vector part).
    pub fn translation(&self) -> Vector3<f64> {
        (self.0.dual * self.0.real.conjugate() * 2.0).v
    }

    pub fn to_pose(&self) -> PoseRp {
        PoseRp {
            rotation: self.rotation().to_rotation_matrix(),
            position: self.translation(),
        }
    }

    /// For a unit dual quaternion the inverse is the quaternion conjugate.
    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Applies the displacement to a point via `D (1 + eps v) D^dagger`.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let embedded = DualQuaternion::new(Quaternion::identity(), Quaternion::pure(*p));
        (self.0 * embedded * self.0.dagger()).dual.v
    }

    /// Rotates a direction without translating it.
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().rotate_vector(v)
    }

    /// Largest componentwise difference treating `D` and `-D` as equal.
    pub fn distance_up_to_sign(&self, other: &Self) -> f64 {
        let direct = component_max(&(self.0 + -other.0));
        let flipped = component_max(&(self.0 + other.0));
        direct.min(flipped)
    }
}

fn component_max(d: &DualQuaternion) -> f64 {
    let r = d.real;
    let q = d.dual;
    r.w.abs()
        .max(r.v.amax())
        .max(q.w.abs())
        .max(q.v.amax())
}

impl Mul for UnitDualQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::renormalize_trusted(self.0 * rhs.0)
    }
}

impl Neg for UnitDualQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}
