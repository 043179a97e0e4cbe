//! Quaternion algebra.
//!
//! A quaternion is stored as a scalar part `w` and a vector part `v`, so
//! `q = w + v_x i + v_y j + v_z k`. A unit quaternion encodes a rotation by
//! `theta` about the unit axis `l` as `(cos(theta/2), l sin(theta/2))`; `q`
//! and `-q` encode the same rotation.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};

use crate::tol;
use crate::Error;

/// General (not necessarily unit) quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub v: Vector3<f64>,
}

impl Quaternion {
    pub const fn new(w: f64, v: Vector3<f64>) -> Self {
        Self { w, v }
    }

    pub fn from_parts(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self::new(w, Vector3::new(x, y, z))
    }

    pub fn identity() -> Self {
        Self::new(1.0, Vector3::zeros())
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vector3::zeros())
    }

    /// Quaternion with zero scalar part, used to embed points and vectors.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self::new(0.0, v)
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.v)
    }

    /// Euclidean inner product of the four components.
    pub fn dot(&self, rhs: &Self) -> f64 {
        self.w * rhs.w + self.v.dot(&rhs.v)
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// Multiplicative inverse `q* / |q|^2`.
    pub fn inverse(&self) -> Result<Self, Error> {
        let n2 = self.norm_squared();
        if n2 == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.conjugate() * (1.0 / n2))
    }
}

impl Add for Quaternion {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.w + rhs.w, self.v + rhs.v)
    }
}

impl Sub for Quaternion {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.w - rhs.w, self.v - rhs.v)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.v)
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.w * s, self.v * s)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Self;
    fn mul(self, q: Self) -> Self {
        Self {
            w: self.w * q.w - self.v.dot(&q.v),
            v: self.w * q.v + q.w * self.v + self.v.cross(&q.v),
        }
    }
}

/// Quaternion constrained to unit norm, representing a rotation.
///
/// Every constructor and operation renormalizes, so the wrapped value always
/// satisfies `||q| - 1| <= tol::POST_OP`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion(Quaternion);

impl UnitQuaternion {
    pub fn identity() -> Self {
        Self(Quaternion::identity())
    }

    /// Normalizes an arbitrary nonzero quaternion onto the unit sphere.
    pub fn new_normalize(q: Quaternion) -> Result<Self, Error> {
        let n = q.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self(q * (1.0 / n)))
    }

    /// Accepts a quaternion already unit to within `tol::VALIDATION` and
    /// renormalizes the residual defect away.
    pub fn try_new(q: Quaternion) -> Result<Self, Error> {
        let n = q.norm();
        if (n - 1.0).abs() > tol::VALIDATION {
            return Err(Error::NotUnitQuaternion {
                norm: n,
                tol: tol::VALIDATION,
            });
        }
        Ok(Self(q * (1.0 / n)))
    }

    /// Rotation of `angle` radians about `axis`; the axis need not be
    /// pre-normalized but must be nonzero.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Result<Self, Error> {
        let n = axis.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let (s, c) = (0.5 * angle).sin_cos();
        Ok(Self(Quaternion::new(c, axis * (s / n))))
    }

    /// Rotation angle in `[0, pi]`, ignoring the double-cover sign.
    pub fn angle(&self) -> f64 {
        2.0 * self.0.v.norm().atan2(self.0.w.abs())
    }

    pub fn as_quaternion(&self) -> &Quaternion {
        &self.0
    }

    pub fn into_inner(self) -> Quaternion {
        self.0
    }

    /// For a unit quaternion the inverse is the conjugate.
    pub fn inverse(&self) -> Self {
        Self(self.0.conjugate())
    }

    /// Applies the rotation to a vector via `q (0, v) q*`.
    pub fn rotate_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        (self.0 * Quaternion::pure(*v) * self.0.conjugate()).v
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let Quaternion { w, v } = self.0;
        let (x, y, z) = (v.x, v.y, v.z);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    /// Converts an orthonormal, proper rotation matrix.
    ///
    /// Uses the max-diagonal branch selection so the division is always by the
    /// largest quaternion component; naive `sqrt(1 + trace)` loses half the
    /// significant digits near 180 degree rotations.
    pub fn from_rotation_matrix(r: &Matrix3<f64>) -> Result<Self, Error> {
        let defect = (r.transpose() * r - Matrix3::identity()).abs().max();
        if defect > tol::VALIDATION {
            return Err(Error::NotOrthonormal {
                defect,
                tol: tol::VALIDATION,
            });
        }
        let det = r.determinant();
        if det < 0.0 {
            return Err(Error::NotProperRotation { det });
        }

        let (m00, m11, m22) = (r[(0, 0)], r[(1, 1)], r[(2, 2)]);
        let trace = m00 + m11 + m22;
        let q = if trace >= m00 && trace >= m11 && trace >= m22 {
            let s = (trace + 1.0).sqrt() * 2.0; // 4w
            Quaternion::from_parts(
                0.25 * s,
                (r[(2, 1)] - r[(1, 2)]) / s,
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(1, 0)] - r[(0, 1)]) / s,
            )
        } else if m00 >= m11 && m00 >= m22 {
            let s = (1.0 + m00 - m11 - m22).sqrt() * 2.0; // 4x
            Quaternion::from_parts(
                (r[(2, 1)] - r[(1, 2)]) / s,
                0.25 * s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
            )
        } else if m11 >= m22 {
            let s = (1.0 + m11 - m00 - m22).sqrt() * 2.0; // 4y
            Quaternion::from_parts(
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                0.25 * s,
                (r[(1, 2)] + r[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m22 - m00 - m11).sqrt() * 2.0; // 4z
            Quaternion::from_parts(
                (r[(1, 0)] - r[(0, 1)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
                (r[(1, 2)] + r[(2, 1)]) / s,
                0.25 * s,
            )
        };
        Self::new_normalize(q)
    }
}

impl Mul for UnitQuaternion {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let q = self.0 * rhs.0;
        // Unit inputs keep the product within rounding of the sphere.
        Self(q * (1.0 / q.norm()))
    }
}

impl Neg for UnitQuaternion {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}
