//! Screw decomposition of rigid displacements and screw-linear interpolation.
//!
//! Every rigid displacement is a rotation by `theta` about a line combined
//! with a slide `d` along it (Chasles). The line is stored in Pluecker form:
//! unit direction `l` and moment `m = r x l` for any point `r` on the line.
//! Raising a unit dual quaternion to a fractional power scales `theta` and
//! `d` while keeping the line fixed, which is what makes ScLERP paths follow
//! a constant screw; a pivoting motion (`d = 0`) then holds its contact
//! point exactly at every interpolated pose.

use nalgebra::Vector3;

use crate::dq::{DualQuaternion, UnitDualQuaternion};
use crate::quat::{Quaternion, UnitQuaternion};
use crate::tol;
use crate::Error;

/// Screw axis and magnitude of a general displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScrewParameters {
    /// Unit direction `l` of the screw axis.
    pub axis: Vector3<f64>,
    /// Moment `m = r x l` of the axis about the origin; zero iff the axis
    /// passes through the origin.
    pub moment: Vector3<f64>,
    /// Rotation angle in `(0, pi]`.
    pub angle: f64,
    /// Signed slide along the axis, in meters.
    pub slide: f64,
}

impl ScrewParameters {
    /// The point on the axis closest to the origin.
    pub fn point_on_axis(&self) -> Vector3<f64> {
        self.axis.cross(&self.moment)
    }

    /// Dual quaternion of the displacement that traverses a fraction `tau`
    /// of this screw: rotation `tau * theta` and slide `tau * d` about the
    /// same line.
    pub fn fractional(&self, tau: f64) -> UnitDualQuaternion {
        let half_angle = 0.5 * tau * self.angle;
        let (s, c) = half_angle.sin_cos();
        let half_slide = 0.5 * tau * self.slide;
        let real = Quaternion::new(c, s * self.axis);
        let dual = Quaternion::new(-half_slide * s, half_slide * c * self.axis + s * self.moment);
        UnitDualQuaternion::renormalize_trusted(DualQuaternion::new(real, dual))
    }

    pub fn displacement(&self) -> UnitDualQuaternion {
        self.fractional(1.0)
    }
}

/// Result of factoring a displacement into its screw.
///
/// The rotational formulas degenerate as `theta -> 0`, so displacements that
/// are rotation-free to within `tol::ANGLE_EPS` are reported separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScrewDecomposition {
    /// Rotation (possibly with slide) about a well-defined line.
    General(ScrewParameters),
    /// No rotation; translation by `distance` along the unit `direction`.
    PureTranslation {
        direction: Vector3<f64>,
        distance: f64,
    },
    /// No motion at all.
    Identity,
}

impl ScrewDecomposition {
    /// Displacement covering a fraction `tau` of the motion.
    pub fn fractional(&self, tau: f64) -> UnitDualQuaternion {
        match self {
            Self::General(s) => s.fractional(tau),
            Self::PureTranslation {
                direction,
                distance,
            } => UnitDualQuaternion::from_rotation_translation(
                UnitQuaternion::identity(),
                tau * *distance * direction,
            ),
            Self::Identity => UnitDualQuaternion::identity(),
        }
    }

    /// Rotation angle (radians) and unsigned translation (meters) of the
    /// full motion.
    pub fn magnitudes(&self) -> (f64, f64) {
        match self {
            Self::General(s) => (s.angle, s.slide.abs()),
            Self::PureTranslation { distance, .. } => (0.0, *distance),
            Self::Identity => (0.0, 0.0),
        }
    }
}

/// Factors a unit dual quaternion into screw parameters.
///
/// The sign ambiguity of the double cover is resolved by negating inputs with
/// a negative real scalar, which lands the angle in `(0, pi]`; the returned
/// screw is therefore always the short way around.
pub fn extract_screw(d: &UnitDualQuaternion) -> ScrewDecomposition {
    let canonical = if d.real().w < 0.0 { -*d } else { *d };
    let p0 = canonical.real().w;
    let pr = canonical.real().v;
    let pr_norm = pr.norm();
    let theta = 2.0 * pr_norm.atan2(p0);
    let p = canonical.translation();

    if theta < tol::ANGLE_EPS {
        let distance = p.norm();
        if distance < tol::TRANSLATION_EPS {
            return ScrewDecomposition::Identity;
        }
        return ScrewDecomposition::PureTranslation {
            direction: p / distance,
            distance,
        };
    }

    let axis = pr / pr_norm;
    let slide = p.dot(&axis);
    // cot(theta/2) without evaluating theta's trig again: p0 / |p_r|.
    let cot_half = p0 / pr_norm;
    let moment = 0.5 * (p.cross(&axis) + (p - slide * axis) * cot_half);
    ScrewDecomposition::General(ScrewParameters {
        axis,
        moment,
        angle: theta,
        slide,
    })
}

/// `d` raised to the real power `tau`: same screw axis, angle and slide
/// scaled by `tau`.
pub fn dq_pow(d: &UnitDualQuaternion, tau: f64) -> UnitDualQuaternion {
    extract_screw(d).fractional(tau)
}

/// Screw-linear interpolation from `d1` (`tau = 0`) to `d2` (`tau = 1`):
/// `D(tau) = D1 (D1^-1 D2)^tau`.
///
/// The canonical sign in [`extract_screw`] makes this take the shorter of the
/// two screws connecting the poses. The endpoint at `tau = 1` reproduces `d2`
/// up to the double-cover sign.
pub fn sclerp(d1: &UnitDualQuaternion, d2: &UnitDualQuaternion, tau: f64) -> UnitDualQuaternion {
    let relative = d1.inverse() * *d2;
    *d1 * dq_pow(&relative, tau)
}

/// How to discretize a ScLERP segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepPolicy {
    /// Exactly this many poses, uniformly spaced in `tau` (at least two:
    /// the endpoints).
    Count(usize),
    /// As few poses as possible while consecutive poses differ by at most
    /// `max_angle` radians of rotation and `max_slide` meters of slide.
    MaxIncrement { max_angle: f64, max_slide: f64 },
}

impl Default for StepPolicy {
    /// 2 degrees of rotation and 5 mm of slide per step.
    fn default() -> Self {
        Self::MaxIncrement {
            max_angle: 2.0_f64.to_radians(),
            max_slide: 0.005,
        }
    }
}

/// Samples the ScLERP segment from `d1` to `d2` on a uniform `tau` grid that
/// includes both endpoints. The returned poses start at exactly `d1` and end
/// at exactly `d2` (sign-aligned with the interior samples).
pub fn sclerp_path(
    d1: &UnitDualQuaternion,
    d2: &UnitDualQuaternion,
    policy: StepPolicy,
) -> Result<Vec<UnitDualQuaternion>, Error> {
    let relative = d1.inverse() * *d2;
    let decomposition = extract_screw(&relative);
    let intervals = match policy {
        StepPolicy::Count(n) => {
            if n < 2 {
                return Err(Error::InvalidStepPolicy(
                    "pose count must be at least 2 to include both endpoints",
                ));
            }
            n - 1
        }
        StepPolicy::MaxIncrement {
            max_angle,
            max_slide,
        } => {
            if max_angle <= 0.0 || max_slide <= 0.0 {
                return Err(Error::InvalidStepPolicy(
                    "increment bounds must be positive",
                ));
            }
            let (angle, slide) = decomposition.magnitudes();
            let by_angle = (angle / max_angle).ceil() as usize;
            let by_slide = (slide / max_slide).ceil() as usize;
            by_angle.max(by_slide).max(1)
        }
    };

    let mut poses = Vec::with_capacity(intervals + 1);
    poses.push(*d1);
    for i in 1..intervals {
        let tau = i as f64 / intervals as f64;
        poses.push(*d1 * decomposition.fractional(tau));
    }
    // Emit the exact input endpoint, choosing the cover sign that continues
    // the interior samples without a jump in coordinates.
    let reconstructed = *d1 * decomposition.fractional(1.0);
    let direct = (reconstructed.as_dual_quaternion().real + -d2.as_dual_quaternion().real).norm();
    let flipped = (reconstructed.as_dual_quaternion().real + d2.as_dual_quaternion().real).norm();
    poses.push(if direct <= flipped { *d2 } else { -*d2 });
    Ok(poses)
}

/// A point left fixed by the displacement, if one exists.
///
/// Pure rotations (`|d| <= tol::PIVOT_SLIDE_EPS`) fix every point of their
/// axis; the one closest to the origin, `r = l x m`, is returned. Proper
/// screws and pure translations fix nothing. The identity fixes everything,
/// reported as the origin.
pub fn fixed_point_of(d: &UnitDualQuaternion) -> Option<Vector3<f64>> {
    match extract_screw(d) {
        ScrewDecomposition::General(s) if s.slide.abs() <= tol::PIVOT_SLIDE_EPS => {
            Some(s.point_on_axis())
        }
        ScrewDecomposition::Identity => Some(Vector3::zeros()),
        _ => None,
    }
}
