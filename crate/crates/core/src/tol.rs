//! Numeric tolerances shared across the crate.
//!
//! Two regimes exist. Inputs arriving from outside (files, user code) are
//! accepted if they satisfy their invariants to [`VALIDATION`]; results of our
//! own arithmetic are held to the tighter [`POST_OP`] because every operation
//! renormalizes. Geometric predicates on world coordinates (is a vertex on
//! the support plane, did the pivot point drift) get their own constants since
//! they are in meters, not in dimensionless unit-norm defects.

/// Acceptable constraint defect for externally supplied data: quaternion and
/// dual-quaternion unit conditions, rotation-matrix orthonormality.
pub const VALIDATION: f64 = 1e-8;

/// Constraint defect allowed after an internal operation that renormalizes.
pub const POST_OP: f64 = 1e-10;

/// Rotation angles below this (radians) are treated as zero; the screw
/// decomposition switches to its pure-translation branch.
pub const ANGLE_EPS: f64 = 1e-8;

/// Translations below this (meters) are treated as zero; together with
/// `ANGLE_EPS` this makes a displacement the identity.
pub const TRANSLATION_EPS: f64 = 1e-10;

/// A vertex whose world height is within this of zero (meters) counts as
/// touching the support plane.
pub const GROUND_EPS: f64 = 1e-6;

/// A displacement whose screw slide is within this of zero (meters) counts as
/// a pure rotation, i.e. it has fixed points.
pub const PIVOT_SLIDE_EPS: f64 = 1e-8;

/// Allowed drift (meters) of the pivot point across the samples of one
/// pivoting segment.
pub const PIVOT_DRIFT_EPS: f64 = 1e-8;
