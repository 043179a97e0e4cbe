use thiserror::Error;

/// Errors from the pose algebra and interpolation layers.
///
/// Higher layers (gait planning, tracking, scenario loading) define their own
/// error types carrying richer payloads; they wrap this one where a low-level
/// failure can propagate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("zero-norm quaternion has no inverse or direction")]
    ZeroNorm,

    #[error("quaternion norm {norm} is not 1 within {tol}")]
    NotUnitQuaternion { norm: f64, tol: f64 },

    #[error(
        "dual quaternion violates the unit conditions: real-norm defect {norm_defect:.3e}, \
         orthogonality defect {orthogonality_defect:.3e} (tolerance {tol:.1e})"
    )]
    NotUnitDualQuaternion {
        norm_defect: f64,
        orthogonality_defect: f64,
        tol: f64,
    },

    #[error("rotation matrix is not orthonormal: defect {defect:.3e} exceeds {tol:.1e}")]
    NotOrthonormal { defect: f64, tol: f64 },

    #[error("matrix has determinant {det:.6}; a rotation requires +1")]
    NotProperRotation { det: f64 },

    #[error("invalid step policy: {0}")]
    InvalidStepPolicy(&'static str),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}
