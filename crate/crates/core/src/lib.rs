//! Planning toolkit for repositioning heavy polyhedral objects by pivoting.
//!
//! Instead of lifting or dragging, a heavy object standing on a flat support
//! can be walked to its goal the way one moves a filing cabinet: tilt it onto
//! an edge or vertex and rotate it about that contact, one pivot at a time.
//! This crate plans such motions and turns them into manipulator joint
//! trajectories:
//!
//! * [`dq`] and [`quat`] implement the rigid-body pose algebra (unit dual
//!   quaternions over unit quaternions).
//! * [`screw`] extracts screw parameters from relative displacements and
//!   interpolates poses along the screw (ScLERP), which keeps the contact
//!   point of a pivot fixed by construction.
//! * [`gait`] plans planar gait sequences: alternating pivots about the two
//!   ends of a ground-contact edge that walk the object across the plane.
//! * [`kinematics`] tracks the resulting end-effector paths with
//!   resolved-motion rate control on a geometric Jacobian.
//! * [`pipeline`] ties the pieces together: classify the start/goal contact
//!   relation, build the object pose sequence, sample it, and solve for the
//!   joint trajectories of every arm holding the object.
//! * [`scenario`] and [`export`] read JSON problem descriptions and write CSV
//!   results; [`cli`] exposes the whole thing as a command-line tool.

pub mod cli;
pub mod dq;
pub mod export;
pub mod gait;
pub mod kinematics;
pub mod nls;
pub mod pipeline;
pub mod quat;
pub mod scenario;
pub mod screw;
pub mod tol;

mod error;

pub use error::Error;
