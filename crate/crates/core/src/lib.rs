//! Modelling toolkit for linear arrays of three-legged origami tiles joined
//! by an inextensible flexible surface.
//!
//! * [`kinematics`]: forward/inverse kinematics of a single tile.
//! * [`workspace`]: reachable end-effector cloud of a tile.
//! * [`coupling`]: plate corners, inter-tile distance and material-length
//!   constraints.
//! * [`motion`]: sinusoidal and state-cycle motion patterns.
//! * [`simulator`]: quasi-static cross-section transport simulation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coupling;
pub mod export;
pub mod kinematics;
pub mod motion;
pub mod simulator;
pub mod workspace;

pub use kinematics::{LegAngles, Pose, TileGeometry};
