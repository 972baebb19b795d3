//! Geometric (Clifford) algebra engine for arbitrary signatures G(p,q,r),
//! together with group-action neural layers (sandwich linear and 2D
//! convolution, multivector gating, multivector normalization), a small
//! deterministic training stack, and a rigid-body trajectory experiment.
//!
//! Start with [`algebra::Algebra`] to build an algebra, [`pga`] for
//! reflections, rotors, and motors, [`layers`] for the network building
//! blocks, and [`tetris`] for the end-to-end experiment. Each major
//! capability also has a runnable example under `examples/`.

pub mod algebra;
pub mod checkpoint;
pub mod error;
pub mod layers;
mod linalg;
pub mod pga;
pub mod tetris;
pub mod train;
pub mod verify;

pub use error::{Error, Result};
