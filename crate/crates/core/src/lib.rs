//! Finite-difference time-domain solver for the second-order acoustic wave
//! equation truncated by an unsplit perfectly matched layer that needs only
//! two auxiliary fields in 2D and four in 3D.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
// Stencil loops index several arrays with the same node index.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod damping;
pub mod error;
pub mod field;
pub mod grid;
pub mod harness;
pub mod io;
pub mod media;
pub mod shell;
pub mod sim;
pub mod solver2d;
pub mod solver3d;
pub mod stability;
mod stencil;

pub use error::{Error, Result};
