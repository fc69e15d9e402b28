//! Reconstruction of a scalar field (temperature, nitrogen compounds) inside a
//! box-shaped volume from a few boundary sensors.
//!
//! The numerical path is:
//!
//! 1. [`field`]: sensor readings are normalized to the unit cube and matched
//!    to a canonical placement (8 corners, or corners plus face centers).
//! 2. [`boundary`]: Dirichlet data is built on the six faces, either by
//!    bilinear interpolation or by a 2D Laplace solve per face.
//! 3. [`solver`]: the 3D Laplace problem is solved with SOR sweeps.
//! 4. [`ann`]: a one-hidden-layer sigmoid network is fitted to the grid and
//!    gives a continuous, compact surrogate of the field.
//! 5. [`x3d`]: any volume is emitted as a lattice of semitransparent boxes.
//!
//! [`netsim`] holds the sensor to concentrator to consumer data plane: the
//! circular buffer, the line protocol and a seeded link-delay simulator.
//!
//! Data-parallel loops go through [`Exec`]; with the `parallel` feature off
//! every mode runs sequentially.

pub mod ann;
pub mod boundary;
mod error;
pub mod field;
pub mod netsim;
mod par;
pub mod solver;
pub mod textfmt;
pub mod x3d;

pub use error::{Error, Result};
pub use par::Exec;

/// A point or vector in 3D, `[x, y, z]`.
pub type Point3 = [f64; 3];
