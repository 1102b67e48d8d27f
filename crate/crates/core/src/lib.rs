//! Discontinuous Petrov-Galerkin finite elements for time-harmonic linear
//! viscoelasticity on axis-aligned hexahedral grids, plus the cantilever
//! DMA inverse model used to calibrate the material.

pub mod adaptivity;
pub mod calibration;
pub mod dpg;
pub mod driver;
pub mod error;
pub mod fespace;
pub mod material;
pub mod mesh;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
