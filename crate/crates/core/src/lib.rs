//! Anisotropic Navier–Stokes–Nernst–Planck–Poisson solver on a staggered
//! grid, with discrete energy auditing and regularization diagnostics.

pub mod anisotropy;
pub mod config;
pub mod coupler;
pub mod energy;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod mms;
pub mod navier_stokes;
pub mod nernst_planck;
pub mod output;
pub mod poisson;
pub mod regularizers;
pub mod surface;

pub use error::{Error, Result};
pub use grid::{BoundaryFace, BoundaryTrace, Grid, ScalarField, Side, VectorFieldMAC};
