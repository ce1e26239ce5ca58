//! Numerical laboratory for the parabolic curl system
//! `∂ₜu + a curl²u + B curl u + c u = f`, `div u = 0` on a half-space with
//! tangential boundary condition `u_T = 0` on the flat boundary Σ.

pub mod diffops;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod norms;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
