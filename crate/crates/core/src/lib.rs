//! Periodic homogenization of semi-linear reaction-diffusion systems in
//! perforated domains: meshes, P1 finite elements, cell problems, the
//! microscopic and homogenized solvers, and corrector convergence studies.

pub mod cell;
pub mod config;
pub mod corrector;
pub mod error;
pub mod expr;
pub mod fem;
pub mod geometry;
pub mod macro_solver;
pub mod micro;
pub mod picard;
pub mod problem;
pub mod sweep;

pub use error::{Error, Result};
