//! P1 finite elements: assembly, constraints, Jacobi-preconditioned CG and
//! discrete norms.

mod assembly;
mod cg;
mod constraints;
mod field;
mod norms;
mod sparse;

pub use assembly::{
    assemble_boundary_mass, assemble_mass, assemble_stiffness, assemble_tensor_stiffness,
    element_gradient, element_load, p1_gradients, Tensor2,
};
pub use cg::{solve_linear, solve_linear_from, CgOptions, CgStats};
pub use constraints::{apply_dirichlet, apply_periodic, DofMap};
pub use field::{Field, FieldFormatError};
pub use norms::{h1_seminorm, integral, l2_norm, surface_l2_norm};
pub use sparse::CsrMatrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("coefficient evaluated to {value} at ({}, {})", at[0], at[1])]
    EvalError { at: [f64; 2], value: f64 },
    #[error("vertex {0} is both a Dirichlet vertex and a periodic slave")]
    ConstraintConflict(usize),
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}
