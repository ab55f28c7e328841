use crate::expr::ExprError;
use crate::fem::{FemError, Field};
use crate::geometry::MeshError;
use crate::picard::PicardReport;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("cell problem is not solvable: compatibility residual {residual:e} exceeds {tolerance:e}")]
    SolvabilityViolation { residual: f64, tolerance: f64 },
    #[error("Picard iteration did not converge after {} iterations: {diagnosis}", report.iterations())]
    NoConvergence { diagnosis: String, report: Box<PicardReport>, partial: Box<Field> },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("rate fit needs at least 3 ε values, got {0}")]
    InsufficientPoints(usize),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
