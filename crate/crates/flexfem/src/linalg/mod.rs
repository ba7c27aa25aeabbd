//! Sparse linear algebra substrate: CSR matrices, dense vectors, Krylov
//! solvers and preconditioners, all configurable at run time through the
//! parameter tree.

mod csr;
mod precond;
pub mod solver_params;
mod solvers;
mod vector;

pub use csr::{CsrMatrix, SparsityPattern};
pub use precond::Preconditioner;
pub use solvers::solve;
pub use vector::DVector;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero diagonal entry at row {0}")]
    ZeroDiagonal(usize),
    #[error("diagonal entry missing from sparsity pattern at row {0}")]
    MissingDiagonal(usize),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}

/// Krylov solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverType {
    Cg,
    Gmres,
    BiCgStab,
}

/// Run-time solver options, normally parsed from the `Linear solver`
/// parameter subsection.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub solver_type: SolverType,
    pub max_iterations: usize,
    /// Relative tolerance on `||b - Ax|| / ||b||`.
    pub tolerance: f64,
    /// Absolute floor: convergence when `||b - Ax|| <= max(tol * ||b||, abs_tol)`.
    pub absolute_tolerance: f64,
    /// GMRES restart length (maximum number of temporary vectors).
    pub gmres_restart: usize,
    pub log_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            solver_type: SolverType::Cg,
            max_iterations: 1000,
            tolerance: 1e-12,
            absolute_tolerance: 1e-50,
            gmres_restart: 100,
            log_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), LinalgError> {
        if self.tolerance <= 0.0 || self.absolute_tolerance <= 0.0 {
            return Err(LinalgError::InvalidConfig(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(LinalgError::InvalidConfig(
                "max iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Preconditioner selection.
#[derive(Debug, Clone, PartialEq)]
pub enum PreconditionerConfig {
    Identity,
    Jacobi,
    /// Symmetric successive over-relaxation with factor `omega` in (0, 2).
    Ssor(f64),
    Ilu0,
}

impl Default for PreconditionerConfig {
    fn default() -> Self {
        PreconditionerConfig::Identity
    }
}

/// Outcome of a linear solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// True residual norm `||b - Ax||` recomputed after the iteration.
    pub final_residual: f64,
    /// Residual norm per iteration when `log_history` is set; the last entry
    /// equals `final_residual`.
    pub history: Option<Vec<f64>>,
    /// Breakdown or non-convergence diagnostic, if any.
    pub reason: Option<String>,
}
