//! Runnable example applications: each couples the parameter layer to one
//! discretization and exposes the declare / parse / run contract consumed by
//! the command-line driver.

mod cahn_hilliard;
pub mod cli;
mod system;
mod transmission;
mod tutorial01;
mod tutorial02;
mod tutorial03;
mod tutorial04;

pub use cahn_hilliard::{
    run_tutorial07, CahnHilliardConfig, CahnHilliardResult, Tutorial07,
};
pub use cli::{cli_main, APP_NAMES};
pub use system::{
    run_tutorial06, scheme_gap, CouplingScheme, ManufacturedCase, SystemConfig, SystemResult,
    Tutorial06,
};
pub use transmission::{run_transmission, Transmission, TransmissionConfig, TransmissionResult};
pub use tutorial01::{
    poisson_refinement_errors, run_tutorial01, ExactSolution, Tutorial01, Tutorial01Config,
    Tutorial01Result,
};
pub use tutorial02::{run_tutorial02, Tutorial02, Tutorial02Config, Tutorial02Result};
pub use tutorial03::{
    heat_time_refinement, run_tutorial03, CapturedInputs, HeatCase, Tutorial03, Tutorial03Config,
    Tutorial03Result,
};
pub use tutorial04::{
    jacobian_comparison, run_tutorial04, JacobianMode, NonlinearHeatCase, Tutorial04,
    Tutorial04Config, Tutorial04Result,
};

use crate::coupling::CouplingError;
use crate::fem::{dirichlet_constraints, Constraints, FeSpace, FemError};
use crate::io::IoError;
use crate::linalg::{solve, CsrMatrix, DVector, LinalgError, PreconditionerConfig, SolverConfig};
use crate::mesh::{MeshError, Point};
use crate::nonlinear::NonlinearError;
use crate::params::{CliOptions, ParamError, ParamTree};
use crate::timeint::TimeIntError;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TutorialError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nonlinear(#[from] NonlinearError),
    #[error(transparent)]
    TimeInt(#[from] TimeIntError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Run(String),
}

/// Per-process lifespan handle: command-line options, the parsed parameter
/// tree, and the output directory (created on construction). Exactly one
/// context may be alive at a time; models receive it by reference.
pub struct AppContext {
    pub options: CliOptions,
    pub tree: ParamTree,
    pub output_dir: PathBuf,
}

static CONTEXT_LIVE: AtomicBool = AtomicBool::new(false);

impl AppContext {
    pub fn new(options: CliOptions, tree: ParamTree) -> Result<Self, TutorialError> {
        if CONTEXT_LIVE.swap(true, Ordering::SeqCst) {
            return Err(TutorialError::Run(
                "an application context is already alive in this process".to_string(),
            ));
        }
        let output_dir = options.output_dir.clone();
        if let Err(e) = std::fs::create_dir_all(&output_dir) {
            CONTEXT_LIVE.store(false, Ordering::SeqCst);
            return Err(TutorialError::Io(e.into()));
        }
        Ok(Self {
            options,
            tree,
            output_dir,
        })
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

impl Drop for AppContext {
    fn drop(&mut self) {
        CONTEXT_LIVE.store(false, Ordering::SeqCst);
    }
}

/// What a finished run hands back to the driver: a few labelled scalars and
/// the files it wrote.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub quantities: Vec<(String, f64)>,
    pub outputs: Vec<PathBuf>,
}

impl RunSummary {
    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }
}

/// The application contract: parameters are declared into a fresh tree,
/// overridden from a file, parsed back into typed configuration, and only
/// then is the model run. Declaration must not mutate model state.
pub trait CoreModel {
    /// Slash-separated subsection path owning this model's parameters.
    fn subsection_path(&self) -> &str;
    fn declare_parameters(&self, tree: &mut ParamTree) -> Result<(), ParamError>;
    fn parse_parameters(&mut self, tree: &ParamTree) -> Result<(), TutorialError>;
    fn run(&mut self, context: &AppContext) -> Result<RunSummary, TutorialError>;
}

/// Dirichlet data applied on every boundary tag of the box.
pub(crate) fn boundary_constraints(
    space: &FeSpace,
    g: &dyn Fn(&Point) -> f64,
) -> Result<Constraints, FemError> {
    let mut all = Constraints::new();
    for tag in 0..2 * space.mesh().dim() as u32 {
        all.merge(&dirichlet_constraints(space, tag, &g)?);
    }
    Ok(all)
}

pub(crate) fn spd_solve(
    matrix: &CsrMatrix,
    rhs: &DVector,
    config: &SolverConfig,
    preconditioner: &PreconditionerConfig,
) -> Result<DVector, TutorialError> {
    let (solution, report) = solve(matrix, rhs, None, config, preconditioner)?;
    if !report.converged {
        return Err(TutorialError::Run(format!(
            "linear solve stalled at residual {:.3e} after {} iterations",
            report.final_residual, report.iterations
        )));
    }
    Ok(solution)
}

/// Least-squares slope of log(error) against log(scale); scales are mesh
/// widths or time steps.
pub fn log_log_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (scale, error) in pairs {
        let x = scale.ln();
        let y = error.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Writes the per-run error report used by the simpler tutorials.
pub(crate) fn write_error_report(
    path: &Path,
    rows: &[(usize, f64, f64, f64)],
) -> Result<(), TutorialError> {
    let mut table = crate::io::CsvTable::new(["n_dofs", "h", "l2_error", "max_error"]);
    for (n_dofs, h, l2, max) in rows {
        table.push_row([
            n_dofs.to_string(),
            crate::io::format_numeric(*h, 12),
            crate::io::format_numeric(*l2, 12),
            crate::io::format_numeric(*max, 12),
        ])?;
    }
    crate::io::csv_write(path, &table, 12)?;
    Ok(())
}

#[cfg(test)]
pub(crate) mod testing {
    use std::sync::{Mutex, MutexGuard};

    /// Tests that build an AppContext serialize on this lock; the context is
    /// a process-wide singleton.
    static CONTEXT_TEST_LOCK: Mutex<()> = Mutex::new(());

    pub fn context_lock() -> MutexGuard<'static, ()> {
        CONTEXT_TEST_LOCK
            .lock()
            .unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}
