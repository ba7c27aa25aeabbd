//! Linear elliptic model problem: -laplace(u) = f on the unit box with
//! Dirichlet data taken from a manufactured solution.

use super::{
    boundary_constraints, spd_solve, write_error_report, AppContext, CoreModel, RunSummary,
    TutorialError,
};
use crate::fem::{
    assemble_system, build_space, error_norm, gauss_quadrature, kernels, ErrorNorm, FeSpace,
};
use crate::io::vtk_write;
use crate::linalg::{PreconditionerConfig, SolverConfig};
use crate::mesh::{generate_box, Point};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExactSolution {
    /// u = x: captured exactly by every degree, so the discrete solution
    /// matches at the nodes to solver precision.
    Linear,
    /// u = prod_d sin(pi x_d), the classic smooth convergence benchmark.
    Sine,
}

impl ExactSolution {
    pub fn value(&self, dim: usize, p: &Point) -> f64 {
        match self {
            ExactSolution::Linear => p[0],
            ExactSolution::Sine => (0..dim)
                .map(|d| (std::f64::consts::PI * p[d]).sin())
                .product(),
        }
    }

    pub fn forcing(&self, dim: usize, p: &Point) -> f64 {
        match self {
            ExactSolution::Linear => 0.0,
            ExactSolution::Sine => {
                dim as f64 * std::f64::consts::PI.powi(2) * self.value(dim, p)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tutorial01Config {
    pub dim: usize,
    pub subdivisions: usize,
    pub degree: usize,
    pub exact: ExactSolution,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
    pub output_basename: String,
}

impl Default for Tutorial01Config {
    fn default() -> Self {
        Self {
            dim: 2,
            subdivisions: 32,
            degree: 1,
            exact: ExactSolution::Sine,
            solver: SolverConfig {
                tolerance: 1e-12,
                max_iterations: 10_000,
                ..SolverConfig::default()
            },
            preconditioner: PreconditionerConfig::Jacobi,
            output_basename: "solution".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tutorial01Result {
    pub n_dofs: usize,
    pub h: f64,
    pub l2_error: f64,
    pub max_error: f64,
    pub outputs: Vec<PathBuf>,
}

pub(crate) fn build_unit_box_space(
    dim: usize,
    subdivisions: usize,
    degree: usize,
    components: usize,
) -> Result<FeSpace, TutorialError> {
    let lower = vec![0.0; dim];
    let upper = vec![1.0; dim];
    let mesh = Arc::new(generate_box(dim, &lower, &upper, &vec![subdivisions; dim])?);
    Ok(build_space(mesh, degree, components)?)
}

pub fn run_tutorial01(
    config: &Tutorial01Config,
    output_dir: Option<&Path>,
) -> Result<Tutorial01Result, TutorialError> {
    let space = build_unit_box_space(config.dim, config.subdivisions, config.degree, 1)?;
    let quadrature = gauss_quadrature(config.dim, config.degree + 2)?;
    let dim = config.dim;
    let exact = config.exact;

    let constraints = boundary_constraints(&space, &|p: &Point| exact.value(dim, p))?;
    let (matrix, rhs) = assemble_system(
        &space,
        &quadrature,
        |_cell, values, local| {
            kernels::add_stiffness(values, 1.0, local);
            kernels::add_load(values, |p: &Point| exact.forcing(dim, p), local);
        },
        &constraints,
    )?;
    let solution = spd_solve(&matrix, &rhs, &config.solver, &config.preconditioner)?;

    let exact_fn = |p: &Point| exact.value(dim, p);
    let l2_error = error_norm(&space, &solution, &exact_fn, ErrorNorm::L2, &quadrature)?;
    let max_error = error_norm(
        &space,
        &solution,
        &exact_fn,
        ErrorNorm::LinfNodal,
        &quadrature,
    )?;
    let h = 1.0 / config.subdivisions as f64;

    let mut outputs = Vec::new();
    if let Some(dir) = output_dir {
        let vtk = dir.join(format!("{}.vtk", config.output_basename));
        vtk_write(&vtk, &space, &[("u", &solution)], None)?;
        let csv = dir.join(format!("{}_errors.csv", config.output_basename));
        write_error_report(&csv, &[(space.n_dofs(), h, l2_error, max_error)])?;
        outputs.push(vtk);
        outputs.push(csv);
    }
    Ok(Tutorial01Result {
        n_dofs: space.n_dofs(),
        h,
        l2_error,
        max_error,
        outputs,
    })
}

/// Convenience for convergence studies: one solve per subdivision count.
pub fn poisson_refinement_errors(
    base: &Tutorial01Config,
    subdivisions: &[usize],
) -> Result<Vec<(f64, f64)>, TutorialError> {
    subdivisions
        .iter()
        .map(|&n| {
            let config = Tutorial01Config {
                subdivisions: n,
                ..base.clone()
            };
            let result = run_tutorial01(&config, None)?;
            Ok((result.h, result.l2_error))
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Tutorial01 {
    config: Tutorial01Config,
}

const SECTION: &str = "Poisson";

impl CoreModel for Tutorial01 {
    fn subsection_path(&self) -> &str {
        SECTION
    }

    fn declare_parameters(&self, tree: &mut ParamTree) -> Result<(), ParamError> {
        let mesh = format!("{SECTION}/Mesh");
        tree.declare(
            &mesh,
            "Dimension",
            "2",
            Validator::Integer { min: 1, max: 3 },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &mesh,
            "Number of subdivisions",
            "32",
            Validator::Integer {
                min: 1,
                max: i64::MAX,
            },
            Verbosity::Minimal,
            "Cells per axis of the unit box",
        )?;
        tree.declare(
            &format!("{SECTION}/Finite element"),
            "Degree",
            "1",
            Validator::Integer { min: 1, max: 2 },
            Verbosity::Minimal,
            "",
        )?;
        tree.declare(
            SECTION,
            "Exact solution",
            "Sine",
            Validator::selection(["Linear", "Sine"]),
            Verbosity::Standard,
            "Manufactured solution supplying forcing and boundary data",
        )?;
        tree.declare(
            &format!("{SECTION}/Output"),
            "Basename",
            "solution",
            Validator::AnyString,
            Verbosity::Full,
            "",
        )?;
        let defaults = Tutorial01Config::default();
        crate::linalg::solver_params::declare_solver_parameters(
            tree,
            SECTION,
            &defaults.solver,
            &defaults.preconditioner,
        )?;
        Ok(())
    }

    fn parse_parameters(&mut self, tree: &ParamTree) -> Result<(), TutorialError> {
        let mesh = format!("{SECTION}/Mesh");
        let (solver, preconditioner) = crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        self.config = Tutorial01Config {
            dim: tree.get_usize(&mesh, "Dimension")?,
            subdivisions: tree.get_usize(&mesh, "Number of subdivisions")?,
            degree: tree.get_usize(&format!("{SECTION}/Finite element"), "Degree")?,
            exact: match tree.get(SECTION, "Exact solution")? {
                "Linear" => ExactSolution::Linear,
                _ => ExactSolution::Sine,
            },
            solver,
            preconditioner,
            output_basename: tree.get(&format!("{SECTION}/Output"), "Basename")?.to_string(),
        };
        Ok(())
    }

    fn run(&mut self, context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial01(&self.config, Some(&context.output_dir))?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs".to_string(), result.n_dofs as f64),
                ("l2_error".to_string(), result.l2_error),
                ("max_error".to_string(), result.max_error),
            ],
            outputs: result.outputs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tutorials::log_log_slope;

    #[test]
    fn linear_solutions_are_nodally_exact() {
        let config = Tutorial01Config {
            subdivisions: 8,
            exact: ExactSolution::Linear,
            ..Tutorial01Config::default()
        };
        let result = run_tutorial01(&config, None).unwrap();
        assert!(result.max_error <= 1e-10, "max error {}", result.max_error);
    }

    #[test]
    fn sine_benchmark_converges_at_second_order_for_p1() {
        let config = Tutorial01Config::default();
        let pairs = poisson_refinement_errors(&config, &[8, 16, 32]).unwrap();
        let slope = log_log_slope(&pairs);
        assert!((slope - 2.0).abs() < 0.15, "slope {slope}");
    }

    #[test]
    fn sine_benchmark_converges_at_third_order_for_p2() {
        let config = Tutorial01Config {
            degree: 2,
            ..Tutorial01Config::default()
        };
        let pairs = poisson_refinement_errors(&config, &[4, 8, 16]).unwrap();
        let slope = log_log_slope(&pairs);
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn declare_parse_run_round_trip_writes_outputs() {
        let _guard = crate::tutorials::testing::context_lock();
        let dir = tempfile::tempdir().unwrap();
        let mut model = Tutorial01::default();
        let mut tree = ParamTree::new();
        model.declare_parameters(&mut tree).unwrap();
        tree.set(&format!("{SECTION}/Mesh"), "Number of subdivisions", "8")
            .unwrap();
        model.parse_parameters(&tree).unwrap();
        let context = AppContext::new(
            crate::params::CliOptions {
                output_dir: dir.path().to_path_buf(),
                ..crate::params::CliOptions::default()
            },
            tree,
        )
        .unwrap();
        let summary = model.run(&context).unwrap();
        assert!(summary.quantity("l2_error").unwrap() < 1e-2);
        for path in &summary.outputs {
            assert!(path.is_file(), "missing output {path:?}");
        }
    }
}
