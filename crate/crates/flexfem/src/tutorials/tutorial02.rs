//! Nonlinear elliptic model problem: -laplace(u) + u^3 = 1 on the unit box
//! with u = 1 on the boundary. The constant u = 1 satisfies the discrete
//! equations exactly, which pins down both the expected solution and the
//! expected Newton behaviour (quadratic residual decay to round-off).

use super::{boundary_constraints, AppContext, CoreModel, RunSummary, TutorialError};
use crate::fem::{assemble_system, gauss_quadrature, Constraints};
use crate::linalg::{solve, PreconditionerConfig, SolverConfig};
use crate::mesh::Point;
use crate::nonlinear::{newton_solve, NewtonConfig, NewtonVariant, NonlinearError};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};

#[derive(Debug, Clone)]
pub struct Tutorial02Config {
    pub dim: usize,
    pub subdivisions: usize,
    pub degree: usize,
    pub newton: NewtonConfig,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
}

impl Default for Tutorial02Config {
    fn default() -> Self {
        Self {
            dim: 2,
            subdivisions: 16,
            degree: 1,
            newton: NewtonConfig {
                tolerance_residual: 1e-12,
                tolerance_increment: 1e-12,
                ..NewtonConfig::default()
            },
            solver: SolverConfig {
                tolerance: 1e-13,
                max_iterations: 10_000,
                ..SolverConfig::default()
            },
            preconditioner: PreconditionerConfig::Jacobi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tutorial02Result {
    pub n_dofs: usize,
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    /// Nodal distance from the known solution u = 1.
    pub max_deviation: f64,
}

pub fn run_tutorial02(config: &Tutorial02Config) -> Result<Tutorial02Result, TutorialError> {
    let space =
        super::tutorial01::build_unit_box_space(config.dim, config.subdivisions, config.degree, 1)?;
    let quadrature = gauss_quadrature(config.dim, config.degree + 2)?;
    let unconstrained = Constraints::new();
    let boundary = boundary_constraints(&space, &|_: &Point| 1.0)?;
    let mut zero_update = Constraints::new();
    for (dof, _) in boundary.iter() {
        zero_update.fix(dof, 0.0);
    }

    // Start from zero in the interior with the boundary data already imposed,
    // so every Newton update may vanish on the boundary.
    let mut initial = crate::linalg::DVector::zeros(space.n_dofs());
    crate::fem::apply_dirichlet_to_vector(&boundary, &mut initial);

    let assemble = |u: &crate::linalg::DVector,
                    want_jacobian: bool|
     -> Result<
        (crate::linalg::DVector, Option<crate::linalg::CsrMatrix>),
        NonlinearError,
    > {
        let assembled = assemble_system(
            &space,
            &quadrature,
            |cell, values, local| {
                let coeffs = space.cell_dof_values(cell, u);
                for q in 0..values.n_q_points() {
                    let w = values.jxw(q);
                    let u_q = values.function_value(&coeffs, q);
                    let grad_u = values.function_gradient(&coeffs, q);
                    for i in 0..values.n_shape_functions() {
                        let grad_i = values.shape_grad(i, q);
                        let dot: f64 = (0..grad_i.len())
                            .map(|d| grad_u[d] * grad_i[d])
                            .sum();
                        local.add_rhs(i, w * (dot + (u_q.powi(3) - 1.0) * values.shape_value(i, q)));
                        if want_jacobian {
                            for j in 0..values.n_shape_functions() {
                                let grad_j = values.shape_grad(j, q);
                                let stiff: f64 = (0..grad_i.len())
                                    .map(|d| grad_i[d] * grad_j[d])
                                    .sum();
                                local.add(
                                    i,
                                    j,
                                    w * (stiff
                                        + 3.0
                                            * u_q.powi(2)
                                            * values.shape_value(i, q)
                                            * values.shape_value(j, q)),
                                );
                            }
                        }
                    }
                }
            },
            &unconstrained,
        )
        .map_err(|e| NonlinearError::Callback(e.to_string()))?;
        let (mut jacobian, mut residual) = assembled;
        zero_update.condense_system(&mut jacobian, &mut residual);
        Ok((residual, want_jacobian.then_some(jacobian)))
    };

    let solve_cb = |matrix: &crate::linalg::CsrMatrix,
                    rhs: &crate::linalg::DVector,
                    rel_tol: f64|
     -> Result<crate::linalg::DVector, NonlinearError> {
        // A zero forcing term means "solve as tightly as configured".
        let linear = SolverConfig {
            tolerance: if rel_tol > 0.0 {
                rel_tol
            } else {
                config.solver.tolerance
            },
            ..config.solver.clone()
        };
        let (x, report) = solve(matrix, rhs, None, &linear, &config.preconditioner)
            .map_err(|e| NonlinearError::Callback(e.to_string()))?;
        if !report.converged {
            return Err(NonlinearError::Callback(format!(
                "inner linear solve stalled at residual {:.3e}",
                report.final_residual
            )));
        }
        Ok(x)
    };

    let (solution, report) = newton_solve(&initial, assemble, solve_cb, &config.newton)?;
    if !report.converged {
        return Err(TutorialError::Run(format!(
            "Newton did not converge within {} iterations (last residual {:.3e})",
            config.newton.max_iterations,
            report.residual_norms.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let max_deviation = (0..space.n_dofs())
        .map(|dof| (solution[dof] - 1.0).abs())
        .fold(0.0f64, f64::max);
    Ok(Tutorial02Result {
        n_dofs: space.n_dofs(),
        iterations: report.iterations,
        residual_norms: report.residual_norms,
        max_deviation,
    })
}

#[derive(Debug, Default)]
pub struct Tutorial02 {
    config: Tutorial02Config,
}

const SECTION: &str = "Nonlinear Poisson";

impl CoreModel for Tutorial02 {
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
            "16",
            Validator::Integer {
                min: 1,
                max: i64::MAX,
            },
            Verbosity::Minimal,
            "",
        )?;
        tree.declare(
            &format!("{SECTION}/Finite element"),
            "Degree",
            "1",
            Validator::Integer { min: 1, max: 2 },
            Verbosity::Minimal,
            "",
        )?;
        let defaults = Tutorial02Config::default();
        crate::nonlinear::declare_newton_parameters(tree, SECTION, &defaults.newton)?;
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
        let (newton, _accel) = crate::nonlinear::parse_newton_parameters(tree, SECTION)?;
        let (solver, preconditioner) =
            crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        self.config = Tutorial02Config {
            dim: tree.get_usize(&mesh, "Dimension")?,
            subdivisions: tree.get_usize(&mesh, "Number of subdivisions")?,
            degree: tree.get_usize(&format!("{SECTION}/Finite element"), "Degree")?,
            newton,
            solver,
            preconditioner,
        };
        Ok(())
    }

    fn run(&mut self, _context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial02(&self.config)?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs".to_string(), result.n_dofs as f64),
                ("newton_iterations".to_string(), result.iterations as f64),
                ("max_deviation".to_string(), result.max_deviation),
            ],
            outputs: Vec::new(),
        })
    }
}
