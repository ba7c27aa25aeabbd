//! Nonlinear transient problem du/dt - laplace(u) + u^2 = f, stepped with
//! BDF and solved by Newton in every step. The Jacobian can be assembled
//! from the hand-derived formula or by forward-mode automatic
//! differentiation of the local residual; both must agree to round-off.

use super::{boundary_constraints, AppContext, CoreModel, RunSummary, TutorialError};
use crate::fem::{
    assemble_system, build_sparsity, gauss_quadrature, reinit_cell, Constraints, FeSpace,
    Quadrature,
};
use crate::linalg::{solve, CsrMatrix, DVector, PreconditionerConfig, SolverConfig};
use crate::mesh::Point;
use crate::nonlinear::{newton_solve, Dual, NewtonConfig, NonlinearError};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use crate::timeint::{BdfState, TimeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JacobianMode {
    #[default]
    Handwritten,
    AutoDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearHeatCase {
    /// u = t prod_d x_d; harmonic in space and linear in time, so BDF1
    /// already tracks it to solver precision.
    Product,
    /// Zero data; the solution must stay identically zero.
    Zero,
}

impl NonlinearHeatCase {
    pub fn value(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            NonlinearHeatCase::Product => t * (0..dim).map(|d| p[d]).product::<f64>(),
            NonlinearHeatCase::Zero => 0.0,
        }
    }

    /// du/dt - laplace(u) + u^2 with laplace(u) = 0 for the product case.
    pub fn forcing(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            NonlinearHeatCase::Product => {
                let product: f64 = (0..dim).map(|d| p[d]).product();
                product + (t * product).powi(2)
            }
            NonlinearHeatCase::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tutorial04Config {
    pub dim: usize,
    pub subdivisions: usize,
    pub degree: usize,
    pub time: TimeConfig,
    pub case: NonlinearHeatCase,
    pub mode: JacobianMode,
    pub newton: NewtonConfig,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
}

impl Default for Tutorial04Config {
    fn default() -> Self {
        Self {
            dim: 2,
            subdivisions: 16,
            degree: 1,
            time: TimeConfig {
                bdf_order: 1,
                initial_time: 0.0,
                final_time: 0.5,
                time_step: 0.1,
            },
            case: NonlinearHeatCase::Product,
            mode: JacobianMode::Handwritten,
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
pub struct Tutorial04Result {
    pub n_dofs: usize,
    pub steps_run: usize,
    pub max_nodal_error: f64,
    pub total_newton_iterations: usize,
    pub final_solution: DVector,
}

/// Residual of one implicit step at the iterate `u`:
/// (alpha_0/dt) M u - M combo + A u + (u^2, phi) - (f(t), phi).
fn assemble_residual(
    space: &FeSpace,
    quadrature: &Quadrature,
    u: &DVector,
    combo: &DVector,
    alpha0_over_dt: f64,
    t: f64,
    dim: usize,
    case: NonlinearHeatCase,
) -> Result<DVector, crate::fem::FemError> {
    crate::fem::assemble_vector(space, quadrature, |cell, values, local| {
        let coeffs = space.cell_dof_values(cell, u);
        let combo_coeffs = space.cell_dof_values(cell, combo);
        for q in 0..values.n_q_points() {
            let w = values.jxw(q);
            let u_q = values.function_value(&coeffs, q);
            let combo_q = values.function_value(&combo_coeffs, q);
            let grad_u = values.function_gradient(&coeffs, q);
            let reaction = alpha0_over_dt * u_q - combo_q + u_q * u_q
                - case.forcing(dim, t, values.point(q));
            for (i, entry) in local.iter_mut().enumerate() {
                let grad_i = values.shape_grad(i, q);
                let dot: f64 = (0..grad_i.len()).map(|d| grad_u[d] * grad_i[d]).sum();
                *entry += w * (reaction * values.shape_value(i, q) + dot);
            }
        }
    })
}

/// Hand-derived Jacobian (alpha_0/dt) M + A + 2 (u phi_j, phi_i).
fn assemble_handwritten_jacobian(
    space: &FeSpace,
    quadrature: &Quadrature,
    u: &DVector,
    alpha0_over_dt: f64,
) -> Result<CsrMatrix, crate::fem::FemError> {
    let unconstrained = Constraints::new();
    let (matrix, _) = assemble_system(
        space,
        quadrature,
        |cell, values, local| {
            let coeffs = space.cell_dof_values(cell, u);
            for q in 0..values.n_q_points() {
                let w = values.jxw(q);
                let u_q = values.function_value(&coeffs, q);
                for i in 0..values.n_shape_functions() {
                    let grad_i = values.shape_grad(i, q);
                    for j in 0..values.n_shape_functions() {
                        let grad_j = values.shape_grad(j, q);
                        let stiff: f64 = (0..grad_i.len()).map(|d| grad_i[d] * grad_j[d]).sum();
                        local.add(
                            i,
                            j,
                            w * (stiff
                                + (alpha0_over_dt + 2.0 * u_q)
                                    * values.shape_value(i, q)
                                    * values.shape_value(j, q)),
                        );
                    }
                }
            }
        },
        &unconstrained,
    )?;
    Ok(matrix)
}

/// The same Jacobian, but differentiated automatically: the local residual
/// is evaluated on dual numbers seeded with the cell's own coefficients.
fn assemble_autodiff_jacobian(
    space: &FeSpace,
    quadrature: &Quadrature,
    u: &DVector,
    alpha0_over_dt: f64,
) -> CsrMatrix {
    let pattern = build_sparsity(space);
    let mut jacobian = CsrMatrix::zeros_from_pattern(pattern);
    for cell in 0..space.mesh().n_cells() {
        let values = reinit_cell(space, cell, quadrature);
        let dofs = space.cell_dofs(cell);
        let n_local = dofs.len();
        let coeffs: Vec<Dual> = dofs
            .iter()
            .enumerate()
            .map(|(i, &dof)| Dual::variable(u[dof], i, n_local))
            .collect();
        let mut local = vec![Dual::constant(0.0, n_local); n_local];
        for q in 0..values.n_q_points() {
            let w = values.jxw(q);
            let mut u_q = Dual::constant(0.0, n_local);
            for (j, c) in coeffs.iter().enumerate() {
                u_q = u_q + c * values.shape_value(j, q);
            }
            // Only Jacobian entries are harvested, so the state-independent
            // residual terms (history, forcing) may be dropped here.
            let reaction = &(&u_q * alpha0_over_dt) + &(&u_q * &u_q);
            for i in 0..n_local {
                let grad_i = values.shape_grad(i, q);
                let mut dot = Dual::constant(0.0, n_local);
                for (j, c) in coeffs.iter().enumerate() {
                    let grad_j = values.shape_grad(j, q);
                    let pairing: f64 = (0..grad_i.len()).map(|d| grad_i[d] * grad_j[d]).sum();
                    dot = dot + c * pairing;
                }
                local[i] = &local[i] + &((&(&reaction * values.shape_value(i, q)) + &dot) * w);
            }
        }
        for (i, entry) in local.iter().enumerate() {
            for (j, &dof_j) in dofs.iter().enumerate() {
                jacobian.add(dofs[i], dof_j, entry.derivative(j));
            }
        }
    }
    jacobian
}

/// Raw (uncondensed) step Jacobians at a common, deliberately non-trivial
/// state, assembled both ways. Intended for verifying the automatic
/// differentiation against the hand-derived formula.
pub fn jacobian_comparison(
    config: &Tutorial04Config,
    time: f64,
) -> Result<(CsrMatrix, CsrMatrix), TutorialError> {
    let space =
        super::tutorial01::build_unit_box_space(config.dim, config.subdivisions, config.degree, 1)?;
    let quadrature = gauss_quadrature(config.dim, config.degree + 2)?;
    let mut state = DVector::zeros(space.n_dofs());
    for dof in 0..space.n_dofs() {
        state[dof] = config
            .case
            .value(config.dim, time, &space.support_point(dof))
            + 0.3 * (2.7 * dof as f64).sin();
    }
    let alpha0_over_dt = 1.0 / config.time.time_step;
    let handwritten = assemble_handwritten_jacobian(&space, &quadrature, &state, alpha0_over_dt)?;
    let autodiff = assemble_autodiff_jacobian(&space, &quadrature, &state, alpha0_over_dt);
    Ok((handwritten, autodiff))
}

pub fn run_tutorial04(config: &Tutorial04Config) -> Result<Tutorial04Result, TutorialError> {
    let space =
        super::tutorial01::build_unit_box_space(config.dim, config.subdivisions, config.degree, 1)?;
    let quadrature = gauss_quadrature(config.dim, config.degree + 2)?;
    let dim = config.dim;
    let case = config.case;
    let dt = config.time.time_step;
    let order = config.time.bdf_order;
    let n_steps = config.time.n_steps();

    let history: Vec<DVector> = (0..order)
        .map(|j| {
            let t = config.time.initial_time - j as f64 * dt;
            let mut u = DVector::zeros(space.n_dofs());
            for dof in 0..space.n_dofs() {
                u[dof] = case.value(dim, t, &space.support_point(dof));
            }
            u
        })
        .collect();
    let mut bdf = BdfState::new(order, history, dt)?;
    let alpha0_over_dt = bdf.alpha()[0] / dt;

    let mut max_nodal_error = 0.0f64;
    let mut total_newton_iterations = 0;

    for step in 0..n_steps {
        let t_next = config.time.initial_time + (step + 1) as f64 * dt;
        let (_, combo) = bdf.time_derivative_term();

        let bc = boundary_constraints(&space, &|p: &Point| case.value(dim, t_next, p))?;
        let mut zero_update = Constraints::new();
        for (dof, _) in bc.iter() {
            zero_update.fix(dof, 0.0);
        }
        let mut predictor = bdf.extrapolate();
        crate::fem::apply_dirichlet_to_vector(&bc, &mut predictor);

        let assemble = |iterate: &DVector,
                        want_jacobian: bool|
         -> Result<(DVector, Option<CsrMatrix>), NonlinearError> {
            let mut residual = assemble_residual(
                &space,
                &quadrature,
                iterate,
                &combo,
                alpha0_over_dt,
                t_next,
                dim,
                case,
            )
            .map_err(|e| NonlinearError::Callback(e.to_string()))?;
            let jacobian = if want_jacobian {
                let mut matrix = match config.mode {
                    JacobianMode::Handwritten => assemble_handwritten_jacobian(
                        &space,
                        &quadrature,
                        iterate,
                        alpha0_over_dt,
                    )
                    .map_err(|e| NonlinearError::Callback(e.to_string()))?,
                    JacobianMode::AutoDiff => {
                        assemble_autodiff_jacobian(&space, &quadrature, iterate, alpha0_over_dt)
                    }
                };
                zero_update.condense_system(&mut matrix, &mut residual);
                Some(matrix)
            } else {
                for (dof, _) in zero_update.iter() {
                    residual[dof] = 0.0;
                }
                None
            };
            Ok((residual, jacobian))
        };
        let solve_cb = |matrix: &CsrMatrix,
                        rhs: &DVector,
                        rel_tol: f64|
         -> Result<DVector, NonlinearError> {
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

        let (solution, report) = newton_solve(&predictor, assemble, solve_cb, &config.newton)?;
        if !report.converged {
            return Err(TutorialError::Run(format!(
                "Newton stalled at step {step} (last residual {:.3e})",
                report.residual_norms.last().copied().unwrap_or(f64::NAN)
            )));
        }
        total_newton_iterations += report.iterations;
        bdf.advance(solution);

        for dof in 0..space.n_dofs() {
            let diff =
                (bdf.latest()[dof] - case.value(dim, t_next, &space.support_point(dof))).abs();
            max_nodal_error = max_nodal_error.max(diff);
        }
    }

    Ok(Tutorial04Result {
        n_dofs: space.n_dofs(),
        steps_run: n_steps,
        max_nodal_error,
        total_newton_iterations,
        final_solution: bdf.latest().clone(),
    })
}

#[derive(Debug, Default)]
pub struct Tutorial04 {
    config: Tutorial04Config,
}

const SECTION: &str = "Nonlinear heat";

impl CoreModel for Tutorial04 {
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
        crate::timeint::declare_time_parameters(
            tree,
            &format!("{SECTION}/Time"),
            &Tutorial04Config::default().time,
        )?;
        tree.declare(
            SECTION,
            "Jacobian assembly",
            "Handwritten",
            Validator::selection(["Handwritten", "AutoDiff"]),
            Verbosity::Minimal,
            "Hand-derived formula or forward-mode automatic differentiation",
        )?;
        let defaults = Tutorial04Config::default();
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
        let (newton, _) = crate::nonlinear::parse_newton_parameters(tree, SECTION)?;
        let (solver, preconditioner) =
            crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        self.config = Tutorial04Config {
            dim: tree.get_usize(&mesh, "Dimension")?,
            subdivisions: tree.get_usize(&mesh, "Number of subdivisions")?,
            degree: tree.get_usize(&format!("{SECTION}/Finite element"), "Degree")?,
            time: crate::timeint::parse_time_parameters(tree, &format!("{SECTION}/Time"))?,
            case: NonlinearHeatCase::Product,
            mode: match tree.get(SECTION, "Jacobian assembly")? {
                "AutoDiff" => JacobianMode::AutoDiff,
                _ => JacobianMode::Handwritten,
            },
            newton,
            solver,
            preconditioner,
        };
        Ok(())
    }

    fn run(&mut self, _context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial04(&self.config)?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs".to_string(), result.n_dofs as f64),
                ("steps".to_string(), result.steps_run as f64),
                ("max_nodal_error".to_string(), result.max_nodal_error),
                (
                    "newton_iterations".to_string(),
                    result.total_newton_iterations as f64,
                ),
            ],
            outputs: Vec::new(),
        })
    }
}
