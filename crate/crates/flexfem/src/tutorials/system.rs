//! Coupled two-field system on the box (-1, 1)^d:
//!
//!   du/dt - laplace(u) + u^2   = f      (degree 1 in space, BDF1 in time)
//!   dv/dt - laplace(v) + u v   = g      (degree 2 in space, BDF3 in time)
//!
//! The u equation drives the v equation through the reaction coefficient.
//! Two solution strategies share all the assembly code: a monolithic block
//! Newton iteration on (u, v), and a partitioned step that first advances u
//! alone and then solves the v equation linearly with the BDF-extrapolated
//! coefficient u*. The distance between the two grows like the first power
//! of the step size, which the gap study measures.

use super::{boundary_constraints, AppContext, CoreModel, RunSummary, TutorialError};
use crate::fem::{
    assemble_system, assemble_vector, build_space, error_norm, gauss_quadrature, reinit_cell,
    Constraints, ErrorNorm, FeSpace, Quadrature,
};
use crate::linalg::{solve, CsrMatrix, DVector, PreconditionerConfig, SolverConfig, SolverType};
use crate::mesh::{generate_box, Point};
use crate::nonlinear::{newton_solve, NewtonConfig, NonlinearError};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use crate::timeint::{BdfState, TimeConfig};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingScheme {
    /// One Newton iteration per step on the stacked (u, v) unknowns.
    #[default]
    Monolithic,
    /// Advance u first, then solve the v equation with the extrapolated
    /// coefficient u*; cheaper, but splits the coupling to first order.
    Partitioned,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ManufacturedCase {
    /// u = v = t prod_d x_d. Both fields sit in their spaces exactly, so
    /// every remaining error is a time-coupling effect; used by the gap
    /// study.
    #[default]
    Product,
    /// u = t prod sin(pi x_d) outside the degree-1 space, v = t prod x_d
    /// inside the degree-2 space: isolates the spatial rate of u.
    URate,
    /// u = t prod x_d inside the degree-1 space (solved to round-off, so it
    /// cannot pollute v), v = t prod sin(pi x_d): isolates the rate of v.
    VRate,
}

fn product(dim: usize, p: &Point) -> f64 {
    (0..dim).map(|d| p[d]).product()
}

fn sine(dim: usize, p: &Point) -> f64 {
    (0..dim)
        .map(|d| (std::f64::consts::PI * p[d]).sin())
        .product()
}

impl ManufacturedCase {
    pub fn u(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            ManufacturedCase::Product | ManufacturedCase::VRate => t * product(dim, p),
            ManufacturedCase::URate => t * sine(dim, p),
        }
    }

    pub fn v(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            ManufacturedCase::Product | ManufacturedCase::URate => t * product(dim, p),
            ManufacturedCase::VRate => t * sine(dim, p),
        }
    }

    /// du/dt - laplace(u) + u^2; the product is harmonic, the sine product
    /// has laplace = -dim pi^2 times itself.
    pub fn f(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            ManufacturedCase::Product | ManufacturedCase::VRate => {
                let q = product(dim, p);
                q + (t * q).powi(2)
            }
            ManufacturedCase::URate => {
                let s = sine(dim, p);
                s + dim as f64 * std::f64::consts::PI.powi(2) * t * s + (t * s).powi(2)
            }
        }
    }

    /// dv/dt - laplace(v) + u v.
    pub fn g(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            ManufacturedCase::Product => {
                let q = product(dim, p);
                q + (t * q).powi(2)
            }
            ManufacturedCase::URate => {
                let q = product(dim, p);
                q + t * sine(dim, p) * t * q
            }
            ManufacturedCase::VRate => {
                let s = sine(dim, p);
                s + dim as f64 * std::f64::consts::PI.powi(2) * t * s
                    + t * product(dim, p) * t * s
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub dim: usize,
    pub subdivisions: usize,
    pub degree_u: usize,
    pub degree_v: usize,
    /// Step size, horizon and the BDF order of the u field.
    pub time: TimeConfig,
    pub bdf_order_v: usize,
    pub scheme: CouplingScheme,
    pub case: ManufacturedCase,
    pub newton: NewtonConfig,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
    pub output_basename: String,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            subdivisions: 8,
            degree_u: 1,
            degree_v: 2,
            time: TimeConfig {
                bdf_order: 1,
                initial_time: 0.0,
                final_time: 1.0,
                time_step: 0.1,
            },
            bdf_order_v: 3,
            scheme: CouplingScheme::Monolithic,
            case: ManufacturedCase::Product,
            newton: NewtonConfig {
                tolerance_residual: 1e-10,
                tolerance_increment: 1e-10,
                ..NewtonConfig::default()
            },
            solver: SolverConfig {
                solver_type: SolverType::BiCgStab,
                tolerance: 1e-12,
                max_iterations: 20_000,
                ..SolverConfig::default()
            },
            preconditioner: PreconditionerConfig::Jacobi,
            output_basename: "system".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SystemResult {
    pub n_dofs_u: usize,
    pub n_dofs_v: usize,
    pub steps_run: usize,
    pub final_l2_u: f64,
    pub final_l2_v: f64,
    pub final_u: DVector,
    pub final_v: DVector,
    pub total_newton_iterations: usize,
    pub outputs: Vec<PathBuf>,
}

fn nodal_interpolant(space: &FeSpace, f: &dyn Fn(&Point) -> f64) -> DVector {
    let mut out = DVector::zeros(space.n_dofs());
    for dof in 0..space.n_dofs() {
        out[dof] = f(&space.support_point(dof));
    }
    out
}

/// Residual (and optionally the block Jacobian) of the fully implicit step
/// at the stacked iterate x = [u; v].
#[allow(clippy::too_many_arguments)]
fn assemble_monolithic(
    space_u: &FeSpace,
    space_v: &FeSpace,
    quadrature: &Quadrature,
    x: &DVector,
    combo_u: &DVector,
    combo_v: &DVector,
    a0u: f64,
    a0v: f64,
    t: f64,
    case: ManufacturedCase,
    want_jacobian: bool,
) -> (DVector, Option<CsrMatrix>) {
    let dim = space_u.mesh().dim();
    let n_u = space_u.n_dofs();
    let n = n_u + space_v.n_dofs();
    let mut residual = DVector::zeros(n);
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();

    for cell in 0..space_u.mesh().n_cells() {
        let values_u = reinit_cell(space_u, cell, quadrature);
        let values_v = reinit_cell(space_v, cell, quadrature);
        let dofs_u = space_u.cell_dofs(cell);
        let dofs_v = space_v.cell_dofs(cell);
        let u_c: Vec<f64> = dofs_u.iter().map(|&d| x[d]).collect();
        let v_c: Vec<f64> = dofs_v.iter().map(|&d| x[n_u + d]).collect();
        let cu_c = space_u.cell_dof_values(cell, combo_u);
        let cv_c = space_v.cell_dof_values(cell, combo_v);

        for q in 0..quadrature.len() {
            let w = values_u.jxw(q);
            let p = values_u.point(q);
            let u_q = values_u.function_value(&u_c, q);
            let v_q = values_v.function_value(&v_c, q);
            let grad_u = values_u.function_gradient(&u_c, q);
            let grad_v = values_v.function_gradient(&v_c, q);
            let ru = a0u * u_q - values_u.function_value(&cu_c, q) + u_q * u_q
                - case.f(dim, t, p);
            let rv = a0v * v_q - values_v.function_value(&cv_c, q) + u_q * v_q
                - case.g(dim, t, p);

            for (i, &dof_i) in dofs_u.iter().enumerate() {
                let grad_i = values_u.shape_grad(i, q);
                let dot: f64 = (0..dim).map(|d| grad_u[d] * grad_i[d]).sum();
                residual[dof_i] += w * (ru * values_u.shape_value(i, q) + dot);
            }
            for (i, &dof_i) in dofs_v.iter().enumerate() {
                let grad_i = values_v.shape_grad(i, q);
                let dot: f64 = (0..dim).map(|d| grad_v[d] * grad_i[d]).sum();
                residual[n_u + dof_i] += w * (rv * values_v.shape_value(i, q) + dot);
            }

            if want_jacobian {
                for (i, &dof_i) in dofs_u.iter().enumerate() {
                    let grad_i = values_u.shape_grad(i, q);
                    let phi_i = values_u.shape_value(i, q);
                    for (j, &dof_j) in dofs_u.iter().enumerate() {
                        let grad_j = values_u.shape_grad(j, q);
                        let stiff: f64 = (0..dim).map(|d| grad_i[d] * grad_j[d]).sum();
                        triplets.push((
                            dof_i,
                            dof_j,
                            w * (stiff + (a0u + 2.0 * u_q) * phi_i * values_u.shape_value(j, q)),
                        ));
                    }
                }
                for (i, &dof_i) in dofs_v.iter().enumerate() {
                    let grad_i = values_v.shape_grad(i, q);
                    let phi_i = values_v.shape_value(i, q);
                    for (j, &dof_j) in dofs_v.iter().enumerate() {
                        let grad_j = values_v.shape_grad(j, q);
                        let stiff: f64 = (0..dim).map(|d| grad_i[d] * grad_j[d]).sum();
                        triplets.push((
                            n_u + dof_i,
                            n_u + dof_j,
                            w * (stiff + (a0v + u_q) * phi_i * values_v.shape_value(j, q)),
                        ));
                    }
                    // Coupling block: d(u v, phi_v)/du.
                    for (j, &dof_j) in dofs_u.iter().enumerate() {
                        triplets.push((
                            n_u + dof_i,
                            dof_j,
                            w * v_q * phi_i * values_u.shape_value(j, q),
                        ));
                    }
                }
            }
        }
    }
    let jacobian =
        want_jacobian.then(|| CsrMatrix::from_triplets(n, n, &triplets));
    (residual, jacobian)
}

/// Residual (and optionally the Jacobian) of the u equation alone.
#[allow(clippy::too_many_arguments)]
fn assemble_u_equation(
    space_u: &FeSpace,
    quadrature: &Quadrature,
    u: &DVector,
    combo_u: &DVector,
    a0u: f64,
    t: f64,
    case: ManufacturedCase,
    want_jacobian: bool,
) -> Result<(DVector, Option<CsrMatrix>), crate::fem::FemError> {
    let dim = space_u.mesh().dim();
    if want_jacobian {
        let unconstrained = Constraints::new();
        let (matrix, rhs) = assemble_system(
            space_u,
            quadrature,
            |cell, values, local| {
                let u_c = space_u.cell_dof_values(cell, u);
                let cu_c = space_u.cell_dof_values(cell, combo_u);
                for q in 0..values.n_q_points() {
                    let w = values.jxw(q);
                    let u_q = values.function_value(&u_c, q);
                    let grad_u = values.function_gradient(&u_c, q);
                    let ru = a0u * u_q - values.function_value(&cu_c, q) + u_q * u_q
                        - case.f(dim, t, values.point(q));
                    for i in 0..values.n_shape_functions() {
                        let grad_i = values.shape_grad(i, q);
                        let dot: f64 = (0..dim).map(|d| grad_u[d] * grad_i[d]).sum();
                        local.add_rhs(i, w * (ru * values.shape_value(i, q) + dot));
                        for j in 0..values.n_shape_functions() {
                            let grad_j = values.shape_grad(j, q);
                            let stiff: f64 = (0..dim).map(|d| grad_i[d] * grad_j[d]).sum();
                            local.add(
                                i,
                                j,
                                w * (stiff
                                    + (a0u + 2.0 * u_q)
                                        * values.shape_value(i, q)
                                        * values.shape_value(j, q)),
                            );
                        }
                    }
                }
            },
            &unconstrained,
        )?;
        Ok((rhs, Some(matrix)))
    } else {
        let rhs = assemble_vector(space_u, quadrature, |cell, values, local| {
            let u_c = space_u.cell_dof_values(cell, u);
            let cu_c = space_u.cell_dof_values(cell, combo_u);
            for q in 0..values.n_q_points() {
                let w = values.jxw(q);
                let u_q = values.function_value(&u_c, q);
                let grad_u = values.function_gradient(&u_c, q);
                let ru = a0u * u_q - values.function_value(&cu_c, q) + u_q * u_q
                    - case.f(dim, t, values.point(q));
                for (i, entry) in local.iter_mut().enumerate() {
                    let grad_i = values.shape_grad(i, q);
                    let dot: f64 = (0..dim).map(|d| grad_u[d] * grad_i[d]).sum();
                    *entry += w * (ru * values.shape_value(i, q) + dot);
                }
            }
        })?;
        Ok((rhs, None))
    }
}

pub(crate) fn linear_solver_callback<'a>(
    config: &'a SolverConfig,
    preconditioner: &'a PreconditionerConfig,
) -> impl FnMut(&CsrMatrix, &DVector, f64) -> Result<DVector, NonlinearError> + 'a {
    move |matrix, rhs, rel_tol| {
        let linear = SolverConfig {
            tolerance: if rel_tol > 0.0 { rel_tol } else { config.tolerance },
            ..config.clone()
        };
        let (x, report) = solve(matrix, rhs, None, &linear, preconditioner)
            .map_err(|e| NonlinearError::Callback(e.to_string()))?;
        if !report.converged {
            return Err(NonlinearError::Callback(format!(
                "inner linear solve stalled at residual {:.3e} (rhs norm {:.3e}, {} iterations, {})",
                report.final_residual,
                rhs.norm(),
                report.iterations,
                report.reason.as_deref().unwrap_or("no reason recorded"),
            )));
        }
        Ok(x)
    }
}

pub fn run_tutorial06(
    config: &SystemConfig,
    output_dir: Option<&Path>,
) -> Result<SystemResult, TutorialError> {
    let dim = config.dim;
    let lower = vec![-1.0; dim];
    let upper = vec![1.0; dim];
    let mesh = Arc::new(generate_box(
        dim,
        &lower,
        &upper,
        &vec![config.subdivisions; dim],
    )?);
    let space_u = build_space(Arc::clone(&mesh), config.degree_u, 1)?;
    let space_v = build_space(Arc::clone(&mesh), config.degree_v, 1)?;
    let quadrature = gauss_quadrature(dim, config.degree_v + 2)?;
    let case = config.case;
    let dt = config.time.time_step;
    let n_steps = config.time.n_steps();
    let n_u = space_u.n_dofs();
    let n_v = space_v.n_dofs();

    let bootstrap = |space: &FeSpace, order: usize, field: &dyn Fn(usize, f64, &Point) -> f64| {
        (0..order)
            .map(|j| {
                let t = config.time.initial_time - j as f64 * dt;
                nodal_interpolant(space, &|p: &Point| field(dim, t, p))
            })
            .collect::<Vec<_>>()
    };
    let mut bdf_u = BdfState::new(
        config.time.bdf_order,
        bootstrap(&space_u, config.time.bdf_order, &|d, t, p| case.u(d, t, p)),
        dt,
    )?;
    let mut bdf_v = BdfState::new(
        config.bdf_order_v,
        bootstrap(&space_v, config.bdf_order_v, &|d, t, p| case.v(d, t, p)),
        dt,
    )?;
    let a0u = bdf_u.alpha()[0] / dt;
    let a0v = bdf_v.alpha()[0] / dt;

    let mut total_newton_iterations = 0;
    let mut error_rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    let mut outputs = Vec::new();

    for step in 0..n_steps {
        let t_next = config.time.initial_time + (step + 1) as f64 * dt;
        let (_, combo_u) = bdf_u.time_derivative_term();
        let (_, combo_v) = bdf_v.time_derivative_term();
        let bc_u = boundary_constraints(&space_u, &|p: &Point| case.u(dim, t_next, p))?;
        let bc_v = boundary_constraints(&space_v, &|p: &Point| case.v(dim, t_next, p))?;

        match config.scheme {
            CouplingScheme::Monolithic => {
                let mut zero_update = Constraints::new();
                for (dof, _) in bc_u.iter() {
                    zero_update.fix(dof, 0.0);
                }
                for (dof, _) in bc_v.iter() {
                    zero_update.fix(n_u + dof, 0.0);
                }

                let mut pred_u = bdf_u.extrapolate();
                crate::fem::apply_dirichlet_to_vector(&bc_u, &mut pred_u);
                let mut pred_v = bdf_v.extrapolate();
                crate::fem::apply_dirichlet_to_vector(&bc_v, &mut pred_v);
                let mut x0 = DVector::zeros(n_u + n_v);
                for i in 0..n_u {
                    x0[i] = pred_u[i];
                }
                for i in 0..n_v {
                    x0[n_u + i] = pred_v[i];
                }

                let assemble = |x: &DVector,
                                want_jacobian: bool|
                 -> Result<(DVector, Option<CsrMatrix>), NonlinearError> {
                    let (mut residual, jacobian) = assemble_monolithic(
                        &space_u,
                        &space_v,
                        &quadrature,
                        x,
                        &combo_u,
                        &combo_v,
                        a0u,
                        a0v,
                        t_next,
                        case,
                        want_jacobian,
                    );
                    match jacobian {
                        Some(mut matrix) => {
                            zero_update.condense_system(&mut matrix, &mut residual);
                            Ok((residual, Some(matrix)))
                        }
                        None => {
                            for (dof, _) in zero_update.iter() {
                                residual[dof] = 0.0;
                            }
                            Ok((residual, None))
                        }
                    }
                };
                let solve_cb = linear_solver_callback(&config.solver, &config.preconditioner);
                let (solution, report) = newton_solve(&x0, assemble, solve_cb, &config.newton)?;
                if !report.converged {
                    return Err(TutorialError::Run(format!(
                        "block Newton stalled at step {step} (last residual {:.3e})",
                        report.residual_norms.last().copied().unwrap_or(f64::NAN)
                    )));
                }
                total_newton_iterations += report.iterations;

                let mut u_new = DVector::zeros(n_u);
                for i in 0..n_u {
                    u_new[i] = solution[i];
                }
                let mut v_new = DVector::zeros(n_v);
                for i in 0..n_v {
                    v_new[i] = solution[n_u + i];
                }
                bdf_u.advance(u_new);
                bdf_v.advance(v_new);
            }
            CouplingScheme::Partitioned => {
                // The v equation sees the extrapolated u*, never the value
                // from the u solve below; the schemes stay genuinely split.
                let u_star = bdf_u.extrapolate();

                let mut zero_update = Constraints::new();
                for (dof, _) in bc_u.iter() {
                    zero_update.fix(dof, 0.0);
                }
                let mut pred_u = bdf_u.extrapolate();
                crate::fem::apply_dirichlet_to_vector(&bc_u, &mut pred_u);
                let assemble = |u: &DVector,
                                want_jacobian: bool|
                 -> Result<(DVector, Option<CsrMatrix>), NonlinearError> {
                    let (mut residual, jacobian) = assemble_u_equation(
                        &space_u,
                        &quadrature,
                        u,
                        &combo_u,
                        a0u,
                        t_next,
                        case,
                        want_jacobian,
                    )
                    .map_err(|e| NonlinearError::Callback(e.to_string()))?;
                    match jacobian {
                        Some(mut matrix) => {
                            zero_update.condense_system(&mut matrix, &mut residual);
                            Ok((residual, Some(matrix)))
                        }
                        None => {
                            for (dof, _) in zero_update.iter() {
                                residual[dof] = 0.0;
                            }
                            Ok((residual, None))
                        }
                    }
                };
                let solve_cb = linear_solver_callback(&config.solver, &config.preconditioner);
                let (u_new, report) = newton_solve(&pred_u, assemble, solve_cb, &config.newton)?;
                if !report.converged {
                    return Err(TutorialError::Run(format!(
                        "u-field Newton stalled at step {step} (last residual {:.3e})",
                        report.residual_norms.last().copied().unwrap_or(f64::NAN)
                    )));
                }
                total_newton_iterations += report.iterations;
                bdf_u.advance(u_new);

                // Linear v solve with the frozen coefficient u*.
                let unconstrained = Constraints::new();
                let (mut matrix, mut rhs) = assemble_system(
                    &space_v,
                    &quadrature,
                    |cell, values, local| {
                        let us_c = space_u.cell_dof_values(cell, &u_star);
                        let values_u = reinit_cell(&space_u, cell, &quadrature);
                        let cv_c = space_v.cell_dof_values(cell, &combo_v);
                        for q in 0..values.n_q_points() {
                            let w = values.jxw(q);
                            let us_q = values_u.function_value(&us_c, q);
                            let source = case.g(dim, t_next, values.point(q))
                                + values.function_value(&cv_c, q);
                            for i in 0..values.n_shape_functions() {
                                let grad_i = values.shape_grad(i, q);
                                local.add_rhs(i, w * source * values.shape_value(i, q));
                                for j in 0..values.n_shape_functions() {
                                    let grad_j = values.shape_grad(j, q);
                                    let stiff: f64 =
                                        (0..dim).map(|d| grad_i[d] * grad_j[d]).sum();
                                    local.add(
                                        i,
                                        j,
                                        w * (stiff
                                            + (a0v + us_q)
                                                * values.shape_value(i, q)
                                                * values.shape_value(j, q)),
                                    );
                                }
                            }
                        }
                    },
                    &unconstrained,
                )?;
                bc_v.condense_system(&mut matrix, &mut rhs);
                let (v_new, report) = solve(
                    &matrix,
                    &rhs,
                    None,
                    &config.solver,
                    &config.preconditioner,
                )?;
                if !report.converged {
                    return Err(TutorialError::Run(format!(
                        "v-field solve stalled at step {step} (residual {:.3e})",
                        report.final_residual
                    )));
                }
                bdf_v.advance(v_new);
            }
        }

        let exact_u = |p: &Point| case.u(dim, t_next, p);
        let exact_v = |p: &Point| case.v(dim, t_next, p);
        let l2_u = error_norm(&space_u, bdf_u.latest(), &exact_u, ErrorNorm::L2, &quadrature)?;
        let l2_v = error_norm(&space_v, bdf_v.latest(), &exact_v, ErrorNorm::L2, &quadrature)?;
        error_rows.push((step + 1, t_next, l2_u, l2_v));
    }

    if let Some(dir) = output_dir {
        let vtk_u = dir.join(format!("{}_u.vtk", config.output_basename));
        crate::io::vtk_write(
            &vtk_u,
            &space_u,
            &[("u", bdf_u.latest())],
            Some(config.time.final_time),
        )?;
        let vtk_v = dir.join(format!("{}_v.vtk", config.output_basename));
        crate::io::vtk_write(
            &vtk_v,
            &space_v,
            &[("v", bdf_v.latest())],
            Some(config.time.final_time),
        )?;
        outputs.push(vtk_u);
        outputs.push(vtk_v);

        let mut table = crate::io::CsvTable::new(["step", "time", "l2_error_u", "l2_error_v"]);
        for (step, t, l2_u, l2_v) in &error_rows {
            table.push_row([
                step.to_string(),
                crate::io::format_numeric(*t, 12),
                crate::io::format_numeric(*l2_u, 12),
                crate::io::format_numeric(*l2_v, 12),
            ])?;
        }
        let csv = dir.join(format!("{}_errors.csv", config.output_basename));
        crate::io::csv_write(&csv, &table, 12)?;
        outputs.push(csv);
    }

    let (final_l2_u, final_l2_v) = error_rows
        .last()
        .map(|(_, _, a, b)| (*a, *b))
        .unwrap_or((0.0, 0.0));
    Ok(SystemResult {
        n_dofs_u: n_u,
        n_dofs_v: n_v,
        steps_run: n_steps,
        final_l2_u,
        final_l2_v,
        final_u: bdf_u.latest().clone(),
        final_v: bdf_v.latest().clone(),
        total_newton_iterations,
        outputs,
    })
}

/// Distance at the final time between the monolithic and the partitioned v
/// field, one entry per step size. With the product solution both schemes
/// are spatially exact, so the gap isolates the first-order splitting error.
pub fn scheme_gap(
    base: &SystemConfig,
    step_sizes: &[f64],
) -> Result<Vec<(f64, f64)>, TutorialError> {
    step_sizes
        .iter()
        .map(|&dt| {
            let time = TimeConfig {
                time_step: dt,
                ..base.time
            };
            let monolithic = run_tutorial06(
                &SystemConfig {
                    scheme: CouplingScheme::Monolithic,
                    time,
                    ..base.clone()
                },
                None,
            )?;
            let partitioned = run_tutorial06(
                &SystemConfig {
                    scheme: CouplingScheme::Partitioned,
                    time,
                    ..base.clone()
                },
                None,
            )?;
            let mut diff = monolithic.final_v.clone();
            diff.axpy(-1.0, &partitioned.final_v);
            Ok((dt, diff.norm()))
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Tutorial06 {
    config: SystemConfig,
    /// Set by the CLI dispatcher; parse_parameters keeps it.
    scheme_override: Option<CouplingScheme>,
}

impl Tutorial06 {
    pub fn with_scheme(scheme: CouplingScheme) -> Self {
        Self {
            config: SystemConfig::default(),
            scheme_override: Some(scheme),
        }
    }
}

const SECTION: &str = "Coupled system";

impl CoreModel for Tutorial06 {
    fn subsection_path(&self) -> &str {
        SECTION
    }

    fn declare_parameters(&self, tree: &mut ParamTree) -> Result<(), ParamError> {
        let defaults = SystemConfig::default();
        let mesh = format!("{SECTION}/Mesh");
        tree.declare(
            &mesh,
            "Dimension",
            "3",
            Validator::Integer { min: 1, max: 3 },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &mesh,
            "Number of subdivisions",
            "8",
            Validator::Integer {
                min: 1,
                max: i64::MAX,
            },
            Verbosity::Minimal,
            "",
        )?;
        let fe = format!("{SECTION}/Finite element");
        tree.declare(
            &fe,
            "Degree of u",
            "1",
            Validator::Integer { min: 1, max: 2 },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &fe,
            "Degree of v",
            "2",
            Validator::Integer { min: 1, max: 2 },
            Verbosity::Standard,
            "",
        )?;
        crate::timeint::declare_time_parameters(tree, &format!("{SECTION}/Time"), &defaults.time)?;
        tree.declare(
            &format!("{SECTION}/Time"),
            "BDF order of v",
            "3",
            Validator::Integer { min: 1, max: 3 },
            Verbosity::Minimal,
            "The order declared above applies to u",
        )?;
        tree.declare(
            SECTION,
            "Coupling scheme",
            "Monolithic",
            Validator::selection(["Monolithic", "Partitioned"]),
            Verbosity::Minimal,
            "",
        )?;
        tree.declare(
            SECTION,
            "Manufactured case",
            "Product",
            Validator::selection(["Product", "URate", "VRate"]),
            Verbosity::Standard,
            "",
        )?;
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
        let fe = format!("{SECTION}/Finite element");
        let (newton, _) = crate::nonlinear::parse_newton_parameters(tree, SECTION)?;
        let (solver, preconditioner) =
            crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        let scheme = match tree.get(SECTION, "Coupling scheme")? {
            "Partitioned" => CouplingScheme::Partitioned,
            _ => CouplingScheme::Monolithic,
        };
        self.config = SystemConfig {
            dim: tree.get_usize(&mesh, "Dimension")?,
            subdivisions: tree.get_usize(&mesh, "Number of subdivisions")?,
            degree_u: tree.get_usize(&fe, "Degree of u")?,
            degree_v: tree.get_usize(&fe, "Degree of v")?,
            time: crate::timeint::parse_time_parameters(tree, &format!("{SECTION}/Time"))?,
            bdf_order_v: tree.get_usize(&format!("{SECTION}/Time"), "BDF order of v")?,
            scheme: self.scheme_override.unwrap_or(scheme),
            case: match tree.get(SECTION, "Manufactured case")? {
                "URate" => ManufacturedCase::URate,
                "VRate" => ManufacturedCase::VRate,
                _ => ManufacturedCase::Product,
            },
            newton,
            solver,
            preconditioner,
            output_basename: "system".to_string(),
        };
        Ok(())
    }

    fn run(&mut self, context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial06(&self.config, Some(&context.output_dir))?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs_u".to_string(), result.n_dofs_u as f64),
                ("n_dofs_v".to_string(), result.n_dofs_v as f64),
                ("steps".to_string(), result.steps_run as f64),
                ("final_l2_error_u".to_string(), result.final_l2_u),
                ("final_l2_error_v".to_string(), result.final_l2_v),
                (
                    "newton_iterations".to_string(),
                    result.total_newton_iterations as f64,
                ),
            ],
            outputs: result.outputs,
        })
    }
}
