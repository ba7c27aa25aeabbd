//! Transient heat equation du/dt - laplace(u) = f on the unit box, advanced
//! with BDF time stepping. The system matrix (alpha_0/dt) M + A is assembled
//! once; each step only rebuilds the right-hand side and the boundary values.
//!
//! The app doubles as the checkpoint/restart reference: a restarted run
//! reproduces the condensed matrix and right-hand side of the original run
//! bit for bit, because assembly order and the t = t0 + (n+1) dt arithmetic
//! are both deterministic functions of the integer step index.

use super::{boundary_constraints, spd_solve, AppContext, CoreModel, RunSummary, TutorialError};
use crate::fem::{
    assemble_system, assemble_vector, gauss_quadrature, kernels, Constraints, ErrorNorm,
};
use crate::io::{checkpoint_load, checkpoint_save, Checkpoint, MeshDescriptor};
use crate::linalg::{DVector, PreconditionerConfig, SolverConfig};
use crate::mesh::Point;
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use crate::timeint::{BdfState, TimeConfig};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatCase {
    /// u = exp(-t) prod_d sin(pi x_d), f = (dim pi^2 - 1) u.
    Decaying,
    /// u = x independent of time, f = 0; the discrete solution must not move.
    Stationary,
}

impl HeatCase {
    pub fn value(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            HeatCase::Decaying => {
                (-t).exp()
                    * (0..dim)
                        .map(|d| (std::f64::consts::PI * p[d]).sin())
                        .product::<f64>()
            }
            HeatCase::Stationary => p[0],
        }
    }

    pub fn forcing(&self, dim: usize, t: f64, p: &Point) -> f64 {
        match self {
            HeatCase::Decaying => {
                (dim as f64 * std::f64::consts::PI.powi(2) - 1.0) * self.value(dim, t, p)
            }
            HeatCase::Stationary => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tutorial03Config {
    pub dim: usize,
    pub subdivisions: usize,
    pub degree: usize,
    pub time: TimeConfig,
    pub case: HeatCase,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
    /// Save a checkpoint after every n accepted steps (requires an output
    /// directory at run time).
    pub checkpoint_every: Option<usize>,
    pub restart_from: Option<PathBuf>,
    /// Record the condensed matrix and rhs of the step with this global
    /// index, bit for bit.
    pub capture_inputs_at: Option<usize>,
    pub output_basename: String,
}

impl Default for Tutorial03Config {
    fn default() -> Self {
        Self {
            dim: 2,
            subdivisions: 16,
            degree: 1,
            time: TimeConfig {
                bdf_order: 2,
                initial_time: 0.0,
                final_time: 1.0,
                time_step: 0.05,
            },
            case: HeatCase::Decaying,
            solver: SolverConfig {
                tolerance: 1e-12,
                max_iterations: 10_000,
                ..SolverConfig::default()
            },
            preconditioner: PreconditionerConfig::Jacobi,
            checkpoint_every: None,
            restart_from: None,
            capture_inputs_at: None,
            output_basename: "heat".to_string(),
        }
    }
}

/// Bit patterns of one step's condensed linear system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedInputs {
    pub matrix_bits: Vec<u64>,
    pub rhs_bits: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct Tutorial03Result {
    pub n_dofs: usize,
    pub steps_run: usize,
    pub final_l2_error: f64,
    pub max_l2_error: f64,
    pub final_solution: DVector,
    pub captured_inputs: Option<CapturedInputs>,
    pub outputs: Vec<PathBuf>,
}

fn mesh_descriptor(config: &Tutorial03Config) -> MeshDescriptor {
    MeshDescriptor {
        dim: config.dim,
        lower: vec![0.0; config.dim],
        upper: vec![1.0; config.dim],
        subdivisions: vec![config.subdivisions; config.dim],
        degree: config.degree,
        components: 1,
    }
}

pub fn run_tutorial03(
    config: &Tutorial03Config,
    output_dir: Option<&Path>,
) -> Result<Tutorial03Result, TutorialError> {
    let space =
        super::tutorial01::build_unit_box_space(config.dim, config.subdivisions, config.degree, 1)?;
    let quadrature = gauss_quadrature(config.dim, config.degree + 2)?;
    let dim = config.dim;
    let case = config.case;
    let dt = config.time.time_step;
    let order = config.time.bdf_order;
    let n_steps = config.time.n_steps();
    let descriptor = mesh_descriptor(config);

    // Either resume from a checkpoint or bootstrap the history by sampling
    // the exact solution at t0, t0 - dt, ... so every order starts at its
    // full accuracy.
    let (mut bdf, start_step) = match &config.restart_from {
        Some(path) => {
            let checkpoint = checkpoint_load(path)?;
            if checkpoint.mesh != descriptor {
                return Err(TutorialError::Run(format!(
                    "checkpoint mesh {:?} does not match the configured mesh",
                    checkpoint.mesh
                )));
            }
            if checkpoint.bdf_order != order || checkpoint.time_step != dt {
                return Err(TutorialError::Run(
                    "checkpoint BDF order or step size differs from the configuration"
                        .to_string(),
                ));
            }
            let history: Vec<DVector> = (0..order)
                .map(|j| {
                    checkpoint
                        .vector(&format!("u_{j}"))
                        .cloned()
                        .ok_or_else(|| {
                            TutorialError::Run(format!("checkpoint is missing history entry u_{j}"))
                        })
                })
                .collect::<Result<_, _>>()?;
            (BdfState::new(order, history, dt)?, checkpoint.step_index)
        }
        None => {
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
            (BdfState::new(order, history, dt)?, 0)
        }
    };
    if start_step >= n_steps {
        return Err(TutorialError::Run(format!(
            "restart step {start_step} is not before the final step {n_steps}"
        )));
    }

    let unconstrained = Constraints::new();
    let alpha0_over_dt = bdf.alpha()[0] / dt;
    let (system_matrix, _) = assemble_system(
        &space,
        &quadrature,
        |_cell, values, local| {
            kernels::add_mass(values, alpha0_over_dt, local);
            kernels::add_stiffness(values, 1.0, local);
        },
        &unconstrained,
    )?;
    let (mass_matrix, _) = assemble_system(
        &space,
        &quadrature,
        |_cell, values, local| kernels::add_mass(values, 1.0, local),
        &unconstrained,
    )?;

    let mut captured = None;
    let mut outputs = Vec::new();
    let mut max_l2_error = 0.0f64;
    let mut final_l2_error = 0.0;
    let mut error_rows: Vec<(usize, f64, f64)> = Vec::new();

    for step in start_step..n_steps {
        let t_next = config.time.initial_time + (step + 1) as f64 * dt;
        let (_, combo) = bdf.time_derivative_term();

        let mut rhs = assemble_vector(&space, &quadrature, |_cell, values, local| {
            for q in 0..values.n_q_points() {
                let w = values.jxw(q) * case.forcing(dim, t_next, values.point(q));
                for (i, entry) in local.iter_mut().enumerate() {
                    *entry += w * values.shape_value(i, q);
                }
            }
        })?;
        rhs.axpy(1.0, &mass_matrix.spmv(&combo));

        let bc = boundary_constraints(&space, &|p: &Point| case.value(dim, t_next, p))?;
        let mut matrix = system_matrix.clone();
        bc.condense_system(&mut matrix, &mut rhs);

        if config.capture_inputs_at == Some(step) {
            captured = Some(CapturedInputs {
                matrix_bits: matrix.values().iter().map(|v| v.to_bits()).collect(),
                rhs_bits: (0..rhs.len()).map(|i| rhs[i].to_bits()).collect(),
            });
        }

        let solution = spd_solve(&matrix, &rhs, &config.solver, &config.preconditioner)?;
        bdf.advance(solution);

        let exact_now = |p: &Point| case.value(dim, t_next, p);
        let l2 = crate::fem::error_norm(&space, bdf.latest(), &exact_now, ErrorNorm::L2, &quadrature)?;
        max_l2_error = max_l2_error.max(l2);
        final_l2_error = l2;
        error_rows.push((step + 1, t_next, l2));

        if let (Some(every), Some(dir)) = (config.checkpoint_every, output_dir) {
            if every > 0 && (step + 1) % every == 0 {
                let checkpoint = Checkpoint {
                    time: t_next,
                    step_index: step + 1,
                    time_step: dt,
                    bdf_order: order,
                    mesh: descriptor.clone(),
                    vectors: bdf
                        .history()
                        .enumerate()
                        .map(|(j, u)| (format!("u_{j}"), u.clone()))
                        .collect(),
                };
                let path = dir.join(format!(
                    "{}_step{}.fxcp",
                    config.output_basename,
                    step + 1
                ));
                checkpoint_save(&path, &checkpoint)?;
                outputs.push(path);
            }
        }
    }

    if let Some(dir) = output_dir {
        let vtk = dir.join(format!("{}.vtk", config.output_basename));
        crate::io::vtk_write(
            &vtk,
            &space,
            &[("u", bdf.latest())],
            Some(config.time.final_time),
        )?;
        outputs.push(vtk);

        let mut table = crate::io::CsvTable::new(["step", "time", "l2_error"]);
        for (step, t, l2) in &error_rows {
            table.push_row([
                step.to_string(),
                crate::io::format_numeric(*t, 12),
                crate::io::format_numeric(*l2, 12),
            ])?;
        }
        let csv = dir.join(format!("{}_errors.csv", config.output_basename));
        crate::io::csv_write(&csv, &table, 12)?;
        outputs.push(csv);
    }

    Ok(Tutorial03Result {
        n_dofs: space.n_dofs(),
        steps_run: n_steps - start_step,
        final_l2_error,
        max_l2_error,
        final_solution: bdf.latest().clone(),
        captured_inputs: captured,
        outputs,
    })
}

/// Errors at the final time against a small-step reference on the same mesh,
/// one entry per trial step size. Sharing the mesh cancels the spatial
/// discretisation error, so the pairs expose the pure time-stepping rate.
pub fn heat_time_refinement(
    base: &Tutorial03Config,
    step_sizes: &[f64],
    reference_divisor: usize,
) -> Result<Vec<(f64, f64)>, TutorialError> {
    let smallest = step_sizes
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let reference = run_tutorial03(
        &Tutorial03Config {
            time: TimeConfig {
                time_step: smallest / reference_divisor as f64,
                ..base.time
            },
            ..base.clone()
        },
        None,
    )?;
    step_sizes
        .iter()
        .map(|&dt| {
            let result = run_tutorial03(
                &Tutorial03Config {
                    time: TimeConfig {
                        time_step: dt,
                        ..base.time
                    },
                    ..base.clone()
                },
                None,
            )?;
            let mut diff = result.final_solution.clone();
            diff.axpy(-1.0, &reference.final_solution);
            Ok((dt, diff.norm()))
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct Tutorial03 {
    config: Tutorial03Config,
}

const SECTION: &str = "Heat";

impl CoreModel for Tutorial03 {
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
            &Tutorial03Config::default().time,
        )?;
        tree.declare(
            SECTION,
            "Exact solution",
            "Decaying",
            Validator::selection(["Decaying", "Stationary"]),
            Verbosity::Standard,
            "",
        )?;
        let checkpoint = format!("{SECTION}/Checkpoint");
        tree.declare(
            &checkpoint,
            "Every n steps",
            "0",
            Validator::Integer {
                min: 0,
                max: i64::MAX,
            },
            Verbosity::Full,
            "0 disables checkpointing",
        )?;
        tree.declare(
            &checkpoint,
            "Restart file",
            "",
            Validator::AnyString,
            Verbosity::Full,
            "Empty starts from the exact initial data",
        )?;
        let defaults = Tutorial03Config::default();
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
        let checkpoint = format!("{SECTION}/Checkpoint");
        let (solver, preconditioner) =
            crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        let every = tree.get_usize(&checkpoint, "Every n steps")?;
        let restart = tree.get(&checkpoint, "Restart file")?.trim().to_string();
        self.config = Tutorial03Config {
            dim: tree.get_usize(&mesh, "Dimension")?,
            subdivisions: tree.get_usize(&mesh, "Number of subdivisions")?,
            degree: tree.get_usize(&format!("{SECTION}/Finite element"), "Degree")?,
            time: crate::timeint::parse_time_parameters(tree, &format!("{SECTION}/Time"))?,
            case: match tree.get(SECTION, "Exact solution")? {
                "Stationary" => HeatCase::Stationary,
                _ => HeatCase::Decaying,
            },
            solver,
            preconditioner,
            checkpoint_every: (every > 0).then_some(every),
            restart_from: (!restart.is_empty()).then(|| PathBuf::from(restart)),
            capture_inputs_at: None,
            output_basename: "heat".to_string(),
        };
        Ok(())
    }

    fn run(&mut self, context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial03(&self.config, Some(&context.output_dir))?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs".to_string(), result.n_dofs as f64),
                ("steps".to_string(), result.steps_run as f64),
                ("final_l2_error".to_string(), result.final_l2_error),
                ("max_l2_error".to_string(), result.max_l2_error),
            ],
            outputs: result.outputs,
        })
    }
}
