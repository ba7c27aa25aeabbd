//! Mixed-form Cahn-Hilliard phase separation on the unit square:
//!
//!   dc/dt - laplace(mu)          = 0
//!   mu - f'(c) + lambda laplace(c) = 0
//!
//! with the double well f(c) = theta c^2 (1-c)^2 and homogeneous natural
//! boundary conditions on both fields. Taking psi = 1 in the weak c-equation
//! shows that the solver conserves the total amount of c to the tolerance of
//! the nonlinear iteration, which the tests pin down.
//!
//! Both fields share one bilinear space with two interleaved components per
//! node (c first). Each implicit Euler step is solved by Newton with a
//! Jacobian differentiated forward-mode per cell; the step size halves when
//! Newton fails and grows again after success, which rides out the stiff
//! early spinodal transient without hand-tuning.

use super::system::linear_solver_callback;
use super::{AppContext, CoreModel, RunSummary, TutorialError};
use crate::fem::{
    assemble_vector, build_space, build_sparsity, gauss_quadrature, reinit_cell, FeSpace,
    Quadrature,
};
use crate::linalg::{CsrMatrix, DVector, PreconditionerConfig, SolverConfig, SolverType};
use crate::mesh::generate_box;
use crate::nonlinear::{newton_solve, Dual, NewtonConfig, NewtonVariant, NonlinearError};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CahnHilliardConfig {
    pub subdivisions: usize,
    /// Height of the double well between the pure phases c = 0 and c = 1.
    pub theta: f64,
    /// Gradient-energy coefficient; sets the interface width.
    pub lambda: f64,
    pub seed: u64,
    /// The initial datum is c = 0.5 plus a uniform perturbation of this
    /// amplitude at every node.
    pub perturbation: f64,
    pub initial_time_step: f64,
    pub max_time_step: f64,
    /// Factor applied to the step size after a run of accepted steps.
    pub growth: f64,
    /// The run stops once the solution change per step and the change rate
    /// per unit time both drop below this; the rate guard keeps a shrunken
    /// step size from imitating a steady state.
    pub steady_tolerance: f64,
    pub max_steps: usize,
    pub newton: NewtonConfig,
    pub solver: SolverConfig,
    pub preconditioner: PreconditionerConfig,
    pub contour_levels: Vec<f64>,
    pub output_basename: String,
}

impl Default for CahnHilliardConfig {
    fn default() -> Self {
        Self {
            subdivisions: 32,
            theta: 100.0,
            lambda: 0.01,
            seed: 0,
            perturbation: 0.05,
            initial_time_step: 1e-5,
            max_time_step: 1.0,
            growth: 2.0,
            steady_tolerance: 1e-8,
            max_steps: 5000,
            newton: NewtonConfig {
                // One Jacobian per step attempt; with small steps the chord
                // iteration still contracts fast and assembly dominates cost.
                variant: NewtonVariant::FrozenJacobian,
                tolerance_residual: 1e-12,
                tolerance_increment: 1e-12,
                // Divergence shows quickly here; giving up early keeps the
                // cost of a rejected step attempt low.
                max_iterations: 12,
                ..NewtonConfig::default()
            },
            solver: SolverConfig {
                solver_type: SolverType::BiCgStab,
                tolerance: 1e-12,
                // Late Newton steps hand the solver right-hand sides close
                // to assembly round-off; the relative target alone would
                // then sit below the attainable floor.
                absolute_tolerance: 1e-16,
                // A stall should fail the step attempt quickly; the halved
                // retry is cheaper than a long hopeless iteration.
                max_iterations: 2500,
                ..SolverConfig::default()
            },
            preconditioner: PreconditionerConfig::Jacobi,
            contour_levels: vec![0.35, 0.5, 0.65],
            output_basename: "cahn_hilliard".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CahnHilliardResult {
    pub n_dofs: usize,
    pub steps_run: usize,
    pub final_time: f64,
    pub final_time_step: f64,
    pub reached_steady: bool,
    pub newton_failures: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Largest per-step change of the total mass, relative to the initial
    /// mass.
    pub max_relative_mass_drift: f64,
    pub min_c: f64,
    pub max_c: f64,
    /// Nodal concentration values at the end of the run.
    pub final_c: DVector,
    pub outputs: Vec<PathBuf>,
}

fn well_derivative(theta: f64, c: f64) -> f64 {
    2.0 * theta * c * (1.0 - c) * (1.0 - 2.0 * c)
}

fn well_derivative_dual(theta: f64, c: &Dual) -> Dual {
    let one_minus = &(-c) + 1.0;
    let one_minus_two = &(&(c * 2.0) * -1.0) + 1.0;
    &(&(c * &one_minus) * &one_minus_two) * (2.0 * theta)
}

/// c and mu nodal values out of the interleaved state vector.
fn split_state(state: &DVector) -> (DVector, DVector) {
    let n_nodes = state.len() / 2;
    let mut c = DVector::zeros(n_nodes);
    let mut mu = DVector::zeros(n_nodes);
    for node in 0..n_nodes {
        c[node] = state[2 * node];
        mu[node] = state[2 * node + 1];
    }
    (c, mu)
}

/// Weak residual of one implicit Euler step at the iterate `x`.
fn assemble_residual(
    space: &FeSpace,
    quadrature: &Quadrature,
    x: &DVector,
    c_old: &DVector,
    inv_dt: f64,
    theta: f64,
    lambda: f64,
) -> Result<DVector, crate::fem::FemError> {
    let dim = space.mesh().dim();
    assemble_vector(space, quadrature, |cell, values, local| {
        let nodes = space.cell_nodes(cell);
        let n = values.n_shape_functions();
        let c_c: Vec<f64> = nodes.iter().map(|&node| x[2 * node]).collect();
        let mu_c: Vec<f64> = nodes.iter().map(|&node| x[2 * node + 1]).collect();
        let co_c: Vec<f64> = nodes.iter().map(|&node| c_old[node]).collect();
        for q in 0..values.n_q_points() {
            let w = values.jxw(q);
            let c_q = values.function_value(&c_c, q);
            let mu_q = values.function_value(&mu_c, q);
            let co_q = values.function_value(&co_c, q);
            let grad_c = values.function_gradient(&c_c, q);
            let grad_mu = values.function_gradient(&mu_c, q);
            let rate = (c_q - co_q) * inv_dt;
            let chem = mu_q - well_derivative(theta, c_q);
            for i in 0..n {
                let phi = values.shape_value(i, q);
                let grad_i = values.shape_grad(i, q);
                let dot_mu: f64 = (0..dim).map(|d| grad_mu[d] * grad_i[d]).sum();
                let dot_c: f64 = (0..dim).map(|d| grad_c[d] * grad_i[d]).sum();
                local[2 * i] += w * (rate * phi + dot_mu);
                local[2 * i + 1] += w * (chem * phi - lambda * dot_c);
            }
        }
    })
}

/// Jacobian of [`assemble_residual`], differentiated per cell: every local
/// coefficient (both components) is seeded as an independent dual variable
/// and the local residual entries carry the full derivative row.
fn assemble_jacobian(
    space: &FeSpace,
    quadrature: &Quadrature,
    pattern: &crate::linalg::SparsityPattern,
    x: &DVector,
    inv_dt: f64,
    theta: f64,
    lambda: f64,
) -> CsrMatrix {
    let dim = space.mesh().dim();
    let mut matrix = CsrMatrix::zeros_from_pattern(pattern.clone());
    for cell in 0..space.mesh().n_cells() {
        let values = reinit_cell(space, cell, quadrature);
        let dofs = space.cell_dofs(cell);
        let width = dofs.len();
        let n = values.n_shape_functions();
        let coeffs: Vec<Dual> = dofs
            .iter()
            .enumerate()
            .map(|(k, &dof)| Dual::variable(x[dof], k, width))
            .collect();
        let mut local: Vec<Dual> = vec![Dual::constant(0.0, width); width];
        for q in 0..values.n_q_points() {
            let w = values.jxw(q);
            let mut c_q = Dual::constant(0.0, width);
            let mut mu_q = Dual::constant(0.0, width);
            let mut grad_c = vec![Dual::constant(0.0, width); dim];
            let mut grad_mu = vec![Dual::constant(0.0, width); dim];
            for i in 0..n {
                let phi = values.shape_value(i, q);
                let grad_i = values.shape_grad(i, q);
                c_q = &c_q + &(&coeffs[2 * i] * phi);
                mu_q = &mu_q + &(&coeffs[2 * i + 1] * phi);
                for d in 0..dim {
                    grad_c[d] = &grad_c[d] + &(&coeffs[2 * i] * grad_i[d]);
                    grad_mu[d] = &grad_mu[d] + &(&coeffs[2 * i + 1] * grad_i[d]);
                }
            }
            let rate = &c_q * inv_dt;
            let chem = &mu_q - &well_derivative_dual(theta, &c_q);
            for i in 0..n {
                let phi = values.shape_value(i, q);
                let grad_i = values.shape_grad(i, q);
                let mut dot_mu = Dual::constant(0.0, width);
                let mut dot_c = Dual::constant(0.0, width);
                for d in 0..dim {
                    dot_mu = &dot_mu + &(&grad_mu[d] * grad_i[d]);
                    dot_c = &dot_c + &(&grad_c[d] * grad_i[d]);
                }
                // The c_old and inv_dt offsets are constants; they vanish
                // from the derivatives, so the rate term only needs c.
                local[2 * i] = &local[2 * i] + &(&(&(&rate * phi) + &dot_mu) * w);
                local[2 * i + 1] =
                    &local[2 * i + 1] + &(&(&(&chem * phi) - &(&dot_c * lambda)) * w);
            }
        }
        for (k, &gi) in dofs.iter().enumerate() {
            for (l, &gj) in dofs.iter().enumerate() {
                let v = local[k].derivative(l);
                if v != 0.0 {
                    matrix.add(gi, gj, v);
                }
            }
        }
    }
    matrix
}

/// Free energy of the current concentration field; a monotone decrease is a
/// useful health indicator in the per-step CSV.
fn free_energy(
    space: &FeSpace,
    quadrature: &Quadrature,
    c: &DVector,
    theta: f64,
    lambda: f64,
) -> f64 {
    let dim = space.mesh().dim();
    let mut energy = 0.0;
    for cell in 0..space.mesh().n_cells() {
        let values = reinit_cell(space, cell, quadrature);
        let c_c = space.cell_dof_values(cell, c);
        for q in 0..values.n_q_points() {
            let c_q = values.function_value(&c_c, q);
            let grad = values.function_gradient(&c_c, q);
            let grad_sq: f64 = (0..dim).map(|d| grad[d] * grad[d]).sum();
            let well = theta * (c_q * (1.0 - c_q)).powi(2);
            energy += values.jxw(q) * (well + 0.5 * lambda * grad_sq);
        }
    }
    energy
}

/// Line segments of the level set {c = level} on the node lattice, via
/// marching squares with the saddle cases disambiguated by the cell-center
/// average. Coordinates are physical.
pub fn contour_segments(
    space: &FeSpace,
    c: &DVector,
    level: f64,
) -> Vec<[f64; 4]> {
    let nx = space.mesh().subdivisions()[0] * space.degree() + 1;
    let ny = space.mesh().subdivisions()[1] * space.degree() + 1;
    let node = |ix: usize, iy: usize| ix + nx * iy;
    let corner = |ix: usize, iy: usize| {
        let p = space.node_point(node(ix, iy));
        (p[0], p[1], c[node(ix, iy)])
    };
    // Edge order: 0 bottom, 1 right, 2 top, 3 left.
    const SEGMENTS: [&[(usize, usize)]; 16] = [
        &[],
        &[(3, 0)],
        &[(0, 1)],
        &[(3, 1)],
        &[(1, 2)],
        &[], // saddle, resolved below
        &[(0, 2)],
        &[(3, 2)],
        &[(2, 3)],
        &[(0, 2)],
        &[], // saddle, resolved below
        &[(1, 2)],
        &[(3, 1)],
        &[(0, 1)],
        &[(3, 0)],
        &[],
    ];
    let mut out = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            let corners = [
                corner(ix, iy),
                corner(ix + 1, iy),
                corner(ix + 1, iy + 1),
                corner(ix, iy + 1),
            ];
            let mut case = 0usize;
            for (bit, &(_, _, v)) in corners.iter().enumerate() {
                if v > level {
                    case |= 1 << bit;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            // Endpoints of each cell edge, in corner indices.
            const EDGE_CORNERS: [(usize, usize); 4] = [(0, 1), (1, 2), (2, 3), (3, 0)];
            let crossing = |edge: usize| -> [f64; 2] {
                let (a, b) = EDGE_CORNERS[edge];
                let (xa, ya, va) = corners[a];
                let (xb, yb, vb) = corners[b];
                let t = ((level - va) / (vb - va)).clamp(0.0, 1.0);
                [xa + t * (xb - xa), ya + t * (yb - ya)]
            };
            let mut emit = |e0: usize, e1: usize, out: &mut Vec<[f64; 4]>| {
                let p0 = crossing(e0);
                let p1 = crossing(e1);
                out.push([p0[0], p0[1], p1[0], p1[1]]);
            };
            if case == 5 || case == 10 {
                let center = corners.iter().map(|&(_, _, v)| v).sum::<f64>() / 4.0;
                let center_inside = center > level;
                // Case 5 holds corners 0 and 2; a filled center joins them
                // into one band with the two outside corners cut off. Case
                // 10 is its mirror image.
                let band = (case == 5) == center_inside;
                if band {
                    emit(0, 1, &mut out);
                    emit(2, 3, &mut out);
                } else {
                    emit(3, 0, &mut out);
                    emit(1, 2, &mut out);
                }
            } else {
                for &(e0, e1) in SEGMENTS[case] {
                    emit(e0, e1, &mut out);
                }
            }
        }
    }
    out
}

pub fn run_tutorial07(
    config: &CahnHilliardConfig,
    output_dir: Option<&Path>,
) -> Result<CahnHilliardResult, TutorialError> {
    let n = config.subdivisions;
    let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[n, n])?);
    // One space carries the interleaved (c, mu) pair, the scalar twin serves
    // single-field evaluations and output.
    let space = build_space(Arc::clone(&mesh), 1, 2)?;
    let scalar = build_space(Arc::clone(&mesh), 1, 1)?;
    let quadrature = gauss_quadrature(2, 3)?;
    let pattern = build_sparsity(&space);
    let n_nodes = scalar.n_nodes();

    // Integral weights of the nodal basis: row sums of the mass matrix.
    let weights = assemble_vector(&scalar, &quadrature, |_, values, local| {
        for q in 0..values.n_q_points() {
            for (i, entry) in local.iter_mut().enumerate() {
                *entry += values.jxw(q) * values.shape_value(i, q);
            }
        }
    })?;
    let mass_of = |c: &DVector| weights.dot(c);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut c = DVector::zeros(n_nodes);
    for node in 0..n_nodes {
        let noise: f64 = if config.perturbation > 0.0 {
            rng.gen_range(-1.0..1.0)
        } else {
            0.0
        };
        c[node] = 0.5 + config.perturbation * noise;
    }
    let mut state = DVector::zeros(2 * n_nodes);
    for node in 0..n_nodes {
        state[2 * node] = c[node];
        state[2 * node + 1] = well_derivative(config.theta, c[node]);
    }

    let initial_mass = mass_of(&c);
    let mass_scale = initial_mass.abs().max(1.0);
    let mut mass_prev = initial_mass;
    let mut max_drift = 0.0f64;
    let mut time = 0.0;
    let mut dt = config.initial_time_step;
    let mut steps_run = 0;
    let mut newton_failures = 0;
    let mut reached_steady = false;
    let mut history: Vec<(usize, f64, f64, f64, f64, f64)> = Vec::new();
    // Previous accepted state and step size, for the secant predictor.
    let mut previous: Option<(DVector, f64)> = None;
    let mut successes_since_halving = 0usize;

    while steps_run < config.max_steps {
        let mut halvings = 0;
        let attempt: Result<DVector, String> = loop {
            let inv_dt = 1.0 / dt;
            // Extrapolating along the last accepted step gives Newton a
            // starting point that tracks the transient, which is what lets
            // the step size grow through the stiff early phase.
            let guess = match &previous {
                Some((state_prev, dt_prev)) => {
                    let mut guess = state.clone();
                    let scale = dt / dt_prev;
                    for i in 0..guess.len() {
                        guess[i] += scale * (state[i] - state_prev[i]);
                    }
                    guess
                }
                None => state.clone(),
            };
            let assemble = |x: &DVector,
                            want_jacobian: bool|
             -> Result<(DVector, Option<CsrMatrix>), NonlinearError> {
                let residual = assemble_residual(
                    &space,
                    &quadrature,
                    x,
                    &c,
                    inv_dt,
                    config.theta,
                    config.lambda,
                )
                .map_err(|e| NonlinearError::Callback(e.to_string()))?;
                let jacobian = want_jacobian.then(|| {
                    assemble_jacobian(
                        &space,
                        &quadrature,
                        &pattern,
                        x,
                        inv_dt,
                        config.theta,
                        config.lambda,
                    )
                });
                Ok((residual, jacobian))
            };
            let solve_cb = linear_solver_callback(&config.solver, &config.preconditioner);
            let failure = match newton_solve(&guess, assemble, solve_cb, &config.newton) {
                Ok((solution, report)) if report.converged => break Ok(solution),
                Ok((_, report)) => format!(
                    "Newton stalled after {} iterations, residuals {:?}",
                    report.iterations, report.residual_norms
                ),
                Err(e) => e.to_string(),
            };
            newton_failures += 1;
            halvings += 1;
            successes_since_halving = 0;
            if halvings > 5 {
                break Err(failure);
            }
            dt *= 0.5;
        };
        let solution = attempt.map_err(|failure| {
            TutorialError::Run(format!(
                "step {steps_run} failed after 5 step-size halvings \
                 (dt = {dt:.3e}, t = {time:.6}): {failure}"
            ))
        })?;

        time += dt;
        steps_run += 1;
        let (c_new, _) = split_state(&solution);
        let mut delta = c_new.clone();
        delta.axpy(-1.0, &c);
        let delta_norm = delta.norm();
        let mass = mass_of(&c_new);
        max_drift = max_drift.max((mass - mass_prev).abs() / mass_scale);
        mass_prev = mass;
        previous = Some((state, dt));
        state = solution;
        c = c_new;
        history.push((
            steps_run,
            time,
            dt,
            mass,
            delta_norm,
            free_energy(&scalar, &quadrature, &c, config.theta, config.lambda),
        ));

        if delta_norm < config.steady_tolerance && delta_norm / dt < config.steady_tolerance {
            reached_steady = true;
            break;
        }
        // Growing right after a failure rebuilds the same rejected step, so
        // the size only ratchets up after a few clean steps in a row.
        successes_since_halving += 1;
        if successes_since_halving >= 3 {
            dt = (dt * config.growth).min(config.max_time_step);
        }
    }

    let mut outputs = Vec::new();
    if let Some(dir) = output_dir {
        let (c_nodal, mu_nodal) = split_state(&state);
        let vtk = dir.join(format!("{}.vtk", config.output_basename));
        crate::io::vtk_write(
            &vtk,
            &scalar,
            &[("c", &c_nodal), ("mu", &mu_nodal)],
            Some(time),
        )?;
        outputs.push(vtk);

        let mut table =
            crate::io::CsvTable::new(["step", "time", "dt", "mass", "delta_c", "energy"]);
        for (step, t, dt, mass, delta, energy) in &history {
            table.push_row([
                step.to_string(),
                crate::io::format_numeric(*t, 12),
                crate::io::format_numeric(*dt, 12),
                crate::io::format_numeric(*mass, 12),
                crate::io::format_numeric(*delta, 12),
                crate::io::format_numeric(*energy, 12),
            ])?;
        }
        let csv = dir.join(format!("{}_history.csv", config.output_basename));
        crate::io::csv_write(&csv, &table, 12)?;
        outputs.push(csv);

        let mut contours = crate::io::CsvTable::new(["level", "x0", "y0", "x1", "y1"]);
        for &level in &config.contour_levels {
            for segment in contour_segments(&scalar, &c, level) {
                contours.push_row([
                    crate::io::format_numeric(level, 12),
                    crate::io::format_numeric(segment[0], 12),
                    crate::io::format_numeric(segment[1], 12),
                    crate::io::format_numeric(segment[2], 12),
                    crate::io::format_numeric(segment[3], 12),
                ])?;
            }
        }
        let contour_csv = dir.join(format!("{}_contours.csv", config.output_basename));
        crate::io::csv_write(&contour_csv, &contours, 12)?;
        outputs.push(contour_csv);
    }

    Ok(CahnHilliardResult {
        n_dofs: space.n_dofs(),
        steps_run,
        final_time: time,
        final_time_step: dt,
        reached_steady,
        newton_failures,
        initial_mass,
        final_mass: mass_prev,
        max_relative_mass_drift: max_drift,
        min_c: c.iter().copied().fold(f64::INFINITY, f64::min),
        max_c: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        final_c: c,
        outputs,
    })
}

#[derive(Debug, Default)]
pub struct Tutorial07 {
    config: CahnHilliardConfig,
}

const SECTION: &str = "Cahn-Hilliard";

impl CoreModel for Tutorial07 {
    fn subsection_path(&self) -> &str {
        SECTION
    }

    fn declare_parameters(&self, tree: &mut ParamTree) -> Result<(), ParamError> {
        let mesh = format!("{SECTION}/Mesh");
        tree.declare(
            &mesh,
            "Number of subdivisions",
            "32",
            Validator::Integer {
                min: 1,
                max: i64::MAX,
            },
            Verbosity::Minimal,
            "",
        )?;
        let physics = format!("{SECTION}/Physics");
        tree.declare(
            &physics,
            "Well height",
            "100",
            Validator::Real {
                min: 0.0,
                max: f64::INFINITY,
            },
            Verbosity::Minimal,
            "Coefficient theta of the double well theta c^2 (1-c)^2",
        )?;
        tree.declare(
            &physics,
            "Gradient energy coefficient",
            "0.01",
            Validator::Real {
                min: 0.0,
                max: f64::INFINITY,
            },
            Verbosity::Minimal,
            "",
        )?;
        let initial = format!("{SECTION}/Initial datum");
        tree.declare(
            &initial,
            "Seed",
            "0",
            Validator::Integer {
                min: 0,
                max: i64::MAX,
            },
            Verbosity::Minimal,
            "Seed of the random perturbation around c = 0.5",
        )?;
        tree.declare(
            &initial,
            "Perturbation amplitude",
            "0.05",
            Validator::Real { min: 0.0, max: 0.5 },
            Verbosity::Standard,
            "",
        )?;
        let stepping = format!("{SECTION}/Time stepping");
        tree.declare(
            &stepping,
            "Initial time step",
            "1e-5",
            Validator::Real {
                min: 0.0,
                max: f64::INFINITY,
            },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &stepping,
            "Maximum time step",
            "1",
            Validator::Real {
                min: 0.0,
                max: f64::INFINITY,
            },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &stepping,
            "Growth factor",
            "2",
            Validator::Real {
                min: 1.0,
                max: f64::INFINITY,
            },
            Verbosity::Full,
            "Step-size growth after an accepted step; failures halve it",
        )?;
        tree.declare(
            &stepping,
            "Steady state tolerance",
            "1e-8",
            Validator::Real {
                min: 0.0,
                max: f64::INFINITY,
            },
            Verbosity::Standard,
            "",
        )?;
        tree.declare(
            &stepping,
            "Max steps",
            "5000",
            Validator::Integer {
                min: 1,
                max: i64::MAX,
            },
            Verbosity::Full,
            "",
        )?;
        tree.declare(
            &format!("{SECTION}/Output"),
            "Contour levels",
            "0.35, 0.5, 0.65",
            Validator::AnyString,
            Verbosity::Full,
            "Comma-separated c values whose level sets are exported",
        )?;
        let defaults = CahnHilliardConfig::default();
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
        let physics = format!("{SECTION}/Physics");
        let initial = format!("{SECTION}/Initial datum");
        let stepping = format!("{SECTION}/Time stepping");
        let (newton, _) = crate::nonlinear::parse_newton_parameters(tree, SECTION)?;
        let (solver, preconditioner) =
            crate::linalg::solver_params::parse_solver_parameters(tree, SECTION)?;
        let levels_raw = tree.get(&format!("{SECTION}/Output"), "Contour levels")?;
        let contour_levels = levels_raw
            .split(',')
            .map(|part| part.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| {
                TutorialError::Run(format!("invalid contour level list: {levels_raw:?}"))
            })?;
        self.config = CahnHilliardConfig {
            subdivisions: tree.get_usize(&format!("{SECTION}/Mesh"), "Number of subdivisions")?,
            theta: tree.get_f64(&physics, "Well height")?,
            lambda: tree.get_f64(&physics, "Gradient energy coefficient")?,
            seed: tree.get_usize(&initial, "Seed")? as u64,
            perturbation: tree.get_f64(&initial, "Perturbation amplitude")?,
            initial_time_step: tree.get_f64(&stepping, "Initial time step")?,
            max_time_step: tree.get_f64(&stepping, "Maximum time step")?,
            growth: tree.get_f64(&stepping, "Growth factor")?,
            steady_tolerance: tree.get_f64(&stepping, "Steady state tolerance")?,
            max_steps: tree.get_usize(&stepping, "Max steps")?,
            newton,
            solver,
            preconditioner,
            contour_levels,
            output_basename: "cahn_hilliard".to_string(),
        };
        Ok(())
    }

    fn run(&mut self, context: &AppContext) -> Result<RunSummary, TutorialError> {
        let result = run_tutorial07(&self.config, Some(&context.output_dir))?;
        Ok(RunSummary {
            quantities: vec![
                ("n_dofs".to_string(), result.n_dofs as f64),
                ("steps".to_string(), result.steps_run as f64),
                ("final_time".to_string(), result.final_time),
                (
                    "reached_steady".to_string(),
                    if result.reached_steady { 1.0 } else { 0.0 },
                ),
                ("final_mass".to_string(), result.final_mass),
                (
                    "max_relative_mass_drift".to_string(),
                    result.max_relative_mass_drift,
                ),
                ("min_c".to_string(), result.min_c),
                ("max_c".to_string(), result.max_c),
            ],
            outputs: result.outputs,
        })
    }
}
