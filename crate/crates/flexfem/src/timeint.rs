//! BDF time integration state: derivative term, extrapolation, and step
//! advance for orders 1 to 3 at constant step size.

use crate::linalg::DVector;
use crate::params::{ParamError, ParamTree, Validator, Verbosity};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeIntError {
    #[error("BDF order must be 1, 2, or 3, got {0}")]
    OrderOutOfRange(usize),
    #[error("time step must be positive, got {0}")]
    NonPositiveTimeStep(f64),
    #[error("expected {expected} bootstrap solutions, got {got}")]
    WrongBootstrapCount { expected: usize, got: usize },
    #[error("bootstrap solutions differ in length")]
    LengthMismatch,
}

/// Solves the small dense system for the exactness conditions; sizes are at
/// most 4x4, partial pivoting is plenty.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|i, j| a[*i][col].abs().partial_cmp(&a[*j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for col in row + 1..n {
            acc -= a[row][col] * x[col];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// BDF coefficients from polynomial exactness. With s = (t^{n+1} - t) / dt
/// the nodes are s_j = j; requiring (1/dt) sum_j alpha_j u(s_j) to equal
/// u'(t^{n+1}) for u = s^m, m = 0..=k gives sum_j alpha_j j^m = -[m == 1].
fn bdf_alpha(k: usize) -> Vec<f64> {
    let a: Vec<Vec<f64>> = (0..=k)
        .map(|m| (0..=k).map(|j| (j as f64).powi(m as i32)).collect())
        .collect();
    let mut rhs = vec![0.0; k + 1];
    rhs[1] = -1.0;
    solve_dense(a, rhs)
}

/// Extrapolation coefficients: sum_j beta_j u(s_j) = u(0) exactly for
/// polynomials of degree <= k - 1, with nodes s_j = j, j = 1..=k.
fn bdf_beta(k: usize) -> Vec<f64> {
    let a: Vec<Vec<f64>> = (0..k)
        .map(|m| (1..=k).map(|j| (j as f64).powi(m as i32)).collect())
        .collect();
    let mut rhs = vec![0.0; k];
    rhs[0] = 1.0;
    solve_dense(a, rhs)
}

/// Ring of the k most recent solutions plus the scheme coefficients.
///
/// The implicit step for du/dt = F reads
/// (alpha_0 / dt) u^{n+1} - rhs_history_combo = F(u^{n+1}).
#[derive(Debug, Clone)]
pub struct BdfState {
    order: usize,
    dt: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Most recent first: history[0] = u^n, history[1] = u^{n-1}, ...
    history: VecDeque<DVector>,
}

impl BdfState {
    /// `initial_solutions` are the k bootstrap values, most recent first.
    pub fn new(
        order: usize,
        initial_solutions: Vec<DVector>,
        dt: f64,
    ) -> Result<Self, TimeIntError> {
        if !(1..=3).contains(&order) {
            return Err(TimeIntError::OrderOutOfRange(order));
        }
        if !(dt > 0.0) {
            return Err(TimeIntError::NonPositiveTimeStep(dt));
        }
        if initial_solutions.len() != order {
            return Err(TimeIntError::WrongBootstrapCount {
                expected: order,
                got: initial_solutions.len(),
            });
        }
        if initial_solutions
            .iter()
            .any(|u| u.len() != initial_solutions[0].len())
        {
            return Err(TimeIntError::LengthMismatch);
        }
        Ok(Self {
            order,
            dt,
            alpha: bdf_alpha(order),
            beta: bdf_beta(order),
            history: initial_solutions.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// k+1 coefficients, alpha[0] belonging to the unknown u^{n+1}.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// k extrapolation coefficients for u^n, u^{n-1}, ...
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Most recent stored solution u^n.
    pub fn latest(&self) -> &DVector {
        &self.history[0]
    }

    /// The k stored solutions, most recent first.
    pub fn history(&self) -> impl Iterator<Item = &DVector> + '_ {
        self.history.iter()
    }

    /// Returns (alpha_0 / dt, -(1/dt) sum_{j>=1} alpha_j u^{n+1-j}); the
    /// time-derivative approximation is the first times u^{n+1} minus the
    /// second.
    pub fn time_derivative_term(&self) -> (f64, DVector) {
        let mut combo = DVector::zeros(self.history[0].len());
        for (j, u) in self.history.iter().enumerate() {
            combo.axpy(-self.alpha[j + 1] / self.dt, u);
        }
        (self.alpha[0] / self.dt, combo)
    }

    /// Order-k extrapolation of the history to t^{n+1}; exact for
    /// polynomial-in-time histories of degree <= k - 1.
    pub fn extrapolate(&self) -> DVector {
        let mut out = DVector::zeros(self.history[0].len());
        for (j, u) in self.history.iter().enumerate() {
            out.axpy(self.beta[j], u);
        }
        out
    }

    /// Prepends the accepted solution, dropping the oldest.
    pub fn advance(&mut self, u_new: DVector) {
        assert_eq!(u_new.len(), self.history[0].len());
        self.history.push_front(u_new);
        self.history.pop_back();
    }
}

/// Time-loop settings shared by the transient applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeConfig {
    pub bdf_order: usize,
    pub initial_time: f64,
    pub final_time: f64,
    pub time_step: f64,
}

impl TimeConfig {
    pub fn n_steps(&self) -> usize {
        ((self.final_time - self.initial_time) / self.time_step).round() as usize
    }
}

/// Declares "BDF order", "Initial time", "Final time", "Time step" in the
/// subsection `path`.
pub fn declare_time_parameters(
    tree: &mut ParamTree,
    path: &str,
    defaults: &TimeConfig,
) -> Result<(), ParamError> {
    tree.declare(
        path,
        "BDF order",
        &defaults.bdf_order.to_string(),
        Validator::Integer { min: 1, max: 3 },
        Verbosity::Minimal,
        "Order of the backward differentiation formula",
    )?;
    tree.declare(
        path,
        "Initial time",
        &defaults.initial_time.to_string(),
        Validator::any_real(),
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        path,
        "Final time",
        &defaults.final_time.to_string(),
        Validator::any_real(),
        Verbosity::Minimal,
        "",
    )?;
    tree.declare(
        path,
        "Time step",
        &format!("{:e}", defaults.time_step),
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        },
        Verbosity::Minimal,
        "",
    )?;
    Ok(())
}

pub fn parse_time_parameters(tree: &ParamTree, path: &str) -> Result<TimeConfig, ParamError> {
    let config = TimeConfig {
        bdf_order: tree.get_usize(path, "BDF order")?,
        initial_time: tree.get_f64(path, "Initial time")?,
        final_time: tree.get_f64(path, "Final time")?,
        time_step: tree.get_f64(path, "Time step")?,
    };
    if config.final_time <= config.initial_time {
        return Err(ParamError::InvalidValue {
            path: format!("{path}/Final time"),
            value: config.final_time.to_string(),
            reason: "must exceed the initial time".to_string(),
        });
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DVector {
        DVector::from_vec(vec![v])
    }

    #[test]
    fn coefficients_match_the_classical_tables() {
        let cases: [(usize, &[f64], &[f64]); 3] = [
            (1, &[1.0, -1.0], &[1.0]),
            (2, &[1.5, -2.0, 0.5], &[2.0, -1.0]),
            (
                3,
                &[11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0],
                &[3.0, -3.0, 1.0],
            ),
        ];
        for (k, alpha, beta) in cases {
            let state = BdfState::new(k, vec![scalar(0.0); k], 0.1).unwrap();
            for (got, want) in state.alpha().iter().zip(alpha) {
                assert!((got - want).abs() < 1e-13, "k={k} alpha {got} vs {want}");
            }
            for (got, want) in state.beta().iter().zip(beta) {
                assert!((got - want).abs() < 1e-13, "k={k} beta {got} vs {want}");
            }
            assert!(state.alpha().iter().sum::<f64>().abs() < 1e-13);
            assert!((state.beta().iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            BdfState::new(4, vec![scalar(0.0); 4], 0.1),
            Err(TimeIntError::OrderOutOfRange(4))
        ));
        assert!(matches!(
            BdfState::new(1, vec![scalar(0.0)], 0.0),
            Err(TimeIntError::NonPositiveTimeStep(_))
        ));
        assert!(matches!(
            BdfState::new(2, vec![scalar(0.0)], 0.1),
            Err(TimeIntError::WrongBootstrapCount { expected: 2, got: 1 })
        ));
        assert!(matches!(
            BdfState::new(2, vec![scalar(0.0), DVector::zeros(2)], 0.1),
            Err(TimeIntError::LengthMismatch)
        ));
    }

    #[test]
    fn derivative_of_a_constant_extension_vanishes() {
        for k in 1..=3 {
            let state = BdfState::new(k, vec![scalar(7.5); k], 0.25).unwrap();
            let (a0_dt, combo) = state.time_derivative_term();
            let derivative = a0_dt * 7.5 - combo[0];
            assert!(derivative.abs() < 1e-12, "k={k}: {derivative}");
        }
    }

    #[test]
    fn order_one_is_backward_euler() {
        let state = BdfState::new(1, vec![scalar(3.0)], 0.5).unwrap();
        let (a0_dt, combo) = state.time_derivative_term();
        assert_eq!(a0_dt, 2.0);
        assert_eq!(combo[0], 6.0);
        // (u1 - u0) / dt for u1 = 4: 2*4 - 6 = 2.
        assert!((a0_dt * 4.0 - combo[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn order_two_differentiates_quadratics_exactly() {
        let dt = 0.1;
        let t_next = 1.0;
        let u = |t: f64| t * t;
        let history = vec![scalar(u(t_next - dt)), scalar(u(t_next - 2.0 * dt))];
        let state = BdfState::new(2, history, dt).unwrap();
        let (a0_dt, combo) = state.time_derivative_term();
        let derivative = a0_dt * u(t_next) - combo[0];
        assert!((derivative - 2.0 * t_next).abs() < 1e-11);
    }

    #[test]
    fn extrapolation_is_exact_on_low_degree_histories() {
        let dt = 0.2;
        let t_next = 2.0;
        for k in 1..=3 {
            let state = BdfState::new(k, vec![scalar(4.2); k], dt).unwrap();
            assert!((state.extrapolate()[0] - 4.2).abs() < 1e-13);
        }
        let u = |t: f64| 3.0 * t - 1.0;
        let history: Vec<DVector> = (1..=2).map(|j| scalar(u(t_next - j as f64 * dt))).collect();
        let state = BdfState::new(2, history, dt).unwrap();
        assert!((state.extrapolate()[0] - u(t_next)).abs() < 1e-12);

        let u = |t: f64| t * t + t;
        let history: Vec<DVector> = (1..=3).map(|j| scalar(u(t_next - j as f64 * dt))).collect();
        let state = BdfState::new(3, history, dt).unwrap();
        assert!((state.extrapolate()[0] - u(t_next)).abs() < 1e-12);
    }

    #[test]
    fn advance_shifts_the_history() {
        let mut state =
            BdfState::new(2, vec![scalar(1.0), scalar(0.0)], 0.1).unwrap();
        state.advance(scalar(2.0));
        assert_eq!(state.latest()[0], 2.0);
        let (_, combo) = state.time_derivative_term();
        // alpha = (1.5, -2, 0.5): combo = (2*2.0 - 0.5*1.0) / dt.
        assert!((combo[0] - (2.0 * 2.0 - 0.5 * 1.0) / 0.1).abs() < 1e-12);
        state.advance(scalar(3.0));
        assert_eq!(state.latest()[0], 3.0);
    }

    /// u' = -u, u(0) = 1, error at T = 1 with exact bootstrap; the observed
    /// order matches k.
    #[test]
    fn decay_ode_converges_at_the_scheme_order() {
        for k in 1..=3usize {
            let mut errors = Vec::new();
            let dts: [f64; 3] = [0.1, 0.05, 0.025];
            for &dt in &dts {
                let n_steps = (1.0 / dt).round() as usize;
                // Most-recent-first: u((k-1)dt), ..., u(0).
                let bootstrap: Vec<DVector> = (0..k)
                    .map(|j| scalar((-((k - 1 - j) as f64) * dt).exp()))
                    .collect();
                let mut state = BdfState::new(k, bootstrap, dt).unwrap();
                for _ in k..=n_steps {
                    let (a0_dt, combo) = state.time_derivative_term();
                    // Implicit step: (a0/dt) u + u = combo.
                    let u_new = combo[0] / (a0_dt + 1.0);
                    state.advance(scalar(u_new));
                }
                errors.push((state.latest()[0] - (-1.0f64).exp()).abs());
            }
            let slope = (errors[1] / errors[2]).ln() / 2f64.ln();
            assert!(
                (slope - k as f64).abs() < 0.1,
                "k={k}: slope {slope}, errors {errors:?}"
            );
        }
    }

    /// Heat equation on the unit square, BDF2, dt = 0.1, h = 1/8: the
    /// max-norm stays bounded by the initial one all the way to T = 1.
    #[test]
    fn heat_equation_stays_bounded() {
        use crate::fem::{
            assemble_system, build_space, dirichlet_constraints, gauss_quadrature, interpolate,
            kernels, Constraints, LocalSystem,
        };
        use crate::linalg::{solve, PreconditionerConfig, SolverConfig};
        use crate::mesh::generate_box;
        use std::f64::consts::PI;
        use std::sync::Arc;

        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[8, 8]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let quadrature = gauss_quadrature(2, 2).unwrap();
        let u0 = interpolate(&space, &|p: &crate::mesh::Point| {
            (PI * p[0]).sin() * (PI * p[1]).sin()
        });
        let initial_max = u0.norm_max();

        let dt = 0.1;
        let mut state = BdfState::new(2, vec![u0.clone(), u0], dt).unwrap();
        let constraints = {
            let mut all = Constraints::new();
            for tag in 0..4 {
                all.merge(&dirichlet_constraints(&space, tag, &|_: &crate::mesh::Point| 0.0).unwrap());
            }
            all
        };
        let config = SolverConfig {
            tolerance: 1e-10,
            ..SolverConfig::default()
        };

        for _ in 0..10 {
            let (a0_dt, combo) = state.time_derivative_term();
            let (matrix, rhs) = assemble_system(
                &space,
                &quadrature,
                |cell, values, local: &mut LocalSystem| {
                    kernels::add_mass(values, a0_dt, local);
                    kernels::add_stiffness(values, 1.0, local);
                    let combo_local = space.cell_dof_values(cell, &combo);
                    for q in 0..values.n_q_points() {
                        let combo_q = values.function_value(&combo_local, q);
                        for i in 0..local.n() {
                            local.add_rhs(i, combo_q * values.shape_value(i, q) * values.jxw(q));
                        }
                    }
                },
                &constraints,
            )
            .unwrap();
            let (u_new, report) =
                solve(&matrix, &rhs, None, &config, &PreconditionerConfig::Jacobi).unwrap();
            assert!(report.converged);
            state.advance(u_new);
        }

        let final_max = state.latest().norm_max();
        assert!(final_max.is_finite());
        assert!(final_max <= initial_max, "{final_max} vs {initial_max}");
        // The decay rate is roughly exp(-2 pi^2 t); after t = 1 the field is
        // tiny but not zero.
        assert!(final_max > 0.0 && final_max < 0.01, "{final_max}");
    }

    #[test]
    fn time_parameters_round_trip() {
        let mut tree = ParamTree::new();
        let defaults = TimeConfig {
            bdf_order: 2,
            initial_time: 0.0,
            final_time: 1.0,
            time_step: 0.1,
        };
        declare_time_parameters(&mut tree, "Time", &defaults).unwrap();
        let parsed = parse_time_parameters(&tree, "Time").unwrap();
        assert_eq!(parsed, defaults);
        assert_eq!(parsed.n_steps(), 10);

        tree.set("Time", "Final time", "-1").unwrap();
        assert!(parse_time_parameters(&tree, "Time").is_err());
        assert!(tree.set("Time", "BDF order", "4").is_err());
    }
}
