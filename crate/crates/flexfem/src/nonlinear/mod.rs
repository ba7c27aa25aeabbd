//! Newton-type solvers for callback-defined residuals: exact, frozen and
//! finite-difference Jacobians, inexact forcing, fixed-point acceleration,
//! and forward-mode automatic differentiation.

mod accel;
mod dual;

pub use accel::{AccelerationScheme, Accelerator};
pub use dual::{jacobian_via_dual, Dual};

use crate::linalg::{CsrMatrix, DVector, LinalgError};
use crate::params::{compact_real, ParamError, ParamTree, Validator, Verbosity};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NonlinearError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("the assemble callback did not supply a requested Jacobian")]
    MissingJacobian,
    #[error("residual length {got} does not match the iterate length {expected}")]
    ResidualLengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("callback failure: {0}")]
    Callback(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonVariant {
    /// Fresh Jacobian every iteration.
    Exact,
    /// Jacobian assembled once per solve (or reused across solves, see
    /// [`NewtonSolver`]); iterations become a chord method.
    FrozenJacobian,
    /// Jacobian approximated column-wise by forward differences of the
    /// residual; the assemble callback is never asked for one.
    QuasiNewtonFd,
    /// Fresh Jacobian plus an Eisenstat-Walker forcing term handed to the
    /// linear solve callback.
    Inexact,
}

/// Forcing-term constants for the inexact variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InexactForcing {
    pub gamma: f64,
    pub alpha_exp: f64,
    pub eta_max: f64,
    pub eta_min: f64,
}

impl Default for InexactForcing {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            alpha_exp: 2.0,
            eta_max: 0.9,
            eta_min: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub variant: NewtonVariant,
    pub max_iterations: usize,
    pub tolerance_residual: f64,
    pub tolerance_increment: f64,
    /// When set, both tolerances are scaled by the first residual and first
    /// increment norm respectively.
    pub relative_tolerances: bool,
    /// Rebuild period, in outer steps, of the cached frozen Jacobian.
    pub frozen_jacobian_every_n: usize,
    /// Finite-difference step; None selects sqrt(machine epsilon) scaled by
    /// max(1, |x_j|) per column.
    pub fd_epsilon: Option<f64>,
    pub inexact: InexactForcing,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            variant: NewtonVariant::Exact,
            max_iterations: 50,
            tolerance_residual: 1e-10,
            tolerance_increment: 1e-10,
            relative_tolerances: false,
            frozen_jacobian_every_n: 1,
            fd_epsilon: None,
            inexact: InexactForcing::default(),
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), NonlinearError> {
        let bad = |message: String| Err(NonlinearError::InvalidConfig(message));
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".to_string());
        }
        if !(self.tolerance_residual > 0.0) || !(self.tolerance_increment > 0.0) {
            return bad(format!(
                "tolerances must be positive, got residual {} increment {}",
                self.tolerance_residual, self.tolerance_increment
            ));
        }
        if self.frozen_jacobian_every_n == 0 {
            return bad("frozen Jacobian period must be at least 1".to_string());
        }
        if let Some(eps) = self.fd_epsilon {
            if !(eps > 0.0) {
                return bad(format!("finite-difference step must be positive, got {eps}"));
            }
        }
        let fc = &self.inexact;
        if !(fc.gamma > 0.0 && fc.gamma <= 1.0) {
            return bad(format!("forcing gamma must lie in (0, 1], got {}", fc.gamma));
        }
        if !(fc.alpha_exp > 0.0) {
            return bad(format!("forcing exponent must be positive, got {}", fc.alpha_exp));
        }
        for eta in [fc.eta_min, fc.eta_max] {
            if !(eta > 0.0 && eta < 1.0) {
                return bad(format!("forcing bounds must lie in (0, 1), got {eta}"));
            }
        }
        if fc.eta_min > fc.eta_max {
            return bad("forcing minimum exceeds the maximum".to_string());
        }
        Ok(())
    }
}

/// Norm traces of one Newton solve. `solution_norms` is recorded for
/// diagnostics but takes no part in the stopping test.
#[derive(Debug, Clone, Default)]
pub struct NewtonReport {
    pub converged: bool,
    pub iterations: usize,
    pub residual_norms: Vec<f64>,
    pub increment_norms: Vec<f64>,
    pub solution_norms: Vec<f64>,
}

/// Eisenstat-Walker forcing: eta = clamp(gamma (res/res_prev)^alpha,
/// eta_min, eta_max).
pub fn update_forcing(res_norm: f64, res_norm_prev: f64, forcing: &InexactForcing) -> f64 {
    let ratio = res_norm / res_norm_prev.max(f64::MIN_POSITIVE);
    (forcing.gamma * ratio.powf(forcing.alpha_exp)).clamp(forcing.eta_min, forcing.eta_max)
}

/// Column-wise forward-difference Jacobian, (F(x + eps e_j) - F(x)) / eps.
/// The result carries a dense sparsity pattern; intended for desk-scale
/// systems and quasi-Newton iterations.
pub fn fd_jacobian<F>(
    residual_fn: &mut F,
    x: &DVector,
    epsilon: Option<f64>,
) -> Result<CsrMatrix, NonlinearError>
where
    F: FnMut(&DVector) -> Result<DVector, NonlinearError>,
{
    let base = residual_fn(x)?;
    let n = x.len();
    let mut rows = vec![vec![0.0; n]; base.len()];
    for j in 0..n {
        let eps = epsilon.unwrap_or_else(|| f64::EPSILON.sqrt() * x[j].abs().max(1.0));
        let mut perturbed = x.clone();
        perturbed[j] += eps;
        let shifted = residual_fn(&perturbed)?;
        if shifted.len() != base.len() {
            return Err(NonlinearError::ResidualLengthMismatch {
                expected: base.len(),
                got: shifted.len(),
            });
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row[j] = (shifted[i] - base[i]) / eps;
        }
    }
    Ok(CsrMatrix::from_dense(&rows))
}

/// One Newton solve from `x0`.
///
/// `assemble(x, want_jacobian)` returns the residual F(x) and, when asked,
/// the Jacobian. `solve(jacobian, residual, forcing)` returns the increment
/// d with J d = F(x); the update is x <- x - d. `forcing` is the inexact
/// relative tolerance for the linear solve, or 0 when the variant does not
/// prescribe one.
///
/// Non-convergence within `max_iterations` is reported, not an error.
pub fn newton_solve<A, S>(
    x0: &DVector,
    mut assemble: A,
    mut solve: S,
    config: &NewtonConfig,
) -> Result<(DVector, NewtonReport), NonlinearError>
where
    A: FnMut(&DVector, bool) -> Result<(DVector, Option<CsrMatrix>), NonlinearError>,
    S: FnMut(&CsrMatrix, &DVector, f64) -> Result<DVector, NonlinearError>,
{
    config.validate()?;
    run(x0, &mut assemble, &mut solve, config, None)
}

fn run<A, S>(
    x0: &DVector,
    assemble: &mut A,
    solve: &mut S,
    config: &NewtonConfig,
    external_jacobian: Option<&CsrMatrix>,
) -> Result<(DVector, NewtonReport), NonlinearError>
where
    A: FnMut(&DVector, bool) -> Result<(DVector, Option<CsrMatrix>), NonlinearError>,
    S: FnMut(&CsrMatrix, &DVector, f64) -> Result<DVector, NonlinearError>,
{
    let mut x = x0.clone();
    let mut report = NewtonReport::default();
    let mut frozen: Option<CsrMatrix> = None;
    let mut eta = config.inexact.eta_max;
    let mut prev_res_norm: Option<f64> = None;
    let mut res_threshold = config.tolerance_residual;
    let mut inc_threshold = config.tolerance_increment;

    for iteration in 0..=config.max_iterations {
        let want_jacobian = external_jacobian.is_none()
            && match config.variant {
                NewtonVariant::Exact | NewtonVariant::Inexact => true,
                NewtonVariant::FrozenJacobian => frozen.is_none(),
                NewtonVariant::QuasiNewtonFd => false,
            };
        let (residual, returned_jacobian) = assemble(&x, want_jacobian)?;
        if residual.len() != x.len() {
            return Err(NonlinearError::ResidualLengthMismatch {
                expected: x.len(),
                got: residual.len(),
            });
        }
        let res_norm = residual.norm();
        if config.relative_tolerances && iteration == 0 {
            res_threshold = config.tolerance_residual * res_norm.max(f64::MIN_POSITIVE);
        }
        if config.variant == NewtonVariant::Inexact {
            if let Some(prev) = prev_res_norm {
                eta = update_forcing(res_norm, prev, &config.inexact);
            }
        }
        prev_res_norm = Some(res_norm);
        report.residual_norms.push(res_norm);
        report.solution_norms.push(x.norm());

        if res_norm <= res_threshold {
            report.converged = true;
            report.iterations = iteration;
            break;
        }
        if iteration == config.max_iterations {
            report.iterations = iteration;
            break;
        }

        let mut fresh: Option<CsrMatrix> = None;
        if external_jacobian.is_none() {
            match config.variant {
                NewtonVariant::Exact | NewtonVariant::Inexact => {
                    fresh = Some(returned_jacobian.ok_or(NonlinearError::MissingJacobian)?);
                }
                NewtonVariant::FrozenJacobian => {
                    if let Some(jacobian) = returned_jacobian {
                        frozen = Some(jacobian);
                    }
                }
                NewtonVariant::QuasiNewtonFd => {
                    fresh = Some(fd_jacobian(
                        &mut |xp: &DVector| assemble(xp, false).map(|(r, _)| r),
                        &x,
                        config.fd_epsilon,
                    )?);
                }
            }
        }
        let jacobian = external_jacobian
            .or(fresh.as_ref())
            .or(frozen.as_ref())
            .ok_or(NonlinearError::MissingJacobian)?;

        let forcing = if config.variant == NewtonVariant::Inexact {
            eta
        } else {
            0.0
        };
        let increment = solve(jacobian, &residual, forcing)?;
        let inc_norm = increment.norm();
        if config.relative_tolerances && report.increment_norms.is_empty() {
            inc_threshold = config.tolerance_increment * inc_norm.max(f64::MIN_POSITIVE);
        }
        report.increment_norms.push(inc_norm);
        x.axpy(-1.0, &increment);

        if inc_norm <= inc_threshold {
            report.converged = true;
            report.iterations = iteration + 1;
            break;
        }
    }
    Ok((x, report))
}

/// Newton driver for time loops: with the frozen-Jacobian variant the
/// matrix is rebuilt only on every n-th call and reused in between.
#[derive(Debug)]
pub struct NewtonSolver {
    config: NewtonConfig,
    cached_jacobian: Option<CsrMatrix>,
    step_index: usize,
}

impl NewtonSolver {
    pub fn new(config: NewtonConfig) -> Result<Self, NonlinearError> {
        config.validate()?;
        Ok(Self {
            config,
            cached_jacobian: None,
            step_index: 0,
        })
    }

    pub fn config(&self) -> &NewtonConfig {
        &self.config
    }

    /// Drops the cached Jacobian so the next step rebuilds it.
    pub fn invalidate_cache(&mut self) {
        self.cached_jacobian = None;
    }

    pub fn solve_step<A, S>(
        &mut self,
        x0: &DVector,
        mut assemble: A,
        mut solve: S,
    ) -> Result<(DVector, NewtonReport), NonlinearError>
    where
        A: FnMut(&DVector, bool) -> Result<(DVector, Option<CsrMatrix>), NonlinearError>,
        S: FnMut(&CsrMatrix, &DVector, f64) -> Result<DVector, NonlinearError>,
    {
        if self.config.variant == NewtonVariant::FrozenJacobian {
            let due = self.cached_jacobian.is_none()
                || self.step_index % self.config.frozen_jacobian_every_n == 0;
            if due {
                let (_, jacobian) = assemble(x0, true)?;
                self.cached_jacobian = Some(jacobian.ok_or(NonlinearError::MissingJacobian)?);
            }
            self.step_index += 1;
            run(
                x0,
                &mut assemble,
                &mut solve,
                &self.config,
                self.cached_jacobian.as_ref(),
            )
        } else {
            self.step_index += 1;
            run(x0, &mut assemble, &mut solve, &self.config, None)
        }
    }
}

/// Declares the "Non-linear solver" subsection under `base` ("" for top
/// level). `defaults` supplies the declared default of every entry, so each
/// application's generated parameter file starts from its own configuration.
pub fn declare_newton_parameters(
    tree: &mut ParamTree,
    base: &str,
    defaults: &NewtonConfig,
) -> Result<(), ParamError> {
    let section = join_section(base, "Non-linear solver");
    let variant = match defaults.variant {
        NewtonVariant::Exact => "Exact",
        NewtonVariant::FrozenJacobian => "FrozenJacobian",
        NewtonVariant::QuasiNewtonFd => "QuasiNewtonFD",
        NewtonVariant::Inexact => "Inexact",
    };
    tree.declare(
        &section,
        "Type",
        variant,
        Validator::selection(["Exact", "FrozenJacobian", "QuasiNewtonFD", "Inexact"]),
        Verbosity::Minimal,
        "Newton variant",
    )?;
    tree.declare(
        &section,
        "Max. number of iterations",
        &defaults.max_iterations.to_string(),
        Validator::Integer { min: 1, max: i64::MAX },
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        &section,
        "Residual tolerance",
        &compact_real(defaults.tolerance_residual),
        Validator::Real { min: f64::MIN_POSITIVE, max: f64::INFINITY },
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        &section,
        "Increment tolerance",
        &compact_real(defaults.tolerance_increment),
        Validator::Real { min: f64::MIN_POSITIVE, max: f64::INFINITY },
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        &section,
        "Relative tolerances",
        if defaults.relative_tolerances { "true" } else { "false" },
        Validator::Bool,
        Verbosity::Full,
        "Scale both tolerances by the first residual and increment norms",
    )?;
    tree.declare(
        &section,
        "Jacobian update period",
        &defaults.frozen_jacobian_every_n.to_string(),
        Validator::Integer { min: 1, max: i64::MAX },
        Verbosity::Standard,
        "Rebuild the frozen Jacobian once every n steps",
    )?;
    for (name, default) in [
        ("Forcing gamma", compact_real(defaults.inexact.gamma)),
        ("Forcing exponent", compact_real(defaults.inexact.alpha_exp)),
        ("Forcing maximum", compact_real(defaults.inexact.eta_max)),
        ("Forcing minimum", compact_real(defaults.inexact.eta_min)),
    ] {
        tree.declare(
            &section,
            name,
            &default,
            Validator::any_real(),
            Verbosity::Full,
            "",
        )?;
    }

    let accel = join_section(base, "Non-linear solver/Acceleration");
    tree.declare(
        &accel,
        "Scheme",
        "None",
        Validator::selection(["None", "Static", "Aitken", "Anderson"]),
        Verbosity::Standard,
        "Fixed-point acceleration strategy",
    )?;
    tree.declare(
        &accel,
        "Relaxation factor",
        "1",
        Validator::Real { min: f64::MIN_POSITIVE, max: 1.0 },
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        &accel,
        "Anderson depth",
        "1",
        Validator::Integer { min: 1, max: i64::MAX },
        Verbosity::Standard,
        "",
    )?;
    Ok(())
}

pub fn parse_newton_parameters(
    tree: &ParamTree,
    base: &str,
) -> Result<(NewtonConfig, AccelerationScheme), ParamError> {
    let section = join_section(base, "Non-linear solver");
    let variant = match tree.get(&section, "Type")? {
        "Exact" => NewtonVariant::Exact,
        "FrozenJacobian" => NewtonVariant::FrozenJacobian,
        "QuasiNewtonFD" => NewtonVariant::QuasiNewtonFd,
        _ => NewtonVariant::Inexact,
    };
    let config = NewtonConfig {
        variant,
        max_iterations: tree.get_usize(&section, "Max. number of iterations")?,
        tolerance_residual: tree.get_f64(&section, "Residual tolerance")?,
        tolerance_increment: tree.get_f64(&section, "Increment tolerance")?,
        relative_tolerances: tree.get_bool(&section, "Relative tolerances")?,
        frozen_jacobian_every_n: tree.get_usize(&section, "Jacobian update period")?,
        fd_epsilon: None,
        inexact: InexactForcing {
            gamma: tree.get_f64(&section, "Forcing gamma")?,
            alpha_exp: tree.get_f64(&section, "Forcing exponent")?,
            eta_max: tree.get_f64(&section, "Forcing maximum")?,
            eta_min: tree.get_f64(&section, "Forcing minimum")?,
        },
    };
    config.validate().map_err(|e| ParamError::InvalidValue {
        path: section.clone(),
        value: String::new(),
        reason: e.to_string(),
    })?;

    let accel = join_section(base, "Non-linear solver/Acceleration");
    let omega = tree.get_f64(&accel, "Relaxation factor")?;
    let scheme = match tree.get(&accel, "Scheme")? {
        "None" => AccelerationScheme::None,
        "Static" => AccelerationScheme::StaticRelaxation(omega),
        "Aitken" => AccelerationScheme::Aitken,
        _ => AccelerationScheme::Anderson {
            depth: tree.get_usize(&accel, "Anderson depth")?,
            omega0: omega,
        },
    };
    Ok((config, scheme))
}

fn join_section(base: &str, name: &str) -> String {
    if base.is_empty() {
        name.to_string()
    } else {
        format!("{base}/{name}")
    }
}
