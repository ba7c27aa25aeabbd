//! Parameter-file integration: a `Linear solver` subsection selecting the
//! Krylov method plus a per-type subsection, and a `Preconditioner`
//! subsection with the same shape.

use super::{PreconditionerConfig, SolverConfig, SolverType};
use crate::params::{compact_real, ParamError, ParamTree, Validator, Verbosity};

fn sub(base: &str, name: &str) -> String {
    if base.is_empty() {
        name.to_string()
    } else {
        format!("{base}/{name}")
    }
}

/// Declares both subsections under `base` ("" for the tree root). `defaults`
/// and `preconditioner` supply the declared default of every entry, so each
/// application's generated parameter file starts from its own configuration.
pub fn declare_solver_parameters(
    tree: &mut ParamTree,
    base: &str,
    defaults: &SolverConfig,
    preconditioner: &PreconditionerConfig,
) -> Result<(), ParamError> {
    let ls = sub(base, "Linear solver");
    let solver_type = match defaults.solver_type {
        SolverType::Cg => "CG",
        SolverType::Gmres => "GMRES",
        SolverType::BiCgStab => "BiCGStab",
    };
    tree.declare(
        &ls,
        "Type",
        solver_type,
        Validator::selection(["CG", "GMRES", "BiCGStab"]),
        Verbosity::Minimal,
        "Krylov method",
    )?;
    tree.declare(
        &ls,
        "Max. number of iterations",
        &defaults.max_iterations.to_string(),
        Validator::Integer {
            min: 1,
            max: i64::MAX,
        },
        Verbosity::Standard,
        "Iteration cap before the solve is reported as failed",
    )?;
    tree.declare(
        &ls,
        "Tolerance",
        &compact_real(defaults.tolerance),
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        },
        Verbosity::Standard,
        "Relative residual reduction: stop once ||b - Ax|| <= Tolerance * ||b||",
    )?;
    tree.declare(
        &ls,
        "Absolute tolerance",
        &compact_real(defaults.absolute_tolerance),
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        },
        Verbosity::Full,
        "Absolute floor of the stopping threshold",
    )?;
    tree.declare(
        &ls,
        "Log history",
        if defaults.log_history { "true" } else { "false" },
        Validator::Bool,
        Verbosity::Full,
        "Record the residual norm of every iteration in the solve report",
    )?;
    tree.declare(
        &sub(&ls, "GMRES"),
        "Max. number of temporary vectors",
        &defaults.gmres_restart.to_string(),
        Validator::Integer {
            min: 1,
            max: i64::MAX,
        },
        Verbosity::Standard,
        "Krylov basis size per restart cycle",
    )?;

    let pc = sub(base, "Preconditioner");
    let (pc_type, omega) = match preconditioner {
        PreconditionerConfig::Identity => ("Identity", 1.0),
        PreconditionerConfig::Jacobi => ("Jacobi", 1.0),
        PreconditionerConfig::Ssor(omega) => ("SSOR", *omega),
        PreconditionerConfig::Ilu0 => ("ILU0", 1.0),
    };
    tree.declare(
        &pc,
        "Type",
        pc_type,
        Validator::selection(["Identity", "Jacobi", "SSOR", "ILU0"]),
        Verbosity::Minimal,
        "Preconditioner applied within the Krylov iteration",
    )?;
    tree.declare(
        &sub(&pc, "SSOR"),
        "Relaxation factor",
        &compact_real(omega),
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: 2.0,
        },
        Verbosity::Standard,
        "Over-relaxation parameter, strictly between 0 and 2",
    )?;
    Ok(())
}

/// Reads both subsections back into runtime configurations.
pub fn parse_solver_parameters(
    tree: &ParamTree,
    base: &str,
) -> Result<(SolverConfig, PreconditionerConfig), ParamError> {
    let ls = sub(base, "Linear solver");
    let solver_type = match tree.get(&ls, "Type")? {
        "CG" => SolverType::Cg,
        "GMRES" => SolverType::Gmres,
        "BiCGStab" => SolverType::BiCgStab,
        other => {
            return Err(ParamError::InvalidValue {
                path: sub(&ls, "Type"),
                value: other.to_string(),
                reason: "unsupported solver".to_string(),
            })
        }
    };
    let config = SolverConfig {
        solver_type,
        max_iterations: tree.get_usize(&ls, "Max. number of iterations")?,
        tolerance: tree.get_f64(&ls, "Tolerance")?,
        absolute_tolerance: tree.get_f64(&ls, "Absolute tolerance")?,
        gmres_restart: tree.get_usize(&sub(&ls, "GMRES"), "Max. number of temporary vectors")?,
        log_history: tree.get_bool(&ls, "Log history")?,
    };

    let pc = sub(base, "Preconditioner");
    let precond = match tree.get(&pc, "Type")? {
        "Identity" => PreconditionerConfig::Identity,
        "Jacobi" => PreconditionerConfig::Jacobi,
        "SSOR" => {
            let omega = tree.get_f64(&sub(&pc, "SSOR"), "Relaxation factor")?;
            if !(omega > 0.0 && omega < 2.0) {
                return Err(ParamError::InvalidValue {
                    path: sub(&sub(&pc, "SSOR"), "Relaxation factor"),
                    value: omega.to_string(),
                    reason: "must lie strictly between 0 and 2".to_string(),
                });
            }
            PreconditionerConfig::Ssor(omega)
        }
        "ILU0" => PreconditionerConfig::Ilu0,
        other => {
            return Err(ParamError::InvalidValue {
                path: sub(&pc, "Type"),
                value: other.to_string(),
                reason: "unsupported preconditioner".to_string(),
            })
        }
    };
    Ok((config, precond))
}
