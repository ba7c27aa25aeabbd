//! Dirichlet-Neumann sub-iteration between two subdomain solvers, with
//! static/Aitken/Anderson relaxation of the interface trace.

use super::CouplingError;
use crate::linalg::DVector;
use crate::nonlinear::{AccelerationScheme, Accelerator};
use crate::params::{ParamError, ParamTree, Validator, Verbosity};

#[derive(Debug, Clone, PartialEq)]
pub struct DnConfig {
    /// Static relaxation here admits omega in (0, 2): overrelaxation is
    /// meaningful for interface iterations, unlike the generic accelerator.
    pub scheme: AccelerationScheme,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for DnConfig {
    fn default() -> Self {
        Self {
            scheme: AccelerationScheme::StaticRelaxation(0.5),
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct DnReport {
    pub converged: bool,
    /// Set when the update norms blow up instead of stalling.
    pub diverged: bool,
    pub iterations: usize,
    pub update_norms: Vec<f64>,
}

/// Fixed-point loop on the interface trace.
///
/// `solve_dirichlet(trace)` solves the first subdomain with the trace as
/// interface Dirichlet data and returns (u1, interface flux). The fluxic
/// convention is the algebraic residual of the unconstrained first-side
/// system (see `interface_residual`). `solve_neumann(flux)` solves the
/// second subdomain with that flux as Neumann data and returns (u2, new
/// trace). Stops when the relaxed trace update norm drops to `tolerance`;
/// growth by 1e4 over the first update is reported as divergence.
pub fn dirichlet_neumann_iterate<D, N>(
    initial_trace: DVector,
    mut solve_dirichlet: D,
    mut solve_neumann: N,
    config: &DnConfig,
) -> Result<(DVector, DVector, DnReport), CouplingError>
where
    D: FnMut(&DVector) -> Result<(DVector, DVector), CouplingError>,
    N: FnMut(&DVector) -> Result<(DVector, DVector), CouplingError>,
{
    let static_omega = match &config.scheme {
        AccelerationScheme::StaticRelaxation(omega) => {
            if !(*omega > 0.0 && *omega < 2.0) {
                return Err(CouplingError::InvalidRelaxation(*omega));
            }
            Some(*omega)
        }
        _ => None,
    };
    let mut accelerator = match static_omega {
        Some(_) => None,
        None => Some(Accelerator::new(config.scheme.clone())?),
    };

    let mut trace = initial_trace;
    let mut report = DnReport::default();
    let mut solution = None;
    for sweep in 1..=config.max_iterations {
        let (u1, flux) = solve_dirichlet(&trace)?;
        let (u2, new_trace) = solve_neumann(&flux)?;
        solution = Some((u1, u2));

        let next = match (static_omega, accelerator.as_mut()) {
            (Some(omega), _) => {
                let mut relaxed = new_trace;
                relaxed.scale_add(omega, &trace);
                // scale_add gives omega * g + trace; fix to trace + omega (g - trace).
                relaxed.axpy(-omega, &trace);
                relaxed
            }
            (None, Some(accel)) => accel.next_iterate(&trace, &new_trace),
            (None, None) => unreachable!(),
        };
        let mut update = next.clone();
        update.axpy(-1.0, &trace);
        let update_norm = update.norm();
        report.update_norms.push(update_norm);
        report.iterations = sweep;
        trace = next;

        if update_norm <= config.tolerance {
            report.converged = true;
            break;
        }
        let first = report.update_norms[0];
        if !update_norm.is_finite() || update_norm > 1e4 * first.max(f64::MIN_POSITIVE) {
            report.diverged = true;
            break;
        }
    }
    let (u1, u2) = solution.expect("at least one sweep runs");
    Ok((u1, u2, report))
}

/// Declares the "Fixed-point coupling" subsection under `base`.
pub fn declare_coupling_parameters(tree: &mut ParamTree, base: &str) -> Result<(), ParamError> {
    let section = if base.is_empty() {
        "Fixed-point coupling".to_string()
    } else {
        format!("{base}/Fixed-point coupling")
    };
    tree.declare(
        &section,
        "Scheme",
        "Static",
        Validator::selection(["Static", "Aitken", "Anderson", "None"]),
        Verbosity::Minimal,
        "Relaxation applied to the interface trace",
    )?;
    tree.declare(
        &section,
        "Relaxation factor",
        "0.5",
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: 2.0,
        },
        Verbosity::Minimal,
        "",
    )?;
    tree.declare(
        &section,
        "Tolerance",
        "1e-8",
        Validator::Real {
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        },
        Verbosity::Standard,
        "Stopping threshold on the trace update norm",
    )?;
    tree.declare(
        &section,
        "Max. number of sub-iterations",
        "100",
        Validator::Integer {
            min: 1,
            max: i64::MAX,
        },
        Verbosity::Standard,
        "",
    )?;
    tree.declare(
        &section,
        "Anderson depth",
        "1",
        Validator::Integer {
            min: 1,
            max: i64::MAX,
        },
        Verbosity::Full,
        "",
    )?;
    Ok(())
}

pub fn parse_coupling_parameters(tree: &ParamTree, base: &str) -> Result<DnConfig, ParamError> {
    let section = if base.is_empty() {
        "Fixed-point coupling".to_string()
    } else {
        format!("{base}/Fixed-point coupling")
    };
    let omega = tree.get_f64(&section, "Relaxation factor")?;
    if omega >= 2.0 {
        return Err(ParamError::InvalidValue {
            path: format!("{section}/Relaxation factor"),
            value: omega.to_string(),
            reason: "must be below 2".to_string(),
        });
    }
    let scheme = match tree.get(&section, "Scheme")? {
        "Static" => AccelerationScheme::StaticRelaxation(omega),
        "Aitken" => AccelerationScheme::Aitken,
        "Anderson" => AccelerationScheme::Anderson {
            depth: tree.get_usize(&section, "Anderson depth")?,
            omega0: omega.min(1.0),
        },
        _ => AccelerationScheme::None,
    };
    Ok(DnConfig {
        scheme,
        tolerance: tree.get_f64(&section, "Tolerance")?,
        max_iterations: tree.get_usize(&section, "Max. number of sub-iterations")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{
        apply_interface_dirichlet, build_interface_map, extract_interface_data,
        interface_residual, InterfaceMap, Side,
    };
    use crate::fem::{
        assemble_system, build_space, dirichlet_constraints, gauss_quadrature, kernels,
        Constraints, FeSpace, LocalSystem,
    };
    use crate::linalg::{solve, CsrMatrix, PreconditionerConfig, SolverConfig};
    use crate::mesh::{generate_box, Point};
    use std::sync::Arc;

    /// Unconstrained -laplace(u) = 1 assembly on the whole space.
    fn poisson_parts(space: &FeSpace) -> (CsrMatrix, DVector) {
        let quadrature = gauss_quadrature(2, 2).unwrap();
        assemble_system(
            space,
            &quadrature,
            |_cell, values, local: &mut LocalSystem| {
                kernels::add_stiffness(values, 1.0, local);
                kernels::add_load(values, &|_: &Point| 1.0, local);
            },
            &Constraints::new(),
        )
        .unwrap()
    }

    fn zero_dirichlet(space: &FeSpace, tags: &[u32]) -> Constraints {
        let mut all = Constraints::new();
        for tag in tags {
            all.merge(&dirichlet_constraints(space, *tag, &|_: &Point| 0.0).unwrap());
        }
        all
    }

    fn spd_solve(matrix: &CsrMatrix, rhs: &DVector) -> DVector {
        let config = SolverConfig {
            tolerance: 1e-13,
            max_iterations: 2000,
            ..SolverConfig::default()
        };
        let (u, report) =
            solve(matrix, rhs, None, &config, &PreconditionerConfig::Jacobi).unwrap();
        assert!(report.converged);
        u
    }

    struct Transmission {
        space1: FeSpace,
        space2: FeSpace,
        map: InterfaceMap,
        parts1: (CsrMatrix, DVector),
        parts2: (CsrMatrix, DVector),
        exterior1: Constraints,
        exterior2: Constraints,
    }

    /// Unit squares (0,1)x(0,1) and (1,2)x(0,1) with zero Dirichlet on the
    /// exterior boundary and interface at x = 1.
    fn transmission_setup(n: usize) -> Transmission {
        let mesh1 = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap());
        let mesh2 = Arc::new(generate_box(2, &[1.0, 0.0], &[2.0, 1.0], &[n, n]).unwrap());
        let space1 = build_space(mesh1, 1, 1).unwrap();
        let space2 = build_space(mesh2, 1, 1).unwrap();
        let map = build_interface_map(&space1, 1, &space2, 0, None).unwrap();
        let parts1 = poisson_parts(&space1);
        let parts2 = poisson_parts(&space2);
        let exterior1 = zero_dirichlet(&space1, &[0, 2, 3]);
        let exterior2 = zero_dirichlet(&space2, &[1, 2, 3]);
        Transmission {
            space1,
            space2,
            map,
            parts1,
            parts2,
            exterior1,
            exterior2,
        }
    }

    fn run_dn(setup: &Transmission, config: &DnConfig) -> (DVector, DVector, DnReport) {
        let solve_dirichlet = |trace: &DVector| {
            let mut constraints = apply_interface_dirichlet(&setup.map, Side::First, trace)?;
            // Exterior zeros win at the interface corners.
            constraints.merge(&setup.exterior1);
            let (mut a, mut b) = setup.parts1.clone();
            constraints.condense_system(&mut a, &mut b);
            let u1 = spd_solve(&a, &b);
            let flux = interface_residual(
                &setup.map,
                Side::First,
                &setup.parts1.0,
                &setup.parts1.1,
                &u1,
            );
            Ok((u1, flux))
        };
        let solve_neumann = |flux: &DVector| {
            let (mut a, mut b) = setup.parts2.clone();
            for (i, &(_, dof2)) in setup.map.pairs().iter().enumerate() {
                b[dof2] -= flux[i];
            }
            setup.exterior2.condense_system(&mut a, &mut b);
            let u2 = spd_solve(&a, &b);
            let trace = extract_interface_data(&setup.map, Side::Second, &u2);
            Ok((u2, trace))
        };
        dirichlet_neumann_iterate(
            DVector::zeros(setup.map.len()),
            solve_dirichlet,
            solve_neumann,
            config,
        )
        .unwrap()
    }

    #[test]
    fn partitioned_solution_matches_the_monodomain_solve() {
        let n = 8;
        let setup = transmission_setup(n);
        let config = DnConfig {
            tolerance: 1e-11,
            max_iterations: 60,
            ..DnConfig::default()
        };
        let (u1, u2, report) = run_dn(&setup, &config);
        assert!(report.converged, "updates: {:?}", report.update_norms);

        let mono_mesh =
            Arc::new(generate_box(2, &[0.0, 0.0], &[2.0, 1.0], &[2 * n, n]).unwrap());
        let mono_space = build_space(mono_mesh, 1, 1).unwrap();
        let (mut a, mut b) = poisson_parts(&mono_space);
        zero_dirichlet(&mono_space, &[0, 1, 2, 3]).condense_system(&mut a, &mut b);
        let mono = spd_solve(&a, &b);

        for (space, u) in [(&setup.space1, &u1), (&setup.space2, &u2)] {
            for dof in 0..space.n_dofs() {
                let p = space.support_point(dof);
                let (mono_dof, distance) = crate::fem::find_closest_dof(&mono_space, &p);
                assert!(distance < 1e-12);
                assert!(
                    (u[dof] - mono[mono_dof]).abs() < 1e-8,
                    "dof {dof} at ({}, {}): {} vs {}",
                    p[0],
                    p[1],
                    u[dof],
                    mono[mono_dof]
                );
            }
        }
    }

    #[test]
    fn symmetric_data_yields_a_symmetric_trace() {
        let setup = transmission_setup(6);
        let config = DnConfig {
            tolerance: 1e-11,
            max_iterations: 60,
            ..DnConfig::default()
        };
        let (_, u2, report) = run_dn(&setup, &config);
        assert!(report.converged);
        let trace = extract_interface_data(&setup.map, Side::Second, &u2);
        // Pairs are sorted by y; the problem is symmetric about y = 1/2.
        for i in 0..trace.len() {
            let mirrored = trace.len() - 1 - i;
            assert!((trace[i] - trace[mirrored]).abs() < 1e-9);
        }
    }

    #[test]
    fn overrelaxation_divergence_is_detected() {
        let setup = transmission_setup(4);
        let config = DnConfig {
            scheme: AccelerationScheme::StaticRelaxation(1.9),
            tolerance: 1e-11,
            max_iterations: 200,
        };
        let (_, _, report) = run_dn(&setup, &config);
        assert!(report.diverged);
        assert!(!report.converged);
        assert!(report.iterations < 200);
        let norms = &report.update_norms;
        assert!(norms[norms.len() - 1] > norms[0]);
    }

    #[test]
    fn aitken_converges_without_hand_tuning() {
        let setup = transmission_setup(6);
        let config = DnConfig {
            scheme: AccelerationScheme::Aitken,
            tolerance: 1e-11,
            max_iterations: 60,
        };
        let (_, _, report) = run_dn(&setup, &config);
        assert!(report.converged, "updates: {:?}", report.update_norms);
    }

    #[test]
    fn invalid_relaxation_is_rejected_up_front() {
        let config = DnConfig {
            scheme: AccelerationScheme::StaticRelaxation(2.0),
            ..DnConfig::default()
        };
        let result = dirichlet_neumann_iterate(
            DVector::zeros(3),
            |_| unreachable!(),
            |_| unreachable!(),
            &config,
        );
        assert!(matches!(result, Err(CouplingError::InvalidRelaxation(_))));
    }

    #[test]
    fn coupling_parameters_round_trip() {
        let mut tree = ParamTree::new();
        declare_coupling_parameters(&mut tree, "").unwrap();
        let config = parse_coupling_parameters(&tree, "").unwrap();
        assert_eq!(config, DnConfig::default());

        tree.set("Fixed-point coupling", "Scheme", "Anderson").unwrap();
        tree.set("Fixed-point coupling", "Anderson depth", "4").unwrap();
        let config = parse_coupling_parameters(&tree, "").unwrap();
        assert_eq!(
            config.scheme,
            AccelerationScheme::Anderson { depth: 4, omega0: 0.5 }
        );

        tree.set("Fixed-point coupling", "Relaxation factor", "2").unwrap();
        assert!(parse_coupling_parameters(&tree, "").is_err());
    }
}
