//! Smoothed L2 projection onto a scalar FE space: find f_h with
//! (eps grad f_h, grad phi) + (f_h, phi) = (f, phi) for every basis phi.

use super::{CouplingError, QuadratureField};
use crate::fem::{
    assemble_system, build_sparsity, gauss_quadrature, kernels, reinit_cell, Constraints, FeSpace,
    LocalSystem,
};
use crate::linalg::{solve, CsrMatrix, DVector, PreconditionerConfig, SolverConfig};

/// Projects `field` onto `target_space`. `epsilon = 0` gives the plain L2
/// projection; `epsilon > 0` adds gradient smoothing. With `lump_mass` the
/// mass matrix is replaced by its row-sum diagonal. The system is SPD and
/// solved by the caller's solver settings with a Jacobi preconditioner.
pub fn project_l2(
    field: &mut QuadratureField,
    target_space: &FeSpace,
    epsilon: f64,
    lump_mass: bool,
    solver: &SolverConfig,
) -> Result<DVector, CouplingError> {
    assert!(epsilon >= 0.0, "smoothing parameter must be non-negative");
    assert_eq!(
        target_space.n_components(),
        1,
        "projection targets a scalar space"
    );
    let dim = target_space.mesh().dim();
    let quadrature = gauss_quadrature(dim, target_space.degree() + 1)?;
    let no_constraints = Constraints::new();

    let (mass, _) = assemble_system(
        target_space,
        &quadrature,
        |_cell, values, local: &mut LocalSystem| kernels::add_mass(values, 1.0, local),
        &no_constraints,
    )?;
    let mut matrix = if lump_mass {
        let mut lumped = CsrMatrix::zeros_from_pattern(build_sparsity(target_space));
        for row in 0..mass.n_rows() {
            let (_, row_values) = mass.row(row);
            let sum: f64 = row_values.iter().sum();
            lumped.set(row, row, sum);
        }
        lumped
    } else {
        mass
    };
    if epsilon > 0.0 {
        let (stiffness, _) = assemble_system(
            target_space,
            &quadrature,
            |_cell, values, local: &mut LocalSystem| kernels::add_stiffness(values, 1.0, local),
            &no_constraints,
        )?;
        matrix.add_scaled(&stiffness, epsilon);
    }

    let mut rhs = DVector::zeros(target_space.n_dofs());
    for cell in 0..target_space.mesh().n_cells() {
        let values = reinit_cell(target_space, cell, &quadrature);
        field.reinit(target_space, cell, &quadrature)?;
        let dofs = target_space.cell_dofs(cell);
        for q in 0..values.n_q_points() {
            let f_q = field.value(q) * values.jxw(q);
            for (i, dof) in dofs.iter().enumerate() {
                rhs[*dof] += f_q * values.shape_value(i, q);
            }
        }
    }

    let (projected, report) = solve(&matrix, &rhs, None, solver, &PreconditionerConfig::Jacobi)?;
    if !report.converged {
        return Err(CouplingError::ProjectionNotConverged {
            iterations: report.iterations,
            residual: report.final_residual,
        });
    }
    Ok(projected)
}
