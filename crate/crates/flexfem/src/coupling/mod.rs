//! Data transfer between fields and subdomains: quadrature-point evaluation
//! across spaces on one mesh, smoothed L2 projection, and conforming
//! interface exchange for partitioned schemes.

mod dn;
mod interface;
mod projection;

pub use dn::{
    declare_coupling_parameters, dirichlet_neumann_iterate, parse_coupling_parameters, DnConfig,
    DnReport,
};
pub use interface::{
    apply_interface_dirichlet, build_interface_map, extract_interface_data, interface_residual,
    InterfaceMap, Side,
};
pub use projection::project_l2;

use crate::fem::{reinit_cell, FeSpace, FemError, Quadrature};
use crate::linalg::{DVector, LinalgError};
use crate::mesh::{Mesh, Point};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("source and target spaces live on different meshes")]
    MeshMismatch,
    #[error("source space must have {expected} components, got {got}")]
    WrongComponents { expected: usize, got: usize },
    #[error("coefficient vector length {got} does not match the space ({expected})")]
    VectorLengthMismatch { expected: usize, got: usize },
    #[error("interface dof at ({0}, {1}, {2}) has no partner within tolerance {3}")]
    UnmatchedInterfaceDof(f64, f64, f64, f64),
    #[error("interface sides carry {0} and {1} dofs; conforming faces required")]
    InterfaceSizeMismatch(usize, usize),
    #[error("interface data length {got} does not match the map ({expected})")]
    InterfaceDataLength { expected: usize, got: usize },
    #[error("relaxation factor must lie in (0, 2), got {0}")]
    InvalidRelaxation(f64),
    #[error("projection solve stalled after {iterations} iterations at residual {residual}")]
    ProjectionNotConverged { iterations: usize, residual: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Nonlinear(#[from] crate::nonlinear::NonlinearError),
}

/// What a [`QuadratureField`] evaluates.
pub enum FieldSource<'a> {
    /// A plain function of the physical point.
    Analytic(&'a dyn Fn(&Point) -> f64),
    /// A scalar FE function, possibly of a different degree than the target
    /// space.
    FemValue(&'a FeSpace, &'a DVector),
    /// Gradient of a scalar FE function; vector-valued.
    FemGradient(&'a FeSpace, &'a DVector),
    /// Divergence of a dim-component FE field.
    FemDivergence(&'a FeSpace, &'a DVector),
}

/// Field evaluated at the quadrature points of a target-space cell. Call
/// [`QuadratureField::reinit`] per cell, then read values by point index.
pub struct QuadratureField<'a> {
    source: FieldSource<'a>,
    values: Vec<f64>,
    gradients: Vec<[f64; 3]>,
}

fn same_mesh(a: &Mesh, b: &Mesh) -> bool {
    std::ptr::eq(a, b)
        || (a.dim() == b.dim()
            && a.lower() == b.lower()
            && a.upper() == b.upper()
            && a.subdivisions() == b.subdivisions())
}

impl<'a> QuadratureField<'a> {
    pub fn new(source: FieldSource<'a>) -> Self {
        Self {
            source,
            values: Vec::new(),
            gradients: Vec::new(),
        }
    }

    pub fn analytic(f: &'a dyn Fn(&Point) -> f64) -> Self {
        Self::new(FieldSource::Analytic(f))
    }

    pub fn fem_value(space: &'a FeSpace, coefficients: &'a DVector) -> Self {
        Self::new(FieldSource::FemValue(space, coefficients))
    }

    pub fn fem_gradient(space: &'a FeSpace, coefficients: &'a DVector) -> Self {
        Self::new(FieldSource::FemGradient(space, coefficients))
    }

    pub fn fem_divergence(space: &'a FeSpace, coefficients: &'a DVector) -> Self {
        Self::new(FieldSource::FemDivergence(space, coefficients))
    }

    pub fn is_vector_valued(&self) -> bool {
        matches!(self.source, FieldSource::FemGradient(..))
    }

    fn check_source(&self, target: &FeSpace) -> Result<(), CouplingError> {
        let (space, coefficients, expected_components) = match &self.source {
            FieldSource::Analytic(_) => return Ok(()),
            FieldSource::FemValue(s, v) | FieldSource::FemGradient(s, v) => (s, v, 1),
            FieldSource::FemDivergence(s, v) => (s, v, s.mesh().dim()),
        };
        if !same_mesh(space.mesh(), target.mesh()) {
            return Err(CouplingError::MeshMismatch);
        }
        if space.n_components() != expected_components {
            return Err(CouplingError::WrongComponents {
                expected: expected_components,
                got: space.n_components(),
            });
        }
        if coefficients.len() != space.n_dofs() {
            return Err(CouplingError::VectorLengthMismatch {
                expected: space.n_dofs(),
                got: coefficients.len(),
            });
        }
        Ok(())
    }

    /// Evaluates the source at the quadrature points of `cell` as seen by
    /// `target_space`. The source's own basis is used, so a cross-degree
    /// evaluation is exact for the source function itself.
    pub fn reinit(
        &mut self,
        target_space: &FeSpace,
        cell: usize,
        quadrature: &Quadrature,
    ) -> Result<(), CouplingError> {
        self.check_source(target_space)?;
        self.values.clear();
        self.gradients.clear();
        match &self.source {
            FieldSource::Analytic(f) => {
                let values = reinit_cell(target_space, cell, quadrature);
                for q in 0..values.n_q_points() {
                    self.values.push(f(values.point(q)));
                }
            }
            FieldSource::FemValue(space, coefficients) => {
                let values = reinit_cell(space, cell, quadrature);
                let local = space.cell_dof_values(cell, coefficients);
                for q in 0..values.n_q_points() {
                    self.values.push(values.function_value(&local, q));
                }
            }
            FieldSource::FemGradient(space, coefficients) => {
                let values = reinit_cell(space, cell, quadrature);
                let local = space.cell_dof_values(cell, coefficients);
                for q in 0..values.n_q_points() {
                    self.gradients.push(values.function_gradient(&local, q));
                }
            }
            FieldSource::FemDivergence(space, coefficients) => {
                let values = reinit_cell(space, cell, quadrature);
                let nodes = space.cell_nodes(cell);
                let dim = space.mesh().dim();
                let mut component = vec![0.0; nodes.len()];
                self.values.resize(values.n_q_points(), 0.0);
                for c in 0..dim {
                    for (i, node) in nodes.iter().enumerate() {
                        component[i] = coefficients[node * dim + c];
                    }
                    for (q, out) in self.values.iter_mut().enumerate() {
                        *out += values.function_gradient(&component, q)[c];
                    }
                }
            }
        }
        Ok(())
    }

    /// Scalar value at quadrature point `q` of the last reinit.
    pub fn value(&self, q: usize) -> f64 {
        assert!(
            !self.is_vector_valued(),
            "value() called on a vector-valued field"
        );
        self.values[q]
    }

    /// Gradient at quadrature point `q`; only for gradient sources.
    pub fn gradient(&self, q: usize) -> &[f64; 3] {
        assert!(
            self.is_vector_valued(),
            "gradient() called on a scalar-valued field"
        );
        &self.gradients[q]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_space, gauss_quadrature, interpolate};
    use crate::mesh::generate_box;
    use std::sync::Arc;

    #[test]
    fn analytic_field_reports_gauss_abscissae() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[1]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let quadrature = gauss_quadrature(1, 2).unwrap();
        let f = |p: &Point| p[0];
        let mut field = QuadratureField::analytic(&f);
        field.reinit(&space, 0, &quadrature).unwrap();
        let lo = 0.5 * (1.0 - 1.0 / 3.0f64.sqrt());
        let hi = 0.5 * (1.0 + 1.0 / 3.0f64.sqrt());
        assert!((field.value(0) - lo).abs() < 1e-15);
        assert!((field.value(1) - hi).abs() < 1e-15);
    }

    #[test]
    fn cross_degree_evaluation_reproduces_linear_fields() {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let coarse = build_space(mesh.clone(), 1, 1).unwrap();
        let fine = build_space(mesh, 2, 1).unwrap();
        let coefficients = interpolate(&coarse, |p: &Point| p[0]);
        let quadrature = gauss_quadrature(2, 3).unwrap();
        let mut field = QuadratureField::fem_value(&coarse, &coefficients);
        for cell in 0..fine.mesh().n_cells() {
            field.reinit(&fine, cell, &quadrature).unwrap();
            let probe = reinit_cell(&fine, cell, &quadrature);
            for q in 0..quadrature.len() {
                assert!((field.value(q) - probe.point(q)[0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn divergence_of_the_identity_field_is_the_dimension() {
        let mesh = Arc::new(
            generate_box(3, &[0.0; 3], &[1.0; 3], &[2, 2, 2]).unwrap(),
        );
        let vector_space = build_space(mesh.clone(), 1, 3).unwrap();
        let target = build_space(mesh, 1, 1).unwrap();
        let mut coefficients = DVector::zeros(vector_space.n_dofs());
        for dof in 0..vector_space.n_dofs() {
            let p = vector_space.support_point(dof);
            coefficients[dof] = p[vector_space.dof_component(dof)];
        }
        let quadrature = gauss_quadrature(3, 2).unwrap();
        let mut field = QuadratureField::fem_divergence(&vector_space, &coefficients);
        for cell in 0..target.mesh().n_cells() {
            field.reinit(&target, cell, &quadrature).unwrap();
            for q in 0..quadrature.len() {
                assert!((field.value(q) - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_source_is_exact_for_quadratics() {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let space = build_space(mesh.clone(), 2, 1).unwrap();
        let target = build_space(mesh, 1, 1).unwrap();
        let coefficients = interpolate(&space, |p: &Point| p[0] * p[0] + p[1]);
        let quadrature = gauss_quadrature(2, 2).unwrap();
        let mut field = QuadratureField::fem_gradient(&space, &coefficients);
        for cell in 0..target.mesh().n_cells() {
            field.reinit(&target, cell, &quadrature).unwrap();
            let probe = reinit_cell(&target, cell, &quadrature);
            for q in 0..quadrature.len() {
                let g = field.gradient(q);
                assert!((g[0] - 2.0 * probe.point(q)[0]).abs() < 1e-13);
                assert!((g[1] - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mismatched_meshes_are_rejected() {
        let mesh_a = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let mesh_b = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap());
        let source_space = build_space(mesh_a, 1, 1).unwrap();
        let target = build_space(mesh_b, 1, 1).unwrap();
        let coefficients = DVector::zeros(source_space.n_dofs());
        let quadrature = gauss_quadrature(2, 2).unwrap();
        let mut field = QuadratureField::fem_value(&source_space, &coefficients);
        assert!(matches!(
            field.reinit(&target, 0, &quadrature),
            Err(CouplingError::MeshMismatch)
        ));
    }
}
