//! Lagrange finite-element spaces on structured box meshes: dof enumeration,
//! quadrature, per-cell integration data, assembly, boundary conditions, and
//! error norms.

mod assembly;
mod constraints;
mod quadrature;
mod values;

pub use assembly::{
    assemble_face_terms, assemble_system, assemble_system_mode, assemble_vector, build_sparsity,
    kernels, AssemblyMode, LocalSystem,
};
pub use constraints::{apply_dirichlet_to_vector, dirichlet_constraints, Constraints};
pub use quadrature::{gauss_quadrature, Quadrature};
pub use values::{reinit_cell, reinit_face, FeCellValues};

use crate::linalg::DVector;
use crate::mesh::{Mesh, Point};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("unsupported polynomial degree {0}, expected 1 or 2")]
    UnsupportedDegree(usize),
    #[error("component count must be at least 1")]
    ZeroComponents,
    #[error("dimension {0} out of range")]
    DimensionOutOfRange(usize),
    #[error("quadrature points per axis must lie in 1..=5, got {0}")]
    QuadratureOrderOutOfRange(usize),
    #[error("boundary tag {0} does not exist on this mesh")]
    UnknownTag(u32),
    #[error("kernel produced a local system of wrong size: expected {expected}, got {got}")]
    KernelDimensionMismatch { expected: usize, got: usize },
    #[error("vector length {got} does not match {expected} dofs")]
    VectorLengthMismatch { expected: usize, got: usize },
}

/// Scalar or vector Lagrange space of degree 1 or 2.
///
/// Scalar dofs live on the tensor lattice with `degree * n_cells + 1` nodes
/// per axis, numbered lexicographically with x fastest; nodes shared between
/// cells get a single index. Vector spaces interleave components per node:
/// dof = node * n_components + component.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    degree: usize,
    n_components: usize,
    nodes_per_axis: [usize; 3],
    n_nodes: usize,
}

pub fn build_space(
    mesh: Arc<Mesh>,
    degree: usize,
    n_components: usize,
) -> Result<FeSpace, FemError> {
    if !(1..=2).contains(&degree) {
        return Err(FemError::UnsupportedDegree(degree));
    }
    if n_components == 0 {
        return Err(FemError::ZeroComponents);
    }
    let mut nodes_per_axis = [1usize; 3];
    for axis in 0..mesh.dim() {
        nodes_per_axis[axis] = degree * mesh.subdivisions()[axis] + 1;
    }
    let n_nodes = nodes_per_axis.iter().product();
    Ok(FeSpace {
        mesh,
        degree,
        n_components,
        nodes_per_axis,
        n_nodes,
    })
}

impl FeSpace {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.n_components
    }

    pub fn nodes_per_cell(&self) -> usize {
        (self.degree + 1).pow(self.mesh.dim() as u32)
    }

    pub fn dofs_per_cell(&self) -> usize {
        self.nodes_per_cell() * self.n_components
    }

    pub fn dof_node(&self, dof: usize) -> usize {
        dof / self.n_components
    }

    pub fn dof_component(&self, dof: usize) -> usize {
        dof % self.n_components
    }

    /// Scalar node ids of a cell in tensor order, x index fastest.
    pub fn cell_nodes(&self, cell: usize) -> Vec<usize> {
        let dim = self.mesh.dim();
        let p = self.degree;
        let ijk = self.mesh.cell_multi_index(cell);
        let n1d = p + 1;
        let count = self.nodes_per_cell();
        let mut nodes = Vec::with_capacity(count);
        for local in 0..count {
            let mut idx = local;
            let mut lattice = [0usize; 3];
            for (axis, coord) in lattice.iter_mut().enumerate().take(dim) {
                *coord = p * ijk[axis] + idx % n1d;
                idx /= n1d;
            }
            nodes.push(self.node_id(lattice));
        }
        nodes
    }

    /// Global dof ids of a cell: per node, all components in order.
    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let nodes = self.cell_nodes(cell);
        if self.n_components == 1 {
            return nodes;
        }
        let mut dofs = Vec::with_capacity(nodes.len() * self.n_components);
        for node in nodes {
            for c in 0..self.n_components {
                dofs.push(node * self.n_components + c);
            }
        }
        dofs
    }

    fn node_id(&self, lattice: [usize; 3]) -> usize {
        lattice[0] + self.nodes_per_axis[0] * (lattice[1] + self.nodes_per_axis[1] * lattice[2])
    }

    pub(crate) fn node_lattice(&self, node: usize) -> [usize; 3] {
        let nx = self.nodes_per_axis[0];
        let ny = self.nodes_per_axis[1];
        [node % nx, (node / nx) % ny, node / (nx * ny)]
    }

    pub fn node_point(&self, node: usize) -> Point {
        let dim = self.mesh.dim();
        let lattice = self.node_lattice(node);
        let coords: Vec<f64> = (0..dim)
            .map(|a| {
                let last = self.nodes_per_axis[a] - 1;
                if lattice[a] == last {
                    self.mesh.upper()[a]
                } else {
                    self.mesh.lower()[a]
                        + lattice[a] as f64 * (self.mesh.spacing(a) / self.degree as f64)
                }
            })
            .collect();
        Point::new(&coords)
    }

    pub fn support_point(&self, dof: usize) -> Point {
        self.node_point(self.dof_node(dof))
    }

    /// Local coefficient slice of a global vector on one cell (scalar
    /// spaces), in the order used by [`FeCellValues`].
    pub fn cell_dof_values(&self, cell: usize, vec: &DVector) -> Vec<f64> {
        debug_assert_eq!(self.n_components, 1);
        self.cell_nodes(cell).iter().map(|n| vec[*n]).collect()
    }
}

/// Vector of `f` evaluated at every dof support point. For vector spaces the
/// same scalar function fills every component.
pub fn interpolate<F: Fn(&Point) -> f64>(space: &FeSpace, f: F) -> DVector {
    let mut v = DVector::zeros(space.n_dofs());
    for node in 0..space.n_nodes() {
        let value = f(&space.node_point(node));
        for c in 0..space.n_components() {
            v[node * space.n_components() + c] = value;
        }
    }
    v
}

/// Minimizer of the distance to the dof support points, ties to the lowest
/// dof index (in particular, the first component at a shared node).
pub fn find_closest_dof(space: &FeSpace, point: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for node in 0..space.n_nodes() {
        let d = space.node_point(node).distance(point);
        if d < best.1 {
            best = (node * space.n_components(), d);
        }
    }
    best
}

/// Which discrepancy to measure in [`error_norm`]. The H1 seminorm needs the
/// exact gradient alongside the values.
pub enum ErrorNorm<'a> {
    L2,
    H1Semi(&'a dyn Fn(&Point) -> Vec<f64>),
    LinfNodal,
}

/// Error of a scalar FE function against an exact solution. The quadrature
/// must be accurate enough for the integrand the caller has in mind; it is
/// ignored by the nodal max norm.
pub fn error_norm(
    space: &FeSpace,
    vec: &DVector,
    exact: &dyn Fn(&Point) -> f64,
    norm: ErrorNorm,
    quadrature: &Quadrature,
) -> Result<f64, FemError> {
    if vec.len() != space.n_dofs() {
        return Err(FemError::VectorLengthMismatch {
            expected: space.n_dofs(),
            got: vec.len(),
        });
    }
    let dim = space.mesh().dim();
    match norm {
        ErrorNorm::LinfNodal => {
            let mut worst = 0.0f64;
            for dof in 0..space.n_dofs() {
                let diff = (vec[dof] - exact(&space.support_point(dof))).abs();
                worst = worst.max(diff);
            }
            Ok(worst)
        }
        ErrorNorm::L2 => {
            let mut total = 0.0;
            for cell in 0..space.mesh().n_cells() {
                let values = reinit_cell(space, cell, quadrature);
                let coeffs = space.cell_dof_values(cell, vec);
                for q in 0..values.n_q_points() {
                    let diff = values.function_value(&coeffs, q) - exact(values.point(q));
                    total += diff * diff * values.jxw(q);
                }
            }
            Ok(total.sqrt())
        }
        ErrorNorm::H1Semi(exact_grad) => {
            let mut total = 0.0;
            for cell in 0..space.mesh().n_cells() {
                let values = reinit_cell(space, cell, quadrature);
                let coeffs = space.cell_dof_values(cell, vec);
                for q in 0..values.n_q_points() {
                    let gh = values.function_gradient(&coeffs, q);
                    let ge = exact_grad(values.point(q));
                    for a in 0..dim {
                        let diff = gh[a] - ge[a];
                        total += diff * diff * values.jxw(q);
                    }
                }
            }
            Ok(total.sqrt())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_box;

    fn unit_square(n: usize, degree: usize, components: usize) -> FeSpace {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap());
        build_space(mesh, degree, components).unwrap()
    }

    #[test]
    fn dof_counts_follow_the_lattice_formula() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[4]).unwrap());
        assert_eq!(build_space(mesh, 1, 1).unwrap().n_dofs(), 5);

        let mesh = Arc::new(generate_box(3, &[-1.0; 3], &[1.0; 3], &[8; 3]).unwrap());
        assert_eq!(build_space(mesh, 2, 1).unwrap().n_dofs(), 17 * 17 * 17);

        assert_eq!(unit_square(2, 2, 2).n_dofs(), 50);
    }

    #[test]
    fn unsupported_degree_is_an_error() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[2]).unwrap());
        assert!(matches!(
            build_space(mesh.clone(), 3, 1),
            Err(FemError::UnsupportedDegree(3))
        ));
        assert!(matches!(
            build_space(mesh, 1, 0),
            Err(FemError::ZeroComponents)
        ));
    }

    #[test]
    fn shared_nodes_get_shared_indices() {
        let space = unit_square(2, 1, 1);
        let left = space.cell_nodes(0);
        let right = space.cell_nodes(1);
        assert_eq!(left[1], right[0]);
        assert_eq!(left[3], right[2]);
    }

    #[test]
    fn quadratic_space_has_midpoints_as_support_points() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[2]).unwrap());
        let space = build_space(mesh, 2, 1).unwrap();
        let xs: Vec<f64> = (0..space.n_dofs())
            .map(|d| space.support_point(d)[0])
            .collect();
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn interpolation_reproduces_constants_and_coordinates() {
        let space = unit_square(3, 1, 1);
        let c = interpolate(&space, |_| 4.5);
        assert!(c.iter().all(|v| *v == 4.5));
        let x = interpolate(&space, |p| p[0]);
        for dof in 0..space.n_dofs() {
            assert_eq!(x[dof], space.support_point(dof)[0]);
        }
    }

    #[test]
    fn quadratic_interpolation_of_a_quadratic_is_exact() {
        let space = unit_square(2, 2, 1);
        let exact = |p: &Point| p[0] * p[0] + 0.5 * p[1] * p[1] - p[0] * p[1];
        let vec = interpolate(&space, exact);
        let quadrature = gauss_quadrature(2, 3).unwrap();
        let err = error_norm(&space, &vec, &exact, ErrorNorm::L2, &quadrature).unwrap();
        assert!(err < 1e-14, "L2 error {err}");
    }

    #[test]
    fn nodal_error_of_zero_vector_against_one_is_one() {
        let space = unit_square(2, 1, 1);
        let zero = DVector::zeros(space.n_dofs());
        let quadrature = gauss_quadrature(2, 2).unwrap();
        let err = error_norm(&space, &zero, &|_| 1.0, ErrorNorm::LinfNodal, &quadrature).unwrap();
        assert_eq!(err, 1.0);
    }

    #[test]
    fn interpolant_l2_error_shrinks_four_fold_for_linears() {
        let exact = |p: &Point| (std::f64::consts::PI * p[0]).sin();
        let quadrature = gauss_quadrature(2, 4).unwrap();
        let errs: Vec<f64> = [8, 16]
            .iter()
            .map(|n| {
                let space = unit_square(*n, 1, 1);
                let vec = interpolate(&space, exact);
                error_norm(&space, &vec, &exact, ErrorNorm::L2, &quadrature).unwrap()
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn closest_dof_scans_support_points() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[2]).unwrap());
        let space = build_space(mesh, 2, 1).unwrap();
        let (dof, d) = find_closest_dof(&space, &Point::new(&[0.3]));
        assert_eq!(dof, 1);
        assert!((d - 0.05).abs() < 1e-12);
        let (dof, d) = find_closest_dof(&space, &Point::new(&[0.75]));
        assert_eq!(dof, 3);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn closest_dof_in_vector_space_is_the_first_component() {
        let space = unit_square(2, 1, 3);
        let (dof, d) = find_closest_dof(&space, &Point::new(&[0.5, 0.5]));
        assert_eq!(d, 0.0);
        assert_eq!(space.dof_component(dof), 0);
        assert_eq!(space.support_point(dof), Point::new(&[0.5, 0.5]));
    }

    #[test]
    fn h1_seminorm_of_exact_linear_is_zero() {
        let space = unit_square(3, 1, 1);
        let vec = interpolate(&space, |p| 2.0 * p[0] - p[1]);
        let quadrature = gauss_quadrature(2, 2).unwrap();
        let grad = |_: &Point| vec![2.0, -1.0];
        let err = error_norm(
            &space,
            &vec,
            &|p| 2.0 * p[0] - p[1],
            ErrorNorm::H1Semi(&grad),
            &quadrature,
        )
        .unwrap();
        assert!(err < 1e-13);
    }
}
