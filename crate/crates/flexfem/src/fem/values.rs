//! Shape functions and per-cell integration data.
//!
//! Shape functions are tensor products of 1D Lagrange polynomials on
//! equispaced reference nodes. The mesh mapping is affine and axis-aligned,
//! so physical gradients are reference gradients scaled by 1/h per axis and
//! JxW is the cell volume times the reference weight.

use super::{FeSpace, FemError, Quadrature};
use crate::mesh::{face_axis_side, Point};

/// 1D Lagrange basis value for equispaced nodes on [0,1], degree 1 or 2.
pub(super) fn lagrange_1d(degree: usize, node: usize, x: f64) -> f64 {
    match (degree, node) {
        (1, 0) => 1.0 - x,
        (1, 1) => x,
        (2, 0) => 2.0 * (x - 0.5) * (x - 1.0),
        (2, 1) => -4.0 * x * (x - 1.0),
        (2, 2) => 2.0 * x * (x - 0.5),
        _ => unreachable!("degree {degree} node {node}"),
    }
}

pub(super) fn lagrange_1d_deriv(degree: usize, node: usize, x: f64) -> f64 {
    match (degree, node) {
        (1, 0) => -1.0,
        (1, 1) => 1.0,
        (2, 0) => 4.0 * x - 3.0,
        (2, 1) => 4.0 - 8.0 * x,
        (2, 2) => 4.0 * x - 1.0,
        _ => unreachable!("degree {degree} node {node}"),
    }
}

/// Shape values, physical gradients, JxW, and physical coordinates at each
/// quadrature point of one cell. Shape functions are indexed by local node
/// in tensor order (x fastest), matching [`FeSpace::cell_nodes`].
#[derive(Debug, Clone)]
pub struct FeCellValues {
    dim: usize,
    n_shape: usize,
    n_q: usize,
    /// Flattened [q][i].
    values: Vec<f64>,
    /// Flattened [q][i], physical coordinates.
    gradients: Vec<[f64; 3]>,
    jxw: Vec<f64>,
    points: Vec<Point>,
}

impl FeCellValues {
    pub fn n_q_points(&self) -> usize {
        self.n_q
    }

    pub fn n_shape_functions(&self) -> usize {
        self.n_shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape_value(&self, i: usize, q: usize) -> f64 {
        self.values[q * self.n_shape + i]
    }

    /// Physical gradient, length `dim`.
    pub fn shape_grad(&self, i: usize, q: usize) -> &[f64] {
        &self.gradients[q * self.n_shape + i][..self.dim]
    }

    pub fn jxw(&self, q: usize) -> f64 {
        self.jxw[q]
    }

    pub fn point(&self, q: usize) -> &Point {
        &self.points[q]
    }

    /// Value of the FE function with the given local coefficients.
    pub fn function_value(&self, coeffs: &[f64], q: usize) -> f64 {
        debug_assert_eq!(coeffs.len(), self.n_shape);
        coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.shape_value(i, q))
            .sum()
    }

    /// Gradient of the FE function with the given local coefficients.
    pub fn function_gradient(&self, coeffs: &[f64], q: usize) -> [f64; 3] {
        debug_assert_eq!(coeffs.len(), self.n_shape);
        let mut g = [0.0; 3];
        for (i, c) in coeffs.iter().enumerate() {
            let grad = &self.gradients[q * self.n_shape + i];
            for a in 0..self.dim {
                g[a] += c * grad[a];
            }
        }
        g
    }
}

/// Evaluates all shape data of one cell at the given quadrature points.
pub fn reinit_cell(space: &FeSpace, cell: usize, quadrature: &Quadrature) -> FeCellValues {
    let mesh = space.mesh();
    let dim = mesh.dim();
    assert_eq!(quadrature.dim(), dim, "cell quadrature dimension");
    let p = space.degree();
    let nodes_1d = p + 1;
    let n_shape = space.nodes_per_cell();
    let n_q = quadrature.len();
    let origin = mesh.cell_origin(cell);
    let h: Vec<f64> = (0..dim).map(|a| mesh.spacing(a)).collect();
    let volume = mesh.cell_volume(cell);

    let mut values = Vec::with_capacity(n_q * n_shape);
    let mut gradients = Vec::with_capacity(n_q * n_shape);
    let mut jxw = Vec::with_capacity(n_q);
    let mut points = Vec::with_capacity(n_q);
    for q in 0..n_q {
        let xi = quadrature.point_raw(q);
        for i in 0..n_shape {
            let mut idx = i;
            let mut node_1d = [0usize; 3];
            for axis_node in node_1d.iter_mut().take(dim) {
                *axis_node = idx % nodes_1d;
                idx /= nodes_1d;
            }
            let axis_values: Vec<f64> = (0..dim)
                .map(|a| lagrange_1d(p, node_1d[a], xi[a]))
                .collect();
            values.push(axis_values.iter().product());
            let mut grad = [0.0; 3];
            for a in 0..dim {
                let mut g = lagrange_1d_deriv(p, node_1d[a], xi[a]) / h[a];
                for (b, v) in axis_values.iter().enumerate() {
                    if b != a {
                        g *= v;
                    }
                }
                grad[a] = g;
            }
            gradients.push(grad);
        }
        jxw.push(volume * quadrature.weight(q));
        let coords: Vec<f64> = (0..dim).map(|a| origin[a] + h[a] * xi[a]).collect();
        points.push(Point::new(&coords));
    }
    FeCellValues {
        dim,
        n_shape,
        n_q,
        values,
        gradients,
        jxw,
        points,
    }
}

/// Shape data of the full cell basis restricted to one face. Shape functions
/// without support on the face simply evaluate to zero there.
pub fn reinit_face(
    space: &FeSpace,
    cell: usize,
    local_face: usize,
    face_quadrature: &Quadrature,
) -> Result<FeCellValues, FemError> {
    let mesh = space.mesh();
    let dim = mesh.dim();
    if face_quadrature.dim() + 1 != dim {
        return Err(FemError::DimensionOutOfRange(face_quadrature.dim()));
    }
    let (face_axis, side) = face_axis_side(local_face);
    let p = space.degree();
    let nodes_1d = p + 1;
    let n_shape = space.nodes_per_cell();
    let n_q = face_quadrature.len();
    let origin = mesh.cell_origin(cell);
    let h: Vec<f64> = (0..dim).map(|a| mesh.spacing(a)).collect();
    let area = mesh.face_area(face_axis);
    let tangential: Vec<usize> = (0..dim).filter(|a| *a != face_axis).collect();

    let mut values = Vec::with_capacity(n_q * n_shape);
    let mut gradients = Vec::with_capacity(n_q * n_shape);
    let mut jxw = Vec::with_capacity(n_q);
    let mut points = Vec::with_capacity(n_q);
    for q in 0..n_q {
        let face_xi = face_quadrature.point_raw(q);
        let mut xi = [0.0; 3];
        xi[face_axis] = side as f64;
        for (t, axis) in tangential.iter().enumerate() {
            xi[*axis] = face_xi[t];
        }
        for i in 0..n_shape {
            let mut idx = i;
            let mut node_1d = [0usize; 3];
            for axis_node in node_1d.iter_mut().take(dim) {
                *axis_node = idx % nodes_1d;
                idx /= nodes_1d;
            }
            let axis_values: Vec<f64> = (0..dim)
                .map(|a| lagrange_1d(p, node_1d[a], xi[a]))
                .collect();
            values.push(axis_values.iter().product());
            let mut grad = [0.0; 3];
            for a in 0..dim {
                let mut g = lagrange_1d_deriv(p, node_1d[a], xi[a]) / h[a];
                for (b, v) in axis_values.iter().enumerate() {
                    if b != a {
                        g *= v;
                    }
                }
                grad[a] = g;
            }
            gradients.push(grad);
        }
        jxw.push(area * face_quadrature.weight(q));
        let coords: Vec<f64> = (0..dim).map(|a| origin[a] + h[a] * xi[a]).collect();
        points.push(Point::new(&coords));
    }
    Ok(FeCellValues {
        dim,
        n_shape,
        n_q,
        values,
        gradients,
        jxw,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_space, gauss_quadrature};
    use crate::mesh::generate_box;
    use std::sync::Arc;

    fn space_2d(n: usize, degree: usize) -> FeSpace {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap());
        build_space(mesh, degree, 1).unwrap()
    }

    #[test]
    fn linear_shape_values_are_nodal_at_vertices() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[1]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        // Degree-1 rule puts the single point at the midpoint; use nodes via
        // a handmade check of the 1D basis instead.
        for (node, x, expected) in [(0, 0.0, 1.0), (0, 1.0, 0.0), (1, 0.0, 0.0), (1, 1.0, 1.0)] {
            assert_eq!(lagrange_1d(1, node, x), expected);
        }
        let quadrature = gauss_quadrature(1, 2).unwrap();
        let values = reinit_cell(&space, 0, &quadrature);
        assert_eq!(values.n_shape_functions(), 2);
    }

    #[test]
    fn quadratic_basis_is_nodal_on_reference_nodes() {
        for node in 0..3 {
            for (j, x) in [0.0, 0.5, 1.0].iter().enumerate() {
                let expected = if node == j { 1.0 } else { 0.0 };
                assert_eq!(lagrange_1d(2, node, *x), expected);
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradient_sum() {
        for degree in [1, 2] {
            let space = space_2d(3, degree);
            let quadrature = gauss_quadrature(2, degree + 1).unwrap();
            for cell in 0..space.mesh().n_cells() {
                let v = reinit_cell(&space, cell, &quadrature);
                for q in 0..v.n_q_points() {
                    let sum: f64 = (0..v.n_shape_functions()).map(|i| v.shape_value(i, q)).sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                    for a in 0..2 {
                        let gsum: f64 = (0..v.n_shape_functions())
                            .map(|i| v.shape_grad(i, q)[a])
                            .sum();
                        assert!(gsum.abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn jxw_sums_to_cell_volume() {
        let space = space_2d(4, 2);
        let quadrature = gauss_quadrature(2, 3).unwrap();
        let v = reinit_cell(&space, 7, &quadrature);
        let total: f64 = (0..v.n_q_points()).map(|q| v.jxw(q)).sum();
        assert!((total - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_of_coordinate_function_is_unit_vector() {
        let space = space_2d(3, 1);
        let quadrature = gauss_quadrature(2, 2).unwrap();
        // Local coefficients of f(x, y) = x on any cell are the node x-coords.
        for cell in [0, 4, 8] {
            let coeffs: Vec<f64> = space
                .cell_nodes(cell)
                .iter()
                .map(|n| space.node_point(*n)[0])
                .collect();
            let v = reinit_cell(&space, cell, &quadrature);
            for q in 0..v.n_q_points() {
                let g = v.function_gradient(&coeffs, q);
                assert!((g[0] - 1.0).abs() < 1e-13);
                assert!(g[1].abs() < 1e-13);
            }
        }
    }

    #[test]
    fn face_values_cover_only_the_face() {
        let space = space_2d(2, 1);
        let fq = gauss_quadrature(1, 2).unwrap();
        // Cell 0, face x-low: edge from (0,0) to (0,0.5).
        let v = reinit_face(&space, 0, 0, &fq).unwrap();
        let total: f64 = (0..v.n_q_points()).map(|q| v.jxw(q)).sum();
        assert!((total - 0.5).abs() < 1e-15);
        for q in 0..v.n_q_points() {
            assert_eq!(v.point(q)[0], 0.0);
            // Shape functions of the two off-face nodes vanish on the face.
            assert!(v.shape_value(1, q).abs() < 1e-15);
            assert!(v.shape_value(3, q).abs() < 1e-15);
        }
    }

    #[test]
    fn face_of_interval_mesh_is_point_evaluation() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[2.0], &[2]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let fq = gauss_quadrature(0, 1).unwrap();
        let v = reinit_face(&space, 1, 1, &fq).unwrap();
        assert_eq!(v.n_q_points(), 1);
        assert_eq!(v.jxw(0), 1.0);
        assert_eq!(v.point(0)[0], 2.0);
        assert_eq!(v.shape_value(1, 0), 1.0);
    }
}
