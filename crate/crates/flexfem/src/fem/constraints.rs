//! Dirichlet constraints and their application to vectors and systems.

use super::{FeSpace, FemError};
use crate::linalg::{CsrMatrix, DVector};
use crate::mesh::Point;
use std::collections::BTreeMap;

/// A set of dofs pinned to fixed values.
#[derive(Debug, Clone, Default)]
pub struct Constraints {
    fixed: BTreeMap<usize, f64>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pins a dof; a later call for the same dof wins.
    pub fn fix(&mut self, dof: usize, value: f64) {
        self.fixed.insert(dof, value);
    }

    /// Absorbs another set, the other side winning on shared dofs.
    pub fn merge(&mut self, other: &Constraints) {
        for (dof, value) in &other.fixed {
            self.fixed.insert(*dof, *value);
        }
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.fixed.contains_key(&dof)
    }

    pub fn value(&self, dof: usize) -> Option<f64> {
        self.fixed.get(&dof).copied()
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fixed.iter().map(|(d, v)| (*d, *v))
    }

    /// Symmetric elimination: constrained columns are condensed into the
    /// right-hand side and zeroed, constrained rows become identity rows with
    /// the fixed value on the right. An SPD system stays SPD.
    pub fn condense_system(&self, matrix: &mut CsrMatrix, rhs: &mut DVector) {
        if self.is_empty() {
            return;
        }
        for row in 0..matrix.n_rows() {
            if self.is_constrained(row) {
                continue;
            }
            let (cols, vals) = matrix.row_mut(row);
            let mut shift = 0.0;
            for (col, v) in cols.iter().zip(vals.iter_mut()) {
                if let Some(g) = self.fixed.get(col) {
                    shift += *v * g;
                    *v = 0.0;
                }
            }
            rhs[row] -= shift;
        }
        for (&dof, &g) in &self.fixed {
            let (cols, vals) = matrix.row_mut(dof);
            for (col, v) in cols.iter().zip(vals.iter_mut()) {
                *v = if *col == dof { 1.0 } else { 0.0 };
            }
            rhs[dof] = g;
        }
    }
}

/// Constrains every dof whose support point lies on a face with the given
/// tag to `g` evaluated there; all components of a node are pinned alike.
pub fn dirichlet_constraints<F: Fn(&Point) -> f64>(
    space: &FeSpace,
    tag: u32,
    g: F,
) -> Result<Constraints, FemError> {
    let dim = space.mesh().dim();
    if tag as usize >= 2 * dim {
        return Err(FemError::UnknownTag(tag));
    }
    let axis = (tag / 2) as usize;
    let side = (tag % 2) as usize;
    let p = space.degree();
    let boundary_index = if side == 0 {
        0
    } else {
        p * space.mesh().subdivisions()[axis]
    };
    let mut constraints = Constraints::new();
    for node in 0..space.n_nodes() {
        if space.node_lattice(node)[axis] != boundary_index {
            continue;
        }
        let value = g(&space.node_point(node));
        for c in 0..space.n_components() {
            constraints.fix(node * space.n_components() + c, value);
        }
    }
    Ok(constraints)
}

/// Overwrites constrained entries with their fixed values.
pub fn apply_dirichlet_to_vector(constraints: &Constraints, vec: &mut DVector) {
    for (dof, value) in constraints.iter() {
        vec[dof] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_space;
    use crate::mesh::generate_box;
    use std::sync::Arc;

    #[test]
    fn interval_endpoints_are_the_boundary_dofs() {
        let mesh = Arc::new(generate_box(1, &[0.0], &[1.0], &[4]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let mut c = dirichlet_constraints(&space, 0, |_| 0.0).unwrap();
        c.merge(&dirichlet_constraints(&space, 1, |_| 0.0).unwrap());
        let dofs: Vec<usize> = c.iter().map(|(d, _)| d).collect();
        assert_eq!(dofs, vec![0, 4]);
        assert!(c.iter().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn boundary_values_come_from_the_support_points() {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let c = dirichlet_constraints(&space, 1, |p| p[0]).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|(_, v)| v == 1.0));
    }

    #[test]
    fn face_of_a_cube_constrains_a_full_node_plane() {
        let mesh = Arc::new(generate_box(3, &[0.0; 3], &[1.0; 3], &[4, 4, 4]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        let c = dirichlet_constraints(&space, 4, |_| 1.0).unwrap();
        assert_eq!(c.len(), 25);
    }

    #[test]
    fn unknown_tag_is_an_error() {
        let mesh = Arc::new(generate_box(2, &[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let space = build_space(mesh, 1, 1).unwrap();
        assert!(matches!(
            dirichlet_constraints(&space, 4, |_| 0.0),
            Err(FemError::UnknownTag(4))
        ));
    }

    #[test]
    fn vector_application_is_idempotent_and_local() {
        let mut c = Constraints::new();
        c.fix(1, 1.0);
        c.fix(3, 1.0);
        let mut v = DVector::zeros(5);
        apply_dirichlet_to_vector(&c, &mut v);
        assert_eq!(v.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0]);
        apply_dirichlet_to_vector(&c, &mut v);
        assert_eq!(v.as_slice(), &[0.0, 1.0, 0.0, 1.0, 0.0]);

        let mut w = DVector::constant(5, 7.0);
        apply_dirichlet_to_vector(&Constraints::new(), &mut w);
        assert!(w.iter().all(|x| *x == 7.0));
    }

    #[test]
    fn condensation_is_symmetric_elimination() {
        let mut a = CsrMatrix::from_dense(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ]);
        let mut b = DVector::zeros(3);
        let mut c = Constraints::new();
        c.fix(0, 2.0);
        c.condense_system(&mut a, &mut b);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(b[0], 2.0);
        assert_eq!(b[1], 2.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert_eq!(a.get(2, 1), -1.0);
    }
}
