//! Dof pairing across a conforming interface between two boxes and the
//! extraction/application of interface data.

use super::CouplingError;
use crate::fem::{dirichlet_constraints, Constraints, FeSpace};
use crate::linalg::{CsrMatrix, DVector};
use crate::mesh::Point;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Bijection between the interface dofs of two spaces, ordered by a
/// lexicographic sort of the support coordinates.
#[derive(Debug, Clone)]
pub struct InterfaceMap {
    pairs: Vec<(usize, usize)>,
    coordinates: Vec<Point>,
    tolerance: f64,
}

impl InterfaceMap {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Support point of pair `index`, taken from the first side.
    pub fn coordinate(&self, index: usize) -> &Point {
        &self.coordinates[index]
    }

    fn dof(&self, index: usize, side: Side) -> usize {
        match side {
            Side::First => self.pairs[index].0,
            Side::Second => self.pairs[index].1,
        }
    }
}

/// Matching tolerance used when none is given: 1e-10 times the mesh
/// diagonal.
pub fn default_interface_tolerance(mesh: &crate::mesh::Mesh) -> f64 {
    let diagonal: f64 = mesh
        .lower()
        .iter()
        .zip(mesh.upper())
        .map(|(lo, hi)| (hi - lo) * (hi - lo))
        .sum::<f64>()
        .sqrt();
    1e-10 * diagonal
}

fn tagged_dofs_sorted(
    space: &FeSpace,
    tag: u32,
    tolerance: f64,
) -> Result<Vec<(usize, Point)>, CouplingError> {
    let constraints = dirichlet_constraints(space, tag, &|_: &Point| 0.0)?;
    let mut dofs: Vec<(usize, Point)> = constraints
        .iter()
        .map(|(dof, _)| dof)
        .filter(|dof| space.dof_component(*dof) == 0)
        .map(|dof| (dof, space.support_point(dof)))
        .collect();
    dofs.sort_by(|a, b| compare_points(&a.1, &b.1, tolerance));
    Ok(dofs)
}

/// Lexicographic comparison where coordinates closer than `tolerance` count
/// as equal, so both sides sort identically despite rounding noise.
fn compare_points(a: &Point, b: &Point, tolerance: f64) -> Ordering {
    for axis in 0..3 {
        let (pa, pb) = (a[axis], b[axis]);
        if (pa - pb).abs() > tolerance {
            return pa.partial_cmp(&pb).unwrap();
        }
    }
    Ordering::Equal
}

/// Pairs the dofs on `tag1` of `space1` with those on `tag2` of `space2` by
/// coordinate matching. Requires conforming discretizations: equal counts
/// and coincident support points within `tolerance` (None picks the
/// default).
pub fn build_interface_map(
    space1: &FeSpace,
    tag1: u32,
    space2: &FeSpace,
    tag2: u32,
    tolerance: Option<f64>,
) -> Result<InterfaceMap, CouplingError> {
    let tolerance = tolerance.unwrap_or_else(|| default_interface_tolerance(space1.mesh()));
    let side1 = tagged_dofs_sorted(space1, tag1, tolerance)?;
    let side2 = tagged_dofs_sorted(space2, tag2, tolerance)?;
    if side1.len() != side2.len() {
        return Err(CouplingError::InterfaceSizeMismatch(
            side1.len(),
            side2.len(),
        ));
    }
    let mut pairs = Vec::with_capacity(side1.len());
    let mut coordinates = Vec::with_capacity(side1.len());
    for ((dof1, p1), (dof2, p2)) in side1.into_iter().zip(side2) {
        if p1.distance(&p2) > tolerance {
            return Err(CouplingError::UnmatchedInterfaceDof(
                p1[0], p1[1], p1[2], tolerance,
            ));
        }
        pairs.push((dof1, dof2));
        coordinates.push(p1);
    }
    Ok(InterfaceMap {
        pairs,
        coordinates,
        tolerance,
    })
}

/// Reads the paired dofs of `side` out of a full-length vector, in map
/// order.
pub fn extract_interface_data(
    map: &InterfaceMap,
    side: Side,
    vector: &DVector,
) -> DVector {
    DVector::from_vec(
        (0..map.len())
            .map(|i| vector[map.dof(i, side)])
            .collect(),
    )
}

/// Dirichlet constraints pinning `side`'s paired dofs to `values`.
pub fn apply_interface_dirichlet(
    map: &InterfaceMap,
    side: Side,
    values: &DVector,
) -> Result<Constraints, CouplingError> {
    if values.len() != map.len() {
        return Err(CouplingError::InterfaceDataLength {
            expected: map.len(),
            got: values.len(),
        });
    }
    let mut constraints = Constraints::new();
    for i in 0..map.len() {
        constraints.fix(map.dof(i, side), values[i]);
    }
    Ok(constraints)
}

/// Interface restriction of the algebraic residual A u - b, the discrete
/// flux functional of `side`'s subdomain. `matrix` and `rhs` must be the
/// unconstrained (natural) assembly of that subdomain.
pub fn interface_residual(
    map: &InterfaceMap,
    side: Side,
    matrix: &CsrMatrix,
    rhs: &DVector,
    u: &DVector,
) -> DVector {
    let full = matrix.spmv(u);
    DVector::from_vec(
        (0..map.len())
            .map(|i| {
                let dof = map.dof(i, side);
                full[dof] - rhs[dof]
            })
            .collect(),
    )
}
