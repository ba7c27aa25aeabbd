//! Global assembly: scatter-add of per-cell kernels into a CSR system.

use super::{reinit_cell, reinit_face, Constraints, FeCellValues, FeSpace, FemError, Quadrature};
use crate::linalg::{CsrMatrix, DVector, SparsityPattern};
use rayon::prelude::*;

/// Dense local contribution of one cell: row-major `n x n` matrix and a
/// length-`n` right-hand side, zeroed before every kernel call.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    n: usize,
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl LocalSystem {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            matrix: vec![0.0; n * n],
            rhs: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn reset(&mut self) {
        self.matrix.iter_mut().for_each(|v| *v = 0.0);
        self.rhs.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.matrix[i * self.n + j] += value;
    }

    pub fn add_rhs(&mut self, i: usize, value: f64) {
        self.rhs[i] += value;
    }

    fn check(&self) -> Result<(), FemError> {
        if self.matrix.len() != self.n * self.n {
            return Err(FemError::KernelDimensionMismatch {
                expected: self.n * self.n,
                got: self.matrix.len(),
            });
        }
        if self.rhs.len() != self.n {
            return Err(FemError::KernelDimensionMismatch {
                expected: self.n,
                got: self.rhs.len(),
            });
        }
        Ok(())
    }
}

/// Pattern covering every pair of dofs that share a cell.
pub fn build_sparsity(space: &FeSpace) -> SparsityPattern {
    let n = space.n_dofs();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for cell in 0..space.mesh().n_cells() {
        let dofs = space.cell_dofs(cell);
        for i in &dofs {
            rows[*i].extend_from_slice(&dofs);
        }
    }
    SparsityPattern::from_rows(n, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssemblyMode {
    Serial,
    /// Cells are assembled in parallel over contiguous ranges; the partial
    /// results are reduced in a fixed order, so a given chunk layout gives a
    /// deterministic result that matches serial assembly up to floating-point
    /// reassociation.
    Parallel,
}

fn assemble_range<K>(
    space: &FeSpace,
    quadrature: &Quadrature,
    kernel: &K,
    pattern: &SparsityPattern,
    cells: std::ops::Range<usize>,
) -> Result<(CsrMatrix, DVector), FemError>
where
    K: Fn(usize, &FeCellValues, &mut LocalSystem),
{
    let mut matrix = CsrMatrix::zeros_from_pattern(pattern.clone());
    let mut rhs = DVector::zeros(space.n_dofs());
    let n_local = space.dofs_per_cell();
    let mut local = LocalSystem::new(n_local);
    for cell in cells {
        let values = reinit_cell(space, cell, quadrature);
        local.reset();
        kernel(cell, &values, &mut local);
        local.check()?;
        let dofs = space.cell_dofs(cell);
        for (i, gi) in dofs.iter().enumerate() {
            for (j, gj) in dofs.iter().enumerate() {
                let v = local.matrix[i * n_local + j];
                if v != 0.0 {
                    matrix.add(*gi, *gj, v);
                }
            }
            rhs[*gi] += local.rhs[i];
        }
    }
    Ok((matrix, rhs))
}

/// Assembles matrix and right-hand side over all cells and applies the
/// constraints by symmetric elimination.
pub fn assemble_system<K>(
    space: &FeSpace,
    quadrature: &Quadrature,
    kernel: K,
    constraints: &Constraints,
) -> Result<(CsrMatrix, DVector), FemError>
where
    K: Fn(usize, &FeCellValues, &mut LocalSystem) + Sync,
{
    assemble_system_mode(space, quadrature, kernel, constraints, AssemblyMode::Serial)
}

pub fn assemble_system_mode<K>(
    space: &FeSpace,
    quadrature: &Quadrature,
    kernel: K,
    constraints: &Constraints,
    mode: AssemblyMode,
) -> Result<(CsrMatrix, DVector), FemError>
where
    K: Fn(usize, &FeCellValues, &mut LocalSystem) + Sync,
{
    let pattern = build_sparsity(space);
    let n_cells = space.mesh().n_cells();
    let (mut matrix, mut rhs) = match mode {
        AssemblyMode::Serial => assemble_range(space, quadrature, &kernel, &pattern, 0..n_cells)?,
        AssemblyMode::Parallel => {
            let n_chunks = rayon::current_num_threads().clamp(1, n_cells.max(1));
            let chunk = n_cells.div_ceil(n_chunks);
            let partials: Vec<Result<(CsrMatrix, DVector), FemError>> = (0..n_chunks)
                .into_par_iter()
                .map(|c| {
                    let start = c * chunk;
                    let end = ((c + 1) * chunk).min(n_cells);
                    assemble_range(space, quadrature, &kernel, &pattern, start..end)
                })
                .collect();
            let mut matrix = CsrMatrix::zeros_from_pattern(pattern.clone());
            let mut rhs = DVector::zeros(space.n_dofs());
            for partial in partials {
                let (pm, pr) = partial?;
                matrix.add_scaled(&pm, 1.0);
                rhs.axpy(1.0, &pr);
            }
            (matrix, rhs)
        }
    };
    constraints.condense_system(&mut matrix, &mut rhs);
    Ok((matrix, rhs))
}

/// Assembles only a global vector; the kernel fills per-cell entries.
pub fn assemble_vector<K>(
    space: &FeSpace,
    quadrature: &Quadrature,
    kernel: K,
) -> Result<DVector, FemError>
where
    K: Fn(usize, &FeCellValues, &mut [f64]),
{
    let mut rhs = DVector::zeros(space.n_dofs());
    let n_local = space.dofs_per_cell();
    let mut local = vec![0.0; n_local];
    for cell in 0..space.mesh().n_cells() {
        let values = reinit_cell(space, cell, quadrature);
        local.iter_mut().for_each(|v| *v = 0.0);
        kernel(cell, &values, &mut local);
        for (i, gi) in space.cell_dofs(cell).iter().enumerate() {
            rhs[*gi] += local[i];
        }
    }
    Ok(rhs)
}

/// Assembles boundary contributions over all faces carrying `tag`. The
/// matrix part carries Robin-like terms, the vector part Neumann fluxes.
pub fn assemble_face_terms<K>(
    space: &FeSpace,
    face_quadrature: &Quadrature,
    tag: u32,
    kernel: K,
) -> Result<(CsrMatrix, DVector), FemError>
where
    K: Fn(usize, &FeCellValues, &mut LocalSystem),
{
    let mesh = space.mesh();
    if tag as usize >= 2 * mesh.dim() {
        return Err(FemError::UnknownTag(tag));
    }
    let pattern = build_sparsity(space);
    let mut matrix = CsrMatrix::zeros_from_pattern(pattern);
    let mut rhs = DVector::zeros(space.n_dofs());
    let n_local = space.dofs_per_cell();
    let mut local = LocalSystem::new(n_local);
    for face in mesh.boundary_faces() {
        if face.tag != tag {
            continue;
        }
        let values = reinit_face(space, face.cell, face.local_face, face_quadrature)?;
        local.reset();
        kernel(face.cell, &values, &mut local);
        local.check()?;
        let dofs = space.cell_dofs(face.cell);
        for (i, gi) in dofs.iter().enumerate() {
            for (j, gj) in dofs.iter().enumerate() {
                let v = local.matrix[i * n_local + j];
                if v != 0.0 {
                    matrix.add(*gi, *gj, v);
                }
            }
            rhs[*gi] += local.rhs[i];
        }
    }
    Ok((matrix, rhs))
}

/// Building blocks for scalar cell kernels.
pub mod kernels {
    use super::{FeCellValues, LocalSystem};
    use crate::mesh::Point;

    /// local += scale * mass matrix of the cell.
    pub fn add_mass(values: &FeCellValues, scale: f64, local: &mut LocalSystem) {
        let n = values.n_shape_functions();
        for q in 0..values.n_q_points() {
            let w = scale * values.jxw(q);
            for i in 0..n {
                let vi = values.shape_value(i, q) * w;
                for j in 0..n {
                    local.add(i, j, vi * values.shape_value(j, q));
                }
            }
        }
    }

    /// local += scale * stiffness matrix of the cell.
    pub fn add_stiffness(values: &FeCellValues, scale: f64, local: &mut LocalSystem) {
        let n = values.n_shape_functions();
        let dim = values.dim();
        for q in 0..values.n_q_points() {
            let w = scale * values.jxw(q);
            for i in 0..n {
                let gi = values.shape_grad(i, q);
                for j in 0..n {
                    let gj = values.shape_grad(j, q);
                    let dot: f64 = (0..dim).map(|a| gi[a] * gj[a]).sum();
                    local.add(i, j, dot * w);
                }
            }
        }
    }

    /// local rhs += (f, phi_i) over the cell.
    pub fn add_load<F: Fn(&Point) -> f64>(values: &FeCellValues, f: F, local: &mut LocalSystem) {
        for q in 0..values.n_q_points() {
            let fw = f(values.point(q)) * values.jxw(q);
            for i in 0..values.n_shape_functions() {
                local.add_rhs(i, fw * values.shape_value(i, q));
            }
        }
    }
}
