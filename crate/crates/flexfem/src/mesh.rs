//! Structured axis-aligned box meshes with tagged boundary faces.
//!
//! Cells and vertices are numbered lexicographically with the x index
//! running fastest. Local faces pair up per axis: face `2a` is the low side
//! along axis `a`, face `2a + 1` the high side, and boundary tags reuse the
//! same numbering.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("dimension must be 1, 2, or 3, got {0}")]
    DimensionOutOfRange(usize),
    #[error("coordinate arrays must have length {expected}, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("degenerate box: upper <= lower along axis {0}")]
    DegenerateBox(usize),
    #[error("subdivisions must be at least 1 along axis {0}")]
    ZeroSubdivisions(usize),
}

/// A point in 1, 2, or 3 dimensions; unused trailing coordinates stay zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 3],
    dim: usize,
}

impl Point {
    pub fn new(coords: &[f64]) -> Self {
        assert!((1..=3).contains(&coords.len()), "point dimension {}", coords.len());
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Self {
            coords: c,
            dim: coords.len(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.coords
            .iter()
            .zip(other.coords.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, axis: usize) -> &f64 {
        &self.coords[axis]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub local_face: usize,
    pub tag: u32,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    subdivisions: Vec<usize>,
    vertices: Vec<Point>,
    /// Flat cell-to-vertex connectivity, stride `2^dim`, tensor-product
    /// ordering within each cell (low corner first, x offset fastest).
    cells: Vec<usize>,
    boundary_faces: Vec<BoundaryFace>,
}

/// Decodes a local face index into (axis, side); side 0 is the low side.
pub fn face_axis_side(local_face: usize) -> (usize, usize) {
    (local_face / 2, local_face % 2)
}

pub fn generate_box(
    dim: usize,
    lower: &[f64],
    upper: &[f64],
    subdivisions: &[usize],
) -> Result<Mesh, MeshError> {
    if !(1..=3).contains(&dim) {
        return Err(MeshError::DimensionOutOfRange(dim));
    }
    for len in [lower.len(), upper.len(), subdivisions.len()] {
        if len != dim {
            return Err(MeshError::WrongLength {
                expected: dim,
                got: len,
            });
        }
    }
    for axis in 0..dim {
        if !(upper[axis] > lower[axis]) {
            return Err(MeshError::DegenerateBox(axis));
        }
        if subdivisions[axis] == 0 {
            return Err(MeshError::ZeroSubdivisions(axis));
        }
    }

    // Per-axis vertex counts; absent axes behave as a single layer.
    let mut nv = [1usize; 3];
    let mut nc = [1usize; 3];
    for axis in 0..dim {
        nc[axis] = subdivisions[axis];
        nv[axis] = subdivisions[axis] + 1;
    }
    let spacing: Vec<f64> = (0..dim)
        .map(|a| (upper[a] - lower[a]) / subdivisions[a] as f64)
        .collect();

    let mut vertices = Vec::with_capacity(nv[0] * nv[1] * nv[2]);
    for k in 0..nv[2] {
        for j in 0..nv[1] {
            for i in 0..nv[0] {
                let idx = [i, j, k];
                let coords: Vec<f64> = (0..dim)
                    .map(|a| {
                        if idx[a] == nc[a] {
                            upper[a]
                        } else {
                            lower[a] + idx[a] as f64 * spacing[a]
                        }
                    })
                    .collect();
                vertices.push(Point::new(&coords));
            }
        }
    }

    let vertex_id = |i: usize, j: usize, k: usize| i + nv[0] * (j + nv[1] * k);
    let corners = 1usize << dim;
    let n_cells = nc[0] * nc[1] * nc[2];
    let mut cells = Vec::with_capacity(n_cells * corners);
    let mut boundary_faces = Vec::new();
    let mut cell = 0;
    for k in 0..nc[2] {
        for j in 0..nc[1] {
            for i in 0..nc[0] {
                for corner in 0..corners {
                    let di = corner & 1;
                    let dj = (corner >> 1) & 1;
                    let dk = (corner >> 2) & 1;
                    cells.push(vertex_id(i + di, j + dj, k + dk));
                }
                let idx = [i, j, k];
                for axis in 0..dim {
                    if idx[axis] == 0 {
                        boundary_faces.push(BoundaryFace {
                            cell,
                            local_face: 2 * axis,
                            tag: 2 * axis as u32,
                        });
                    }
                    if idx[axis] == nc[axis] - 1 {
                        boundary_faces.push(BoundaryFace {
                            cell,
                            local_face: 2 * axis + 1,
                            tag: 2 * axis as u32 + 1,
                        });
                    }
                }
                cell += 1;
            }
        }
    }

    Ok(Mesh {
        dim,
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        subdivisions: subdivisions.to_vec(),
        vertices,
        cells,
        boundary_faces,
    })
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn subdivisions(&self) -> &[usize] {
        &self.subdivisions
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.subdivisions[axis] as f64
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len() / self.n_vertices_per_cell()
    }

    pub fn n_vertices_per_cell(&self) -> usize {
        1 << self.dim
    }

    pub fn n_faces_per_cell(&self) -> usize {
        2 * self.dim
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn cell_vertices(&self, c: usize) -> &[usize] {
        let s = self.n_vertices_per_cell();
        &self.cells[c * s..(c + 1) * s]
    }

    /// Per-axis cell coordinates (i, j, k); absent axes report 0.
    pub fn cell_multi_index(&self, c: usize) -> [usize; 3] {
        let mut nc = [1usize; 3];
        for a in 0..self.dim {
            nc[a] = self.subdivisions[a];
        }
        [c % nc[0], (c / nc[0]) % nc[1], c / (nc[0] * nc[1])]
    }

    /// Low corner of a cell.
    pub fn cell_origin(&self, c: usize) -> Point {
        self.vertex(self.cell_vertices(c)[0])
    }

    pub fn cell_diameter(&self, _c: usize) -> f64 {
        (0..self.dim)
            .map(|a| self.spacing(a) * self.spacing(a))
            .sum::<f64>()
            .sqrt()
    }

    pub fn cell_volume(&self, _c: usize) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Measure of a cell face orthogonal to `axis` (1 in 1D).
    pub fn face_area(&self, axis: usize) -> f64 {
        (0..self.dim)
            .filter(|a| *a != axis)
            .map(|a| self.spacing(a))
            .product()
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct MeshInfo {
    pub volume: f64,
    pub surface_area_by_tag: BTreeMap<u32, f64>,
    pub cell_diameter_stats: DiameterStats,
}

pub fn mesh_info(mesh: &Mesh) -> MeshInfo {
    let volume = (0..mesh.n_cells()).map(|c| mesh.cell_volume(c)).sum();
    let mut surface_area_by_tag = BTreeMap::new();
    for face in mesh.boundary_faces() {
        let (axis, _) = face_axis_side(face.local_face);
        *surface_area_by_tag.entry(face.tag).or_insert(0.0) += mesh.face_area(axis);
    }
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for c in 0..mesh.n_cells() {
        let d = mesh.cell_diameter(c);
        min = min.min(d);
        max = max.max(d);
        sum += d;
    }
    MeshInfo {
        volume,
        surface_area_by_tag,
        cell_diameter_stats: DiameterStats {
            min,
            max,
            mean: sum / mesh.n_cells() as f64,
        },
    }
}

/// Global minimizer of the Euclidean distance; ties break to the lowest
/// vertex index. The point may lie outside the mesh.
pub fn find_closest_vertex(mesh: &Mesh, point: &Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for v in 0..mesh.n_vertices() {
        let d = mesh.vertex(v).distance(point);
        if d < best.1 {
            best = (v, d);
        }
    }
    best
}
