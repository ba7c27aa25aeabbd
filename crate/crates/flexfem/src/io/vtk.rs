//! Legacy-VTK ASCII export of nodal fields and a structured-lattice reader
//! with point evaluation.

use super::IoError;
use crate::fem::FeSpace;
use crate::linalg::DVector;
use crate::mesh::Point;
use std::fmt::Write as _;
use std::path::Path;

/// Corner permutations from tensor order (x fastest) to the VTK vertex
/// conventions for VTK_LINE (3), VTK_QUAD (9) and VTK_HEXAHEDRON (12).
fn corner_permutation(dim: usize) -> &'static [usize] {
    match dim {
        1 => &[0, 1],
        2 => &[0, 1, 3, 2],
        _ => &[0, 1, 3, 2, 4, 5, 7, 6],
    }
}

fn vtk_cell_type(dim: usize) -> usize {
    match dim {
        1 => 3,
        2 => 9,
        _ => 12,
    }
}

fn fmt(value: f64) -> String {
    format!("{value:.12e}")
}

/// Writes every field as per-node SCALARS arrays; higher-degree spaces are
/// exported on their refined node lattice, each cell split into degree^dim
/// linear sub-cells. Multi-component fields get one array per component.
pub fn vtk_write(
    path: impl AsRef<Path>,
    space: &FeSpace,
    fields: &[(&str, &DVector)],
    time: Option<f64>,
) -> Result<(), IoError> {
    let dim = space.mesh().dim();
    let p = space.degree();
    let n_nodes = space.n_nodes();
    let components = space.n_components();
    for (name, vector) in fields {
        if vector.len() != space.n_dofs() {
            return Err(IoError::VtkParse(format!(
                "field '{name}' has {} entries, space has {} dofs",
                vector.len(),
                space.n_dofs()
            )));
        }
    }

    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    match time {
        Some(t) => {
            let _ = writeln!(out, "flexfem output, time = {}", fmt(t));
        }
        None => out.push_str("flexfem output\n"),
    }
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let _ = writeln!(out, "POINTS {n_nodes} double");
    for node in 0..n_nodes {
        let point = space.node_point(node);
        let _ = writeln!(out, "{} {} {}", fmt(point[0]), fmt(point[1]), fmt(point[2]));
    }

    let corners = 1usize << dim;
    let n_sub = p.pow(dim as u32);
    let n_cells = space.mesh().n_cells() * n_sub;
    let perm = corner_permutation(dim);
    let _ = writeln!(out, "CELLS {} {}", n_cells, n_cells * (corners + 1));
    let n1d = p + 1;
    for cell in 0..space.mesh().n_cells() {
        let nodes = space.cell_nodes(cell);
        for sub in 0..n_sub {
            // Sub-cell origin in the cell's local lattice.
            let (si, sj, sk) = (sub % p, (sub / p) % p, sub / (p * p));
            let mut tensor = Vec::with_capacity(corners);
            for corner in 0..corners {
                let (di, dj, dk) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
                let local = (si + di)
                    + if dim > 1 { (sj + dj) * n1d } else { 0 }
                    + if dim > 2 { (sk + dk) * n1d * n1d } else { 0 };
                tensor.push(nodes[local]);
            }
            let _ = write!(out, "{corners}");
            for &index in perm {
                let _ = write!(out, " {}", tensor[index]);
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "CELL_TYPES {n_cells}");
    for _ in 0..n_cells {
        let _ = writeln!(out, "{}", vtk_cell_type(dim));
    }

    let _ = writeln!(out, "POINT_DATA {n_nodes}");
    for (name, vector) in fields {
        for c in 0..components {
            let array_name = if components == 1 {
                (*name).to_string()
            } else {
                format!("{name}_{c}")
            };
            let _ = writeln!(out, "SCALARS {array_name} double 1");
            out.push_str("LOOKUP_TABLE default\n");
            for node in 0..n_nodes {
                let _ = writeln!(out, "{}", fmt(vector[node * components + c]));
            }
        }
    }
    std::fs::write(path.as_ref(), out.as_bytes())?;
    Ok(())
}

/// Point data over an axis-aligned lattice, stored x-fastest.
#[derive(Debug, Clone)]
pub struct GridData {
    dim: usize,
    axes: [Vec<f64>; 3],
    arrays: Vec<(String, Vec<f64>)>,
}

impl GridData {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axis(&self, a: usize) -> &[f64] {
        &self.axes[a]
    }

    pub fn n_points(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn array_names(&self) -> Vec<&str> {
        self.arrays.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn array(&self, name: &str) -> Result<&[f64], IoError> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| IoError::UnknownArray(name.to_string()))
    }

    fn lattice_index(&self, indices: [usize; 3]) -> usize {
        let nx = self.axes[0].len();
        let ny = self.axes[1].len();
        indices[0] + nx * (indices[1] + ny * indices[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    ClosestPoint,
    LinearInterp,
}

fn next_token<'a>(tokens: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<&'a str, IoError> {
    tokens
        .next()
        .ok_or_else(|| IoError::VtkParse(format!("unexpected end of file, wanted {what}")))
}

fn parse_count<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    what: &str,
) -> Result<usize, IoError> {
    next_token(tokens, what)?
        .parse::<usize>()
        .map_err(|_| IoError::VtkParse(format!("bad {what}")))
}

fn parse_float<'a>(
    tokens: &mut impl Iterator<Item = &'a str>,
    what: &str,
) -> Result<f64, IoError> {
    next_token(tokens, what)?
        .parse::<f64>()
        .map_err(|_| IoError::VtkParse(format!("bad {what}")))
}

/// Reads a legacy ASCII VTK unstructured grid whose points form an
/// axis-aligned lattice; cell connectivity is ignored, point data arrays are
/// re-indexed into canonical x-fastest lattice order.
pub fn grid_read(path: impl AsRef<Path>) -> Result<GridData, IoError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    // Drop the two header lines (version comment and free-form title) so
    // title words cannot be mistaken for section keywords.
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(IoError::VtkParse("missing '# vtk DataFile' header".into()));
    }
    lines.next();
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut tokens = body.split_whitespace().peekable();

    while tokens.peek().is_some_and(|t| *t != "POINTS") {
        tokens.next();
    }
    if tokens.next().is_none() {
        return Err(IoError::VtkParse("no POINTS section".into()));
    }
    let n_points = parse_count(&mut tokens, "point count")?;
    next_token(&mut tokens, "point scalar type")?;
    let mut points = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let x = parse_float(&mut tokens, "point coordinate")?;
        let y = parse_float(&mut tokens, "point coordinate")?;
        let z = parse_float(&mut tokens, "point coordinate")?;
        points.push([x, y, z]);
    }

    while tokens.peek().is_some_and(|t| *t != "POINT_DATA") {
        tokens.next();
    }
    let mut arrays = Vec::new();
    if tokens.next().is_some() {
        let n_data = parse_count(&mut tokens, "point data count")?;
        if n_data != n_points {
            return Err(IoError::VtkParse(format!(
                "POINT_DATA {n_data} does not match POINTS {n_points}"
            )));
        }
        while tokens.peek().is_some() {
            while tokens.peek().is_some_and(|t| *t != "SCALARS") {
                tokens.next();
            }
            if tokens.next().is_none() {
                break;
            }
            let name = next_token(&mut tokens, "array name")?.to_string();
            next_token(&mut tokens, "array type")?;
            if tokens.peek() == Some(&"1") {
                tokens.next();
            }
            if next_token(&mut tokens, "LOOKUP_TABLE")? != "LOOKUP_TABLE" {
                return Err(IoError::VtkParse(format!(
                    "SCALARS {name} must be followed by LOOKUP_TABLE"
                )));
            }
            next_token(&mut tokens, "lookup table name")?;
            let mut values = Vec::with_capacity(n_points);
            for _ in 0..n_points {
                values.push(parse_float(&mut tokens, "data value")?);
            }
            arrays.push((name, values));
        }
    }

    build_lattice(points, arrays)
}

fn build_lattice(
    points: Vec<[f64; 3]>,
    arrays: Vec<(String, Vec<f64>)>,
) -> Result<GridData, IoError> {
    if points.is_empty() {
        return Err(IoError::NotALattice("no points".into()));
    }
    let mut scale: f64 = 0.0;
    for p in &points {
        for c in p {
            scale = scale.max(c.abs());
        }
    }
    let tol = 1e-9 * scale.max(1.0);

    let mut axes: [Vec<f64>; 3] = Default::default();
    for (a, axis) in axes.iter_mut().enumerate() {
        let mut coords: Vec<f64> = points.iter().map(|p| p[a]).collect();
        coords.sort_by(|x, y| x.partial_cmp(y).unwrap());
        coords.dedup_by(|x, y| (*x - *y).abs() <= tol);
        *axis = coords;
    }
    let expected: usize = axes.iter().map(Vec::len).product();
    if expected != points.len() {
        return Err(IoError::NotALattice(format!(
            "{} points vs {} lattice slots",
            points.len(),
            expected
        )));
    }

    let locate = |axis: &[f64], value: f64| -> Result<usize, IoError> {
        let i = match axis.binary_search_by(|x| x.partial_cmp(&value).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(axis.len() - 1),
        };
        let candidates = [i.saturating_sub(1), i];
        for c in candidates {
            if (axis[c] - value).abs() <= tol {
                return Ok(c);
            }
        }
        Err(IoError::NotALattice(format!(
            "coordinate {value} not on any axis line"
        )))
    };

    // Permutation from file order to canonical lattice order, checking that
    // every slot is hit exactly once.
    let mut permutation = vec![usize::MAX; points.len()];
    let nx = axes[0].len();
    let ny = axes[1].len();
    for (j, p) in points.iter().enumerate() {
        let ix = locate(&axes[0], p[0])?;
        let iy = locate(&axes[1], p[1])?;
        let iz = locate(&axes[2], p[2])?;
        let slot = ix + nx * (iy + ny * iz);
        if permutation[slot] != usize::MAX {
            return Err(IoError::NotALattice(format!(
                "two points share lattice slot {slot}"
            )));
        }
        permutation[slot] = j;
    }

    let dim = axes.iter().filter(|a| a.len() > 1).count().max(1);
    let reordered = arrays
        .into_iter()
        .map(|(name, values)| {
            let sorted: Vec<f64> = permutation.iter().map(|&j| values[j]).collect();
            (name, sorted)
        })
        .collect();
    Ok(GridData {
        dim,
        axes,
        arrays: reordered,
    })
}

pub fn grid_eval(
    data: &GridData,
    array: &str,
    point: &Point,
    method: EvalMethod,
) -> Result<f64, IoError> {
    let values = data.array(array)?;
    match method {
        EvalMethod::ClosestPoint => {
            let mut indices = [0usize; 3];
            for (a, slot) in indices.iter_mut().enumerate() {
                *slot = nearest_index(&data.axes[a], point[a]);
            }
            Ok(values[data.lattice_index(indices)])
        }
        EvalMethod::LinearInterp => {
            // Per-axis cell index and clamped local coordinate.
            let mut cell = [0usize; 3];
            let mut local = [0.0f64; 3];
            for a in 0..3 {
                let axis = &data.axes[a];
                if axis.len() == 1 {
                    continue;
                }
                let i = match axis.binary_search_by(|x| x.partial_cmp(&point[a]).unwrap()) {
                    Ok(i) => i.min(axis.len() - 2),
                    Err(0) => 0,
                    Err(i) => (i - 1).min(axis.len() - 2),
                };
                cell[a] = i;
                let width = axis[i + 1] - axis[i];
                local[a] = ((point[a] - axis[i]) / width).clamp(0.0, 1.0);
            }
            let mut out = 0.0;
            for corner in 0..8 {
                let offsets = [corner & 1, (corner >> 1) & 1, (corner >> 2) & 1];
                let mut weight = 1.0;
                let mut indices = [0usize; 3];
                for a in 0..3 {
                    if data.axes[a].len() == 1 {
                        if offsets[a] == 1 {
                            weight = 0.0;
                        }
                        continue;
                    }
                    indices[a] = cell[a] + offsets[a];
                    weight *= if offsets[a] == 1 {
                        local[a]
                    } else {
                        1.0 - local[a]
                    };
                }
                if weight != 0.0 {
                    out += weight * values[data.lattice_index(indices)];
                }
            }
            Ok(out)
        }
    }
}

fn nearest_index(axis: &[f64], value: f64) -> usize {
    let i = match axis.binary_search_by(|x| x.partial_cmp(&value).unwrap()) {
        Ok(i) => return i,
        Err(i) => i,
    };
    if i == 0 {
        return 0;
    }
    if i >= axis.len() {
        return axis.len() - 1;
    }
    if (value - axis[i - 1]).abs() <= (axis[i] - value).abs() {
        i - 1
    } else {
        i
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_space, interpolate};
    use crate::mesh::generate_box;
    use std::sync::Arc;

    fn write_field(
        dir: &tempfile::TempDir,
        dim: usize,
        subdivisions: &[usize],
        degree: usize,
        f: impl Fn(&Point) -> f64,
    ) -> (std::path::PathBuf, FeSpace, DVector) {
        let lower = vec![0.0; dim];
        let upper = vec![1.0; dim];
        let mesh = Arc::new(generate_box(dim, &lower, &upper, subdivisions).unwrap());
        let space = build_space(mesh, degree, 1).unwrap();
        let field = interpolate(&space, &f);
        let path = dir.path().join("field.vtk");
        vtk_write(&path, &space, &[("u", &field)], Some(0.25)).unwrap();
        (path, space, field)
    }

    #[test]
    fn a_single_cube_cell_writes_eight_points_of_type_12() {
        let dir = tempfile::tempdir().unwrap();
        let (path, _, _) = write_field(&dir, 3, &[1, 1, 1], 1, |_| 1.0);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains("POINTS 8 double"));
        assert!(text.contains("CELLS 1 9"));
        assert!(text.contains("8 0 1 3 2 4 5 7 6"));
        assert!(text.contains("CELL_TYPES 1\n12"));
        let constants = text
            .lines()
            .filter(|l| *l == "1.000000000000e0")
            .count();
        assert_eq!(constants, 8);
    }

    #[test]
    fn quadratic_spaces_export_the_refined_lattice() {
        let dir = tempfile::tempdir().unwrap();
        let (path, _, _) = write_field(&dir, 2, &[2, 2], 2, |p| p[0]);
        let text = std::fs::read_to_string(&path).unwrap();
        // 2x2 cells of degree 2: 5x5 nodes, 4 sub-quads per cell.
        assert!(text.contains("POINTS 25 double"));
        assert!(text.contains("CELLS 16 80"));
        assert!(text.contains("CELL_TYPES 16\n9"));
    }

    #[test]
    fn one_dimensional_meshes_use_line_cells() {
        let dir = tempfile::tempdir().unwrap();
        let (path, _, _) = write_field(&dir, 1, &[4], 1, |p| p[0]);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("CELL_TYPES 4\n3"));
    }

    #[test]
    fn written_nodal_values_survive_the_reader() {
        let dir = tempfile::tempdir().unwrap();
        let (path, space, field) =
            write_field(&dir, 2, &[4, 3], 1, |p| 1.0 + 2.0 * p[0] + 3.0 * p[1]);
        let data = grid_read(&path).unwrap();
        assert_eq!(data.dim(), 2);
        assert_eq!(data.axis(0).len(), 5);
        assert_eq!(data.axis(1).len(), 4);
        for node in 0..space.n_nodes() {
            let p = space.node_point(node);
            let value = grid_eval(&data, "u", &p, EvalMethod::ClosestPoint).unwrap();
            assert!((value - field[node]).abs() < 1e-12);
        }
    }

    #[test]
    fn multilinear_interpolation_reproduces_linear_fields() {
        let dir = tempfile::tempdir().unwrap();
        let exact = |p: &Point| 1.0 + 2.0 * p[0] + 3.0 * p[1];
        let (path, _, _) = write_field(&dir, 2, &[4, 3], 1, exact);
        let data = grid_read(&path).unwrap();
        for (x, y) in [(0.13, 0.77), (0.5, 0.5), (0.99, 0.01), (0.0, 1.0)] {
            let p = Point::new(&[x, y]);
            let value = grid_eval(&data, "u", &p, EvalMethod::LinearInterp).unwrap();
            assert!((value - exact(&p)).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluation_outside_the_domain_clamps_to_the_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let exact = |p: &Point| 1.0 + 2.0 * p[0] + 3.0 * p[1];
        let (path, _, _) = write_field(&dir, 2, &[4, 4], 1, exact);
        let data = grid_read(&path).unwrap();
        let outside = Point::new(&[-0.5, 0.25]);
        let clamped = Point::new(&[0.0, 0.25]);
        for method in [EvalMethod::ClosestPoint, EvalMethod::LinearInterp] {
            let value = grid_eval(&data, "u", &outside, method).unwrap();
            let reference = grid_eval(&data, "u", &clamped, method).unwrap();
            assert!((value - reference).abs() < 1e-12);
        }
        assert!(matches!(
            grid_eval(&data, "missing", &outside, EvalMethod::ClosestPoint),
            Err(IoError::UnknownArray(_))
        ));
    }

    #[test]
    fn non_lattice_points_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.vtk");
        let text = "# vtk DataFile Version 3.0\nbad\nASCII\nDATASET UNSTRUCTURED_GRID\n\
                    POINTS 3 double\n0 0 0\n1 0 0\n0.5 0.7 0\n";
        std::fs::write(&path, text).unwrap();
        assert!(matches!(grid_read(&path), Err(IoError::NotALattice(_))));
    }
}
