use super::{DVector, LinalgError};

/// Sparsity structure of a CSR matrix: row offsets plus column indices,
/// strictly increasing within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityPattern {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from per-row column sets. Columns are sorted and
    /// deduplicated.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<usize>>) -> Self {
        let n_rows = rows.len();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            debug_assert!(cols.iter().all(|&c| c < n_cols));
            col_indices.extend_from_slice(&cols);
            row_offsets.push(col_indices.len());
        }
        Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_cols(&self, row: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[row]..self.row_offsets[row + 1]]
    }

    /// Index into the values array for entry (row, col), if present.
    pub fn entry_index(&self, row: usize, col: usize) -> Option<usize> {
        let start = self.row_offsets[row];
        let cols = self.row_cols(row);
        cols.binary_search(&col).ok().map(|k| start + k)
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pattern: SparsityPattern,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros_from_pattern(pattern: SparsityPattern) -> Self {
        let nnz = pattern.nnz();
        Self {
            pattern,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from (row, col, value) triplets; duplicate entries are
    /// summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n_rows];
        for &(r, c, _) in triplets {
            rows[r].push(c);
        }
        let pattern = SparsityPattern::from_rows(n_cols, rows);
        let mut m = CsrMatrix::zeros_from_pattern(pattern);
        for &(r, c, v) in triplets {
            m.add(r, c, v);
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &triplets)
    }

    /// Dense row-major input, keeping every entry (including zeros) in the
    /// pattern. Intended for small systems and tests.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let pattern =
            SparsityPattern::from_rows(n_cols, vec![(0..n_cols).collect(); n_rows]);
        let mut m = CsrMatrix::zeros_from_pattern(pattern);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.pattern.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.pattern.n_cols()
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set_zero(&mut self) {
        self.values.fill(0.0);
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pattern
            .entry_index(row, col)
            .map_or(0.0, |k| self.values[k])
    }

    /// Adds into an existing entry; panics if (row, col) is outside the
    /// pattern.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .pattern
            .entry_index(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[k] += value;
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let k = self
            .pattern
            .entry_index(row, col)
            .unwrap_or_else(|| panic!("entry ({row}, {col}) not in sparsity pattern"));
        self.values[k] = value;
    }

    /// Row view as parallel (columns, values) slices.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let start = self.pattern.row_offsets[row];
        let end = self.pattern.row_offsets[row + 1];
        (
            &self.pattern.col_indices[start..end],
            &self.values[start..end],
        )
    }

    /// Row view with mutable values.
    pub fn row_mut(&mut self, row: usize) -> (&[usize], &mut [f64]) {
        let start = self.pattern.row_offsets[row];
        let end = self.pattern.row_offsets[row + 1];
        (
            &self.pattern.col_indices[start..end],
            &mut self.values[start..end],
        )
    }

    /// self += factor * other; both matrices must share the same pattern.
    pub fn add_scaled(&mut self, other: &CsrMatrix, factor: f64) {
        assert_eq!(
            self.pattern, other.pattern,
            "add_scaled requires identical sparsity patterns"
        );
        for (v, o) in self.values.iter_mut().zip(other.values.iter()) {
            *v += factor * o;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn diagonal(&self) -> Result<Vec<f64>, LinalgError> {
        (0..self.n_rows())
            .map(|i| {
                self.pattern
                    .entry_index(i, i)
                    .map(|k| self.values[k])
                    .ok_or(LinalgError::MissingDiagonal(i))
            })
            .collect()
    }

    /// `y = A x`
    pub fn spmv(&self, x: &DVector) -> DVector {
        assert_eq!(
            self.n_cols(),
            x.len(),
            "spmv dimension mismatch: {} columns vs vector length {}",
            self.n_cols(),
            x.len()
        );
        let mut y = DVector::zeros(self.n_rows());
        for i in 0..self.n_rows() {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &a) in cols.iter().zip(vals.iter()) {
                acc += a * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// `b - A x`
    pub fn residual(&self, b: &DVector, x: &DVector) -> DVector {
        let mut r = self.spmv(x);
        for i in 0..r.len() {
            r[i] = b[i] - r[i];
        }
        r
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        for i in 0..self.n_rows() {
            for &j in self.pattern.row_cols(i) {
                if self.pattern.entry_index(j, i).is_none() {
                    return false;
                }
            }
        }
        true
    }
}
