use super::{CsrMatrix, DVector, LinalgError, PreconditionerConfig};

/// A fixed linear operator approximating `A^{-1}`.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Identity,
    Jacobi {
        inv_diag: Vec<f64>,
    },
    /// Stores `A` itself plus the inverse diagonal; application performs the
    /// symmetric forward/backward sweeps.
    Ssor {
        matrix: CsrMatrix,
        inv_diag: Vec<f64>,
        omega: f64,
    },
    /// Combined LU factors with the sparsity of `A`: strictly lower part is
    /// unit-lower `L`, diagonal and upper part form `U`.
    Ilu0 {
        factors: CsrMatrix,
    },
}

impl Preconditioner {
    pub fn build(a: &CsrMatrix, config: &PreconditionerConfig) -> Result<Self, LinalgError> {
        match config {
            PreconditionerConfig::Identity => Ok(Preconditioner::Identity),
            PreconditionerConfig::Jacobi => {
                let inv_diag = inverted_diagonal(a)?;
                Ok(Preconditioner::Jacobi { inv_diag })
            }
            PreconditionerConfig::Ssor(omega) => {
                if !(*omega > 0.0 && *omega < 2.0) {
                    return Err(LinalgError::InvalidConfig(format!(
                        "SSOR relaxation factor must lie in (0, 2), got {omega}"
                    )));
                }
                let inv_diag = inverted_diagonal(a)?;
                Ok(Preconditioner::Ssor {
                    matrix: a.clone(),
                    inv_diag,
                    omega: *omega,
                })
            }
            PreconditionerConfig::Ilu0 => {
                let factors = ilu0_factorize(a)?;
                Ok(Preconditioner::Ilu0 { factors })
            }
        }
    }

    /// `z = M^{-1} r`
    pub fn apply(&self, r: &DVector) -> DVector {
        match self {
            Preconditioner::Identity => r.clone(),
            Preconditioner::Jacobi { inv_diag } => {
                let mut z = r.clone();
                for (zi, d) in z.as_mut_slice().iter_mut().zip(inv_diag.iter()) {
                    *zi *= d;
                }
                z
            }
            Preconditioner::Ssor {
                matrix,
                inv_diag,
                omega,
            } => ssor_apply(matrix, inv_diag, *omega, r),
            Preconditioner::Ilu0 { factors } => ilu0_apply(factors, r),
        }
    }
}

fn inverted_diagonal(a: &CsrMatrix) -> Result<Vec<f64>, LinalgError> {
    let diag = a.diagonal()?;
    diag.iter()
        .enumerate()
        .map(|(i, &d)| {
            if d == 0.0 {
                Err(LinalgError::ZeroDiagonal(i))
            } else {
                Ok(1.0 / d)
            }
        })
        .collect()
}

/// SSOR application: with `A = L + D + U`,
/// `M = (D/w + L) (D/w)^{-1} (D/w + U) / (2 - w) * w^{-1}` up to scaling;
/// the scaling keeps `M` spectrally close to `A` and preserves SPD for
/// symmetric `A` and `0 < w < 2`.
fn ssor_apply(a: &CsrMatrix, inv_diag: &[f64], omega: f64, r: &DVector) -> DVector {
    let n = a.n_rows();
    // Forward solve (D/w + L) y = r.
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut acc = r[i];
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j < i {
                acc -= v * y[j];
            }
        }
        y[i] = acc * omega * inv_diag[i];
    }
    // Scale by D/w.
    for i in 0..n {
        y[i] /= omega * inv_diag[i];
    }
    // Backward solve (D/w + U) z = y.
    let mut z = DVector::zeros(n);
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut acc = y[i];
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j > i {
                acc -= v * z[j];
            }
        }
        z[i] = acc * omega * inv_diag[i];
    }
    // The two triangular solves contribute w * (D + wU)^{-1} D (D + wL)^{-1};
    // the remaining factor of the textbook M^{-1} is (2 - w).
    z.scale(2.0 - omega);
    z
}

/// ILU(0): incomplete LU restricted to the pattern of `A` (no fill-in).
fn ilu0_factorize(a: &CsrMatrix) -> Result<CsrMatrix, LinalgError> {
    let n = a.n_rows();
    let mut lu = a.clone();
    // Verify diagonal presence up front.
    for i in 0..n {
        if lu.pattern().entry_index(i, i).is_none() {
            return Err(LinalgError::MissingDiagonal(i));
        }
    }
    for i in 0..n {
        // Split borrow: we read finished rows k < i while updating row i.
        // Work on an owned copy of row i's values to keep the borrow checker
        // out of the inner loops.
        let (cols_i, vals_i) = lu.row(i);
        let cols_i = cols_i.to_vec();
        let mut vals_i = vals_i.to_vec();
        for (ki, &k) in cols_i.iter().enumerate() {
            if k >= i {
                break;
            }
            let pivot = lu.get(k, k);
            if pivot == 0.0 {
                return Err(LinalgError::ZeroDiagonal(k));
            }
            let factor = vals_i[ki] / pivot;
            vals_i[ki] = factor;
            // Subtract factor * row k from row i, restricted to row i's pattern.
            let (cols_k, vals_k) = lu.row(k);
            for (&j, &ukj) in cols_k.iter().zip(vals_k.iter()) {
                if j > k {
                    if let Ok(pos) = cols_i.binary_search(&j) {
                        vals_i[pos] -= factor * ukj;
                    }
                }
            }
        }
        let start = lu.pattern().entry_index(i, cols_i[0]).unwrap();
        lu.values_mut()[start..start + cols_i.len()].copy_from_slice(&vals_i);
    }
    Ok(lu)
}

fn ilu0_apply(lu: &CsrMatrix, r: &DVector) -> DVector {
    let n = lu.n_rows();
    // Forward solve L y = r with unit lower triangle.
    let mut y = DVector::zeros(n);
    for i in 0..n {
        let (cols, vals) = lu.row(i);
        let mut acc = r[i];
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j < i {
                acc -= v * y[j];
            }
        }
        y[i] = acc;
    }
    // Backward solve U z = y.
    let mut z = DVector::zeros(n);
    for i in (0..n).rev() {
        let (cols, vals) = lu.row(i);
        let mut acc = y[i];
        let mut diag = 0.0;
        for (&j, &v) in cols.iter().zip(vals.iter()) {
            if j > i {
                acc -= v * z[j];
            } else if j == i {
                diag = v;
            }
        }
        z[i] = acc / diag;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd_tridiagonal(n: usize) -> CsrMatrix {
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 2.0));
            if i > 0 {
                triplets.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &triplets)
    }

    #[test]
    fn jacobi_on_diagonal_matrix() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (1, 1, 4.0)]);
        let m = Preconditioner::build(&a, &PreconditionerConfig::Jacobi).unwrap();
        let z = m.apply(&DVector::from_vec(vec![2.0, 4.0]));
        assert_eq!(z.as_slice(), &[1.0, 1.0]);
    }

    #[test]
    fn jacobi_rejects_zero_diagonal() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 0.0), (0, 1, 1.0), (1, 1, 1.0)]);
        assert!(matches!(
            Preconditioner::build(&a, &PreconditionerConfig::Jacobi),
            Err(LinalgError::ZeroDiagonal(0))
        ));
    }

    #[test]
    fn ilu0_exact_on_triangular_matrix() {
        // Lower triangular A factorizes exactly as L * I within its own
        // pattern, so ILU(0) application must invert it exactly.
        let a = CsrMatrix::from_triplets(
            3,
            3,
            &[
                (0, 0, 2.0),
                (1, 0, 1.0),
                (1, 1, 3.0),
                (2, 1, -1.0),
                (2, 2, 4.0),
            ],
        );
        let m = Preconditioner::build(&a, &PreconditionerConfig::Ilu0).unwrap();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = a.spmv(&x);
        let z = m.apply(&b);
        for i in 0..3 {
            assert!((z[i] - x[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn ilu0_exact_on_tridiagonal() {
        // Tridiagonal matrices have no fill outside the pattern, so ILU(0)
        // equals the full LU factorization.
        let a = spd_tridiagonal(8);
        let m = Preconditioner::build(&a, &PreconditionerConfig::Ilu0).unwrap();
        let x = DVector::from_vec((0..8).map(|i| (i as f64).sin() + 1.0).collect());
        let b = a.spmv(&x);
        let z = m.apply(&b);
        for i in 0..8 {
            assert!((z[i] - x[i]).abs() < 1e-12, "entry {i}: {} vs {}", z[i], x[i]);
        }
    }

    #[test]
    fn ssor_is_spd_on_spd_tridiagonal() {
        let a = spd_tridiagonal(12);
        let m = Preconditioner::build(&a, &PreconditionerConfig::Ssor(1.0)).unwrap();
        // x^T M^{-1} x > 0 for a sample of deterministic pseudo-random x.
        let mut state = 0x9e3779b97f4a7c15_u64;
        for _ in 0..10 {
            let mut x = DVector::zeros(12);
            for i in 0..12 {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                x[i] = ((state >> 33) as f64) / (u32::MAX as f64) - 0.5;
            }
            let quad = x.dot(&m.apply(&x));
            assert!(quad > 0.0, "SSOR quadratic form not positive: {quad}");
        }
    }

    #[test]
    fn ssor_rejects_omega_out_of_range() {
        let a = spd_tridiagonal(4);
        assert!(Preconditioner::build(&a, &PreconditionerConfig::Ssor(2.0)).is_err());
        assert!(Preconditioner::build(&a, &PreconditionerConfig::Ssor(0.0)).is_err());
    }
}
