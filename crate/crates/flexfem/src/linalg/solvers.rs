use super::{
    CsrMatrix, DVector, LinalgError, Preconditioner, PreconditionerConfig, SolveReport,
    SolverConfig, SolverType,
};

/// Solves `A x = b` with the configured Krylov method and preconditioner.
///
/// The stopping criterion is `||b - Ax|| <= max(tol * ||b||, abs_tol)`. On
/// return the report carries the true residual norm recomputed from the final
/// iterate, so `report.final_residual` always agrees with `||b - Ax||`.
pub fn solve(
    a: &CsrMatrix,
    b: &DVector,
    x0: Option<&DVector>,
    config: &SolverConfig,
    precond: &PreconditionerConfig,
) -> Result<(DVector, SolveReport), LinalgError> {
    config.validate()?;
    if a.n_rows() != a.n_cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{}, expected square",
            a.n_rows(),
            a.n_cols()
        )));
    }
    if a.n_rows() != b.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix has {} rows but right-hand side has length {}",
            a.n_rows(),
            b.len()
        )));
    }
    let x0 = match x0 {
        Some(x) => {
            if x.len() != b.len() {
                return Err(LinalgError::DimensionMismatch(format!(
                    "initial guess has length {} but system size is {}",
                    x.len(),
                    b.len()
                )));
            }
            x.clone()
        }
        None => DVector::zeros(b.len()),
    };
    let m = Preconditioner::build(a, precond)?;
    let threshold = stop_threshold(b, config);
    let (mut x, mut report) = match config.solver_type {
        SolverType::Cg => cg(a, b, x0, &m, config, threshold),
        SolverType::Gmres => gmres(a, b, x0, &m, config, threshold),
        SolverType::BiCgStab => bicgstab(a, b, x0, &m, config, threshold),
    };
    // Recompute the true residual so the report never relies on a recurrence.
    let true_res = a.residual(b, &x).norm();
    report.final_residual = true_res;
    report.converged = true_res <= threshold;
    if let Some(h) = report.history.as_mut() {
        h.push(true_res);
    }
    if !x.is_finite() {
        report.converged = false;
        report.reason = Some("non-finite entries in solution".into());
        x.fill(0.0);
    }
    Ok((x, report))
}

fn stop_threshold(b: &DVector, config: &SolverConfig) -> f64 {
    (config.tolerance * b.norm()).max(config.absolute_tolerance)
}

fn new_history(config: &SolverConfig) -> Option<Vec<f64>> {
    config.log_history.then(Vec::new)
}

fn cg(
    a: &CsrMatrix,
    b: &DVector,
    mut x: DVector,
    m: &Preconditioner,
    config: &SolverConfig,
    threshold: f64,
) -> (DVector, SolveReport) {
    let mut history = new_history(config);
    let mut r = a.residual(b, &x);
    let mut z = m.apply(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut iterations = 0;
    let mut reason = None;
    let mut res_norm = r.norm();
    if let Some(h) = history.as_mut() {
        h.push(res_norm);
    }
    while res_norm > threshold && iterations < config.max_iterations {
        let ap = a.spmv(&p);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            reason = Some(format!(
                "CG breakdown: non-positive curvature p'Ap = {pap:e}"
            ));
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        res_norm = r.norm();
        iterations += 1;
        if let Some(h) = history.as_mut() {
            h.push(res_norm);
        }
        if res_norm <= threshold {
            break;
        }
        z = m.apply(&r);
        let rz_new = r.dot(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.scale_add(beta, &z);
    }
    let converged = res_norm <= threshold;
    (
        x,
        SolveReport {
            converged,
            iterations,
            final_residual: res_norm,
            history,
            reason: reason.or((!converged).then(|| "max iterations reached".into())),
        },
    )
}

/// Restarted GMRES with left preconditioning, modified Gram-Schmidt
/// orthogonalization and Givens rotations on the Hessenberg matrix.
fn gmres(
    a: &CsrMatrix,
    b: &DVector,
    mut x: DVector,
    m: &Preconditioner,
    config: &SolverConfig,
    threshold: f64,
) -> (DVector, SolveReport) {
    let restart = config.gmres_restart.max(1);
    let mut history = new_history(config);
    let mut iterations = 0;
    let mut reason = None;

    // The iteration controls the preconditioned residual; convergence is
    // re-checked on the true residual at each restart and at the end.
    'outer: loop {
        let r_true = a.residual(b, &x);
        let res_norm = r_true.norm();
        if let Some(h) = history.as_mut() {
            h.push(res_norm);
        }
        if res_norm <= threshold {
            break;
        }
        if iterations >= config.max_iterations {
            reason = Some("max iterations reached".into());
            break;
        }
        let r0 = m.apply(&r_true);
        let beta = r0.norm();
        if beta == 0.0 {
            break;
        }
        let mut basis: Vec<DVector> = Vec::with_capacity(restart + 1);
        {
            let mut v0 = r0;
            v0.scale(1.0 / beta);
            basis.push(v0);
        }
        // Column-major Hessenberg, sized (restart + 1) x restart.
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs = Vec::with_capacity(restart);
        let mut sn = Vec::with_capacity(restart);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..restart {
            if iterations >= config.max_iterations {
                break;
            }
            iterations += 1;
            let mut w = m.apply(&a.spmv(&basis[k]));
            let mut h_col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hik = w.dot(v);
                h_col[i] = hik;
                w.axpy(-hik, v);
            }
            let h_next = w.norm();
            h_col[k + 1] = h_next;
            // Apply accumulated rotations to the new column.
            for i in 0..k {
                let (c, s): (f64, f64) = (cs[i], sn[i]);
                let t = c * h_col[i] + s * h_col[i + 1];
                h_col[i + 1] = -s * h_col[i] + c * h_col[i + 1];
                h_col[i] = t;
            }
            // New rotation annihilating h_col[k + 1].
            let denom = (h_col[k] * h_col[k] + h_col[k + 1] * h_col[k + 1]).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (h_col[k] / denom, h_col[k + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            h_col[k] = c * h_col[k] + s * h_col[k + 1];
            h_col[k + 1] = 0.0;
            let g_next = -s * g[k];
            g[k] = c * g[k];
            g[k + 1] = g_next;
            hess.push(h_col);
            k_used = k + 1;
            let est = g[k + 1].abs();
            if let Some(h) = history.as_mut() {
                h.push(est);
            }
            if est <= threshold || h_next == 0.0 {
                break;
            }
            let mut v = w;
            v.scale(1.0 / h_next);
            basis.push(v);
        }

        if k_used == 0 {
            reason = Some("GMRES stalled: empty Krylov subspace".into());
            break 'outer;
        }
        // Back-substitute the triangular system R y = g.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for (j, y_j) in y.iter().enumerate().take(k_used).skip(i + 1) {
                acc -= hess[j][i] * y_j;
            }
            y[i] = acc / hess[i][i];
        }
        for (j, y_j) in y.iter().enumerate() {
            x.axpy(*y_j, &basis[j]);
        }
    }

    let res_norm = a.residual(b, &x).norm();
    let converged = res_norm <= threshold;
    (
        x,
        SolveReport {
            converged,
            iterations,
            final_residual: res_norm,
            history,
            reason: reason.filter(|_| !converged),
        },
    )
}

/// Serious-breakdown guard for BiCGStab: the inner products rho = r_hat'r
/// and r_hat'v scale with the product of the vector norms, so the test must
/// compare against that product. An absolute floor would fire spuriously
/// once the residual is small, exactly when the solve is about to succeed.
const BICGSTAB_COSINE_BREAKDOWN: f64 = 1e-14;
/// Underflow backstop for quantities that are scale-free by construction.
const BICGSTAB_BREAKDOWN: f64 = 1e-30;

fn bicgstab(
    a: &CsrMatrix,
    b: &DVector,
    mut x: DVector,
    m: &Preconditioner,
    config: &SolverConfig,
    threshold: f64,
) -> (DVector, SolveReport) {
    let mut history = new_history(config);
    let mut r = a.residual(b, &x);
    let mut r_hat = r.clone();
    let mut r_hat_norm = r_hat.norm();
    let mut res_norm = r.norm();
    if let Some(h) = history.as_mut() {
        h.push(res_norm);
    }
    let mut rho = 1.0;
    let mut alpha = 1.0;
    let mut omega = 1.0;
    let n = b.len();
    let mut v = DVector::zeros(n);
    let mut p = DVector::zeros(n);
    let mut iterations = 0;
    let mut reason = None;
    // Residual norm at the last restart; a further restart is allowed only
    // after strict progress, otherwise the stall is final.
    let mut restart_floor = f64::INFINITY;

    // Realigning the shadow residual with the current residual recovers from
    // a serious breakdown (r_hat drifting orthogonal to the Krylov space);
    // resetting the scalars and directions reproduces a fresh start from the
    // current iterate.
    macro_rules! restart_or_break {
        ($why:expr) => {
            if res_norm < restart_floor {
                restart_floor = res_norm;
                r_hat = r.clone();
                r_hat_norm = res_norm;
                rho = 1.0;
                alpha = 1.0;
                omega = 1.0;
                v.fill(0.0);
                p.fill(0.0);
                continue;
            }
            reason = Some($why);
            break;
        };
    }

    while res_norm > threshold && iterations < config.max_iterations {
        let rho_new = r_hat.dot(&r);
        if rho_new.abs() < BICGSTAB_COSINE_BREAKDOWN * r_hat_norm * res_norm {
            restart_or_break!(format!("BiCGStab breakdown: rho = {rho_new:e}"));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        // p = r + beta * (p - omega * v)
        p.axpy(-omega, &v);
        p.scale_add(beta, &r);
        let p_hat = m.apply(&p);
        v = a.spmv(&p_hat);
        let denom = r_hat.dot(&v);
        if denom.abs() < BICGSTAB_COSINE_BREAKDOWN * r_hat_norm * v.norm() {
            restart_or_break!("BiCGStab breakdown: r_hat'v vanished".into());
        }
        alpha = rho / denom;
        let mut s = r.clone();
        s.axpy(-alpha, &v);
        if s.norm() <= threshold {
            x.axpy(alpha, &p_hat);
            r = s;
            res_norm = r.norm();
            iterations += 1;
            if let Some(h) = history.as_mut() {
                h.push(res_norm);
            }
            break;
        }
        let s_hat = m.apply(&s);
        let t = a.spmv(&s_hat);
        let tt = t.dot(&t);
        if tt == 0.0 {
            reason = Some("BiCGStab breakdown: t vanished".into());
            break;
        }
        omega = t.dot(&s) / tt;
        if omega.abs() < BICGSTAB_BREAKDOWN {
            restart_or_break!("BiCGStab breakdown: omega vanished".into());
        }
        x.axpy(alpha, &p_hat);
        x.axpy(omega, &s_hat);
        r = s;
        r.axpy(-omega, &t);
        res_norm = r.norm();
        iterations += 1;
        if let Some(h) = history.as_mut() {
            h.push(res_norm);
        }
    }
    let converged = res_norm <= threshold;
    (
        x,
        SolveReport {
            converged,
            iterations,
            final_residual: res_norm,
            history,
            reason: reason.or((!converged).then(|| "max iterations reached".into())),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> CsrMatrix {
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

    fn config(solver_type: SolverType) -> SolverConfig {
        SolverConfig {
            solver_type,
            tolerance: 1e-10,
            log_history: true,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn identity_converges_in_at_most_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        for ty in [SolverType::Cg, SolverType::Gmres, SolverType::BiCgStab] {
            let (x, report) =
                solve(&a, &b, None, &config(ty), &PreconditionerConfig::Identity).unwrap();
            assert!(report.converged, "{ty:?} failed");
            assert!(report.iterations <= 1, "{ty:?} took {}", report.iterations);
            for i in 0..5 {
                assert!((x[i] - b[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cg_jacobi_poisson_within_finite_termination_bound() {
        let n = 32;
        let a = poisson_1d(n);
        let b = DVector::constant(n, 1.0);
        let (x, report) = solve(
            &a,
            &b,
            None,
            &config(SolverType::Cg),
            &PreconditionerConfig::Jacobi,
        )
        .unwrap();
        assert!(report.converged);
        assert!(report.iterations <= n, "CG exceeded n iterations");
        let res = a.residual(&b, &x).norm();
        assert!(res <= 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn final_residual_matches_history_tail() {
        let a = poisson_1d(16);
        let b = DVector::constant(16, 1.0);
        for ty in [SolverType::Cg, SolverType::Gmres, SolverType::BiCgStab] {
            let (_, report) =
                solve(&a, &b, None, &config(ty), &PreconditionerConfig::Identity).unwrap();
            let history = report.history.as_ref().unwrap();
            assert_eq!(*history.last().unwrap(), report.final_residual);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = poisson_1d(4);
        let b = DVector::zeros(5);
        assert!(matches!(
            solve(
                &a,
                &b,
                None,
                &SolverConfig::default(),
                &PreconditionerConfig::Identity
            ),
            Err(LinalgError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn initial_guess_is_used() {
        let a = poisson_1d(8);
        let x_exact = DVector::from_vec((0..8).map(|i| i as f64).collect());
        let b = a.spmv(&x_exact);
        let (_, report) = solve(
            &a,
            &b,
            Some(&x_exact),
            &config(SolverType::Cg),
            &PreconditionerConfig::Identity,
        )
        .unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn gmres_residuals_non_increasing_within_restart() {
        // Nonsymmetric advection-diffusion-like matrix.
        let n = 24;
        let mut triplets = Vec::new();
        for i in 0..n {
            triplets.push((i, i, 3.0));
            if i > 0 {
                triplets.push((i, i - 1, -1.5));
            }
            if i + 1 < n {
                triplets.push((i, i + 1, -0.5));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &triplets);
        let b = DVector::constant(n, 1.0);
        let mut cfg = config(SolverType::Gmres);
        cfg.gmres_restart = 100;
        let (_, report) = solve(&a, &b, None, &cfg, &PreconditionerConfig::Identity).unwrap();
        assert!(report.converged);
        let h = report.history.unwrap();
        // Below the stopping threshold the entries are rounding noise (the
        // appended true residual in particular), so only compare above it.
        let threshold = 1e-10 * b.norm();
        for w in h.windows(2) {
            if w[0] <= threshold {
                break;
            }
            assert!(
                w[1] <= w[0] * (1.0 + 1e-12),
                "GMRES residual increased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}
