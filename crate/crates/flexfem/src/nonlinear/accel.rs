//! Relaxation and acceleration for fixed-point loops: static damping,
//! Aitken's dynamic relaxation, and Anderson mixing.

use super::NonlinearError;
use crate::linalg::DVector;
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub enum AccelerationScheme {
    /// Plain iteration, x_{k+1} = g(x_k).
    None,
    /// x_{k+1} = x_k + omega (g(x_k) - x_k).
    StaticRelaxation(f64),
    /// Dynamic relaxation driven by consecutive residuals, starting at 1.
    Aitken,
    /// Least-squares mixing over the last `depth` residual differences,
    /// relaxed by omega0 where no history exists yet.
    Anderson { depth: usize, omega0: f64 },
}

/// Per-loop state; call [`Accelerator::reset`] before reusing it for a new
/// fixed-point solve.
#[derive(Debug, Clone)]
pub struct Accelerator {
    scheme: AccelerationScheme,
    aitken_omega: f64,
    prev_residual: Option<DVector>,
    // Oldest first, at most `depth` entries each.
    x_history: VecDeque<DVector>,
    r_history: VecDeque<DVector>,
}

impl Accelerator {
    pub fn new(scheme: AccelerationScheme) -> Result<Self, NonlinearError> {
        match &scheme {
            AccelerationScheme::StaticRelaxation(omega) => {
                if !(*omega > 0.0 && *omega <= 1.0) {
                    return Err(NonlinearError::InvalidConfig(format!(
                        "relaxation factor must lie in (0, 1], got {omega}"
                    )));
                }
            }
            AccelerationScheme::Anderson { depth, omega0 } => {
                if *depth < 1 {
                    return Err(NonlinearError::InvalidConfig(
                        "Anderson depth must be at least 1".to_string(),
                    ));
                }
                if !(*omega0 > 0.0 && *omega0 <= 1.0) {
                    return Err(NonlinearError::InvalidConfig(format!(
                        "Anderson relaxation must lie in (0, 1], got {omega0}"
                    )));
                }
            }
            _ => {}
        }
        Ok(Self {
            scheme,
            aitken_omega: 1.0,
            prev_residual: None,
            x_history: VecDeque::new(),
            r_history: VecDeque::new(),
        })
    }

    pub fn scheme(&self) -> &AccelerationScheme {
        &self.scheme
    }

    pub fn reset(&mut self) {
        self.aitken_omega = 1.0;
        self.prev_residual = None;
        self.x_history.clear();
        self.r_history.clear();
    }

    /// Produces the next iterate from the current one and g(x_k).
    pub fn next_iterate(&mut self, x: &DVector, g: &DVector) -> DVector {
        assert_eq!(x.len(), g.len());
        let mut residual = g.clone();
        residual.axpy(-1.0, x);
        match self.scheme {
            AccelerationScheme::None => g.clone(),
            AccelerationScheme::StaticRelaxation(omega) => relaxed(x, &residual, omega),
            AccelerationScheme::Aitken => {
                if let Some(prev) = &self.prev_residual {
                    let mut diff = residual.clone();
                    diff.axpy(-1.0, prev);
                    let denom = diff.dot(&diff);
                    if denom > 0.0 {
                        self.aitken_omega *= -prev.dot(&diff) / denom;
                    }
                }
                let out = relaxed(x, &residual, self.aitken_omega);
                self.prev_residual = Some(residual);
                out
            }
            AccelerationScheme::Anderson { depth, omega0 } => {
                let out = self.anderson_step(x, &residual, depth, omega0);
                self.x_history.push_back(x.clone());
                self.r_history.push_back(residual);
                while self.x_history.len() > depth {
                    self.x_history.pop_front();
                    self.r_history.pop_front();
                }
                out
            }
        }
    }

    fn anderson_step(&self, x: &DVector, residual: &DVector, depth: usize, omega0: f64) -> DVector {
        // Differences between consecutive stored pairs, the current one last.
        let mut dx_cols = Vec::new();
        let mut dr_cols = Vec::new();
        let points: Vec<(&DVector, &DVector)> = self
            .x_history
            .iter()
            .zip(self.r_history.iter())
            .chain(std::iter::once((x, residual)))
            .collect();
        for window in points.windows(2) {
            let mut dx = window[1].0.clone();
            dx.axpy(-1.0, window[0].0);
            let mut dr = window[1].1.clone();
            dr.axpy(-1.0, window[0].1);
            dx_cols.push(dx);
            dr_cols.push(dr);
        }
        while dx_cols.len() > depth {
            dx_cols.remove(0);
            dr_cols.remove(0);
        }

        // On rank deficiency drop the oldest column and retry; with nothing
        // left this degenerates to the relaxed step.
        loop {
            if dr_cols.is_empty() {
                return relaxed(x, residual, omega0);
            }
            if let Some(gamma) = least_squares(&dr_cols, residual) {
                let mut out = relaxed(x, residual, omega0);
                for (j, g_j) in gamma.iter().enumerate() {
                    out.axpy(-g_j, &dx_cols[j]);
                    out.axpy(-g_j * omega0, &dr_cols[j]);
                }
                return out;
            }
            dx_cols.remove(0);
            dr_cols.remove(0);
        }
    }
}

fn relaxed(x: &DVector, residual: &DVector, omega: f64) -> DVector {
    let mut out = x.clone();
    out.axpy(omega, residual);
    out
}

/// Least-squares solve min ||rhs - cols * gamma|| by modified Gram-Schmidt
/// QR with one reorthogonalization pass; None signals rank deficiency.
fn least_squares(cols: &[DVector], rhs: &DVector) -> Option<Vec<f64>> {
    let m = cols.len();
    let mut q: Vec<DVector> = Vec::with_capacity(m);
    let mut r = vec![vec![0.0; m]; m];
    for j in 0..m {
        let mut v = cols[j].clone();
        for _ in 0..2 {
            for i in 0..q.len() {
                let c = q[i].dot(&v);
                r[i][j] += c;
                v.axpy(-c, &q[i]);
            }
        }
        let norm = v.norm();
        if norm <= 1e-12 * cols[j].norm().max(f64::MIN_POSITIVE) {
            return None;
        }
        r[j][j] = norm;
        v.scale(1.0 / norm);
        q.push(v);
    }
    let mut gamma: Vec<f64> = q.iter().map(|qi| qi.dot(rhs)).collect();
    for i in (0..m).rev() {
        for j in i + 1..m {
            gamma[i] -= r[i][j] * gamma[j];
        }
        gamma[i] /= r[i][i];
    }
    Some(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DVector {
        DVector::from_vec(vec![v])
    }

    #[test]
    fn constant_map_is_fixed_in_one_step() {
        let c = scalar(3.25);
        let x0 = scalar(-1.0);
        for scheme in [
            AccelerationScheme::None,
            AccelerationScheme::StaticRelaxation(1.0),
            AccelerationScheme::Aitken,
            AccelerationScheme::Anderson { depth: 2, omega0: 1.0 },
        ] {
            let mut accel = Accelerator::new(scheme).unwrap();
            let x1 = accel.next_iterate(&x0, &c);
            assert_eq!(x1[0], 3.25);
        }
    }

    #[test]
    fn none_is_the_identity_wrapper() {
        let mut accel = Accelerator::new(AccelerationScheme::None).unwrap();
        let mut x = scalar(0.0);
        for _ in 0..4 {
            let g = scalar(0.5 * x[0] + 1.0);
            let next = accel.next_iterate(&x, &g);
            assert_eq!(next[0], g[0]);
            x = next;
        }
    }

    #[test]
    fn static_relaxation_damps_the_step() {
        let mut accel = Accelerator::new(AccelerationScheme::StaticRelaxation(0.25)).unwrap();
        let x = scalar(1.0);
        let g = scalar(5.0);
        assert_eq!(accel.next_iterate(&x, &g)[0], 2.0);
    }

    /// g(x) = x/2 + 1 has fixed point 2; the residual sequence is geometric,
    /// so Aitken's second iterate lands exactly.
    #[test]
    fn aitken_is_exact_on_an_affine_scalar_map() {
        let mut accel = Accelerator::new(AccelerationScheme::Aitken).unwrap();
        let g = |x: &DVector| scalar(0.5 * x[0] + 1.0);
        let x0 = scalar(0.0);
        let x1 = accel.next_iterate(&x0, &g(&x0));
        assert_eq!(x1[0], 1.0);
        let x2 = accel.next_iterate(&x1, &g(&x1));
        assert!((x2[0] - 2.0).abs() < 1e-14, "{}", x2[0]);
    }

    /// Depth-1 Anderson is a secant update, exact on affine scalar maps by
    /// the second iterate.
    #[test]
    fn anderson_depth_one_is_secant_exact() {
        let mut accel =
            Accelerator::new(AccelerationScheme::Anderson { depth: 1, omega0: 1.0 }).unwrap();
        let g = |x: &DVector| scalar(0.5 * x[0] + 1.0);
        let mut x = scalar(0.0);
        for _ in 0..2 {
            x = accel.next_iterate(&x, &g(&x));
        }
        assert!((x[0] - 2.0).abs() < 1e-14, "{}", x[0]);
    }

    /// B = 0.6 (I - 2 v v^T) is 0.6 times an orthogonal reflection, so the
    /// plain residual norm contracts by exactly 0.6 each step and Anderson
    /// must never sit above it.
    #[test]
    fn anderson_never_trails_plain_iteration_on_an_affine_contraction() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 8;
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let apply_g = |x: &DVector| {
            let vx = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>();
            DVector::from_vec(
                (0..n)
                    .map(|i| 0.6 * (x[i] - 2.0 * v[i] * vx) + c[i])
                    .collect(),
            )
        };
        let res_norm = |x: &DVector| {
            let mut r = apply_g(x);
            r.axpy(-1.0, x);
            r.norm()
        };

        let x0 = DVector::zeros(n);
        let mut plain = x0.clone();
        let mut accelerated = x0.clone();
        let mut accel =
            Accelerator::new(AccelerationScheme::Anderson { depth: 3, omega0: 1.0 }).unwrap();
        for _ in 0..12 {
            plain = apply_g(&plain);
            accelerated = accel.next_iterate(&accelerated, &apply_g(&accelerated));
            assert!(res_norm(&accelerated) <= res_norm(&plain) * (1.0 + 1e-9) + 1e-13);
        }
        assert!(res_norm(&accelerated) < 1e-10);
    }

    #[test]
    fn rank_deficiency_falls_back_to_the_relaxed_step() {
        // A stationary history makes every residual difference zero.
        let mut accel =
            Accelerator::new(AccelerationScheme::Anderson { depth: 2, omega0: 0.5 }).unwrap();
        let x = scalar(1.0);
        let g = scalar(2.0);
        let first = accel.next_iterate(&x, &g);
        assert_eq!(first[0], 1.5);
        // Same point again: the difference column is zero, so the scheme
        // must drop it and still take the relaxed step.
        let second = accel.next_iterate(&x, &g);
        assert_eq!(second[0], 1.5);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Accelerator::new(AccelerationScheme::StaticRelaxation(0.0)).is_err());
        assert!(Accelerator::new(AccelerationScheme::StaticRelaxation(1.5)).is_err());
        assert!(Accelerator::new(AccelerationScheme::Anderson { depth: 0, omega0: 1.0 }).is_err());
        assert!(
            Accelerator::new(AccelerationScheme::Anderson { depth: 1, omega0: -0.1 }).is_err()
        );
    }

    #[test]
    fn reset_clears_the_aitken_state() {
        let mut accel = Accelerator::new(AccelerationScheme::Aitken).unwrap();
        let g = |x: &DVector| scalar(0.5 * x[0] + 1.0);
        let x0 = scalar(0.0);
        let x1 = accel.next_iterate(&x0, &g(&x0));
        accel.reset();
        // After reset the first step uses omega = 1 again.
        let y1 = accel.next_iterate(&x0, &g(&x0));
        assert_eq!(x1[0], y1[0]);
    }
}
