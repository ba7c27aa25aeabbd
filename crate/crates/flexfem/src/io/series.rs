//! Scalar time series with pluggable interpolation: piecewise linear,
//! natural cubic splines, curvature-budget smoothing splines, trigonometric
//! interpolation for periodic data, and the derivatives of the first two.

use super::IoError;

#[derive(Debug, Clone, PartialEq)]
pub enum InterpolationMode {
    Linear,
    CubicSpline,
    /// Budget S bounds the sum of squared fit residuals at the samples; the
    /// interpolant minimizes total curvature subject to that budget.
    SmoothingSpline(f64),
    /// Periodic trigonometric polynomial through uniformly spaced samples.
    Trigonometric,
    DerivativeLinear,
    DerivativeSpline,
}

/// Precomputed representation, bound to the mode at construction.
#[derive(Debug, Clone)]
enum Engine {
    Linear { derivative: bool },
    Spline { rep: SplineRep, derivative: bool },
    Trigonometric(TrigRep),
}

#[derive(Debug, Clone)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    mode: InterpolationMode,
    engine: Engine,
}

impl TimeSeries {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        mode: InterpolationMode,
    ) -> Result<Self, IoError> {
        if times.len() != values.len() {
            return Err(IoError::SeriesLengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(IoError::TooFewSamples(times.len()));
        }
        for i in 1..times.len() {
            if times[i] <= times[i - 1] {
                return Err(IoError::NonIncreasingTimes(i));
            }
        }
        let engine = match &mode {
            InterpolationMode::Linear => Engine::Linear { derivative: false },
            InterpolationMode::DerivativeLinear => Engine::Linear { derivative: true },
            InterpolationMode::CubicSpline => Engine::Spline {
                rep: SplineRep::interpolating(&times, &values),
                derivative: false,
            },
            InterpolationMode::DerivativeSpline => Engine::Spline {
                rep: SplineRep::interpolating(&times, &values),
                derivative: true,
            },
            InterpolationMode::SmoothingSpline(budget) => {
                if *budget < 0.0 {
                    return Err(IoError::NegativeBudget(*budget));
                }
                Engine::Spline {
                    rep: SplineRep::smoothing(&times, &values, *budget),
                    derivative: false,
                }
            }
            InterpolationMode::Trigonometric => {
                Engine::Trigonometric(TrigRep::build(&times, &values)?)
            }
        };
        Ok(Self {
            times,
            values,
            mode,
            engine,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mode(&self) -> &InterpolationMode {
        &self.mode
    }

    /// Outside the sample window the value modes clamp to the endpoint value
    /// and the derivative modes return zero; the trigonometric mode extends
    /// periodically instead.
    pub fn evaluate(&self, t: f64) -> f64 {
        let (t0, t1) = (self.times[0], self.times[self.times.len() - 1]);
        match &self.engine {
            Engine::Trigonometric(rep) => rep.evaluate(t),
            Engine::Linear { derivative } => {
                if t <= t0 {
                    return if *derivative { 0.0 } else { self.values[0] };
                }
                if t >= t1 {
                    return if *derivative {
                        0.0
                    } else {
                        self.values[self.values.len() - 1]
                    };
                }
                let i = interval_of(&self.times, t);
                let h = self.times[i + 1] - self.times[i];
                let slope = (self.values[i + 1] - self.values[i]) / h;
                if *derivative {
                    slope
                } else {
                    self.values[i] + slope * (t - self.times[i])
                }
            }
            Engine::Spline { rep, derivative } => {
                if t <= t0 {
                    return if *derivative { 0.0 } else { rep.g[0] };
                }
                if t >= t1 {
                    return if *derivative { 0.0 } else { rep.g[rep.g.len() - 1] };
                }
                if *derivative {
                    rep.derivative(&self.times, t)
                } else {
                    rep.value(&self.times, t)
                }
            }
        }
    }

    /// Fitted values at the sample times (differ from the raw samples only
    /// for a smoothing spline with a positive budget).
    pub fn fitted_values(&self) -> Vec<f64> {
        match &self.engine {
            Engine::Spline { rep, .. } => rep.g.clone(),
            _ => self.values.clone(),
        }
    }
}

/// Largest i with times[i] <= t < times[i+1]; caller guarantees t interior.
fn interval_of(times: &[f64], t: f64) -> usize {
    match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
        Ok(i) => i.min(times.len() - 2),
        Err(i) => i - 1,
    }
}

/// Cubic spline in second-derivative form: knot values `g` and knot second
/// derivatives `m` with natural ends (m = 0 at both).
#[derive(Debug, Clone)]
struct SplineRep {
    g: Vec<f64>,
    m: Vec<f64>,
}

impl SplineRep {
    fn interpolating(times: &[f64], values: &[f64]) -> Self {
        let n = times.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Tridiagonal system R m_int = second divided differences.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut off = vec![0.0; k - 1];
            let mut rhs = vec![0.0; k];
            for i in 0..k {
                let h0 = times[i + 1] - times[i];
                let h1 = times[i + 2] - times[i + 1];
                diag[i] = (h0 + h1) / 3.0;
                if i + 1 < k {
                    off[i] = h1 / 6.0;
                }
                rhs[i] =
                    (values[i + 2] - values[i + 1]) / h1 - (values[i + 1] - values[i]) / h0;
            }
            let interior = solve_tridiagonal(&mut diag, &off, &mut rhs);
            m[1..=k].copy_from_slice(&interior);
        }
        Self {
            g: values.to_vec(),
            m,
        }
    }

    /// Reinsch construction: minimize total curvature subject to
    /// sum((g_i - y_i)^2) <= budget. The smoothed spline solves
    /// (Q^T Q + p R) u = Q^T y with fitted values g = y - Q u; the Lagrange
    /// parameter p is located so the residual meets the budget.
    fn smoothing(times: &[f64], values: &[f64], budget: f64) -> Self {
        let n = times.len();
        if budget == 0.0 || n == 2 {
            return Self::interpolating(times, values);
        }
        let k = n - 2;
        let h: Vec<f64> = (0..n - 1).map(|i| times[i + 1] - times[i]).collect();
        // Q^T y: second divided differences.
        let qty: Vec<f64> = (0..k)
            .map(|i| (values[i + 2] - values[i + 1]) / h[i + 1] - (values[i + 1] - values[i]) / h[i])
            .collect();

        // Dense k x k builds of Q^T Q (pentadiagonal) and R (tridiagonal);
        // series are desk-scale so dense solves are fine.
        let mut qtq = vec![0.0; k * k];
        for i in 0..k {
            // Column i of Q is supported on rows i, i+1, i+2.
            let col = [1.0 / h[i], -1.0 / h[i] - 1.0 / h[i + 1], 1.0 / h[i + 1]];
            for j in i.saturating_sub(2)..(i + 3).min(k) {
                let other = [1.0 / h[j], -1.0 / h[j] - 1.0 / h[j + 1], 1.0 / h[j + 1]];
                let mut dot = 0.0;
                for (a, &ca) in col.iter().enumerate() {
                    let row = i + a;
                    if row >= j && row <= j + 2 {
                        dot += ca * other[row - j];
                    }
                }
                qtq[i * k + j] = dot;
            }
        }
        let mut r = vec![0.0; k * k];
        for i in 0..k {
            r[i * k + i] = (h[i] + h[i + 1]) / 3.0;
            if i + 1 < k {
                r[i * k + i + 1] = h[i + 1] / 6.0;
                r[(i + 1) * k + i] = h[i + 1] / 6.0;
            }
        }

        let residual_at = |p: f64| -> (f64, Vec<f64>) {
            let mut a = vec![0.0; k * k];
            for i in 0..k * k {
                a[i] = qtq[i] + p * r[i];
            }
            let u = solve_dense_sym(&mut a, qty.clone(), k);
            // Fit residual y - g = Q u; its squared norm is the budget use.
            let mut c = 0.0;
            for i in 0..n {
                c += q_times(&u, &h, i).powi(2);
            }
            (c, u)
        };

        // p = 0 gives the least-squares line, the loosest fit this family
        // admits; if even that is inside the budget, return it.
        let (c0, u0) = residual_at(0.0);
        if c0 <= budget {
            return Self::from_u(times, values, &u0, &h);
        }
        // Residual decreases monotonically in p; bracket then bisect.
        let mut lo = 0.0;
        let mut hi = 1.0;
        while residual_at(hi).0 > budget {
            hi *= 4.0;
            assert!(hi < 1e300, "smoothing budget bracket failed");
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual_at(mid).0 > budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) <= 1e-14 * hi.max(1.0) {
                break;
            }
        }
        let (_, u) = residual_at(hi);
        Self::from_u(times, values, &u, &h)
    }

    fn from_u(times: &[f64], values: &[f64], u: &[f64], h: &[f64]) -> Self {
        let n = times.len();
        let mut g = vec![0.0; n];
        for i in 0..n {
            g[i] = values[i] - q_times(u, h, i);
        }
        // Recover knot second derivatives from the smoothed ordinates: the
        // result is itself a natural interpolating spline through g.
        Self::interpolating(times, &g)
    }

    fn value(&self, times: &[f64], t: f64) -> f64 {
        let i = interval_of(times, t);
        let h = times[i + 1] - times[i];
        let a = (times[i + 1] - t) / h;
        let b = (t - times[i]) / h;
        a * self.g[i]
            + b * self.g[i + 1]
            + ((a.powi(3) - a) * self.m[i] + (b.powi(3) - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn derivative(&self, times: &[f64], t: f64) -> f64 {
        let i = interval_of(times, t);
        let h = times[i + 1] - times[i];
        let a = (times[i + 1] - t) / h;
        let b = (t - times[i]) / h;
        (self.g[i + 1] - self.g[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }
}

/// Component i of Q u where Q is the n x (n-2) second-difference matrix.
fn q_times(u: &[f64], h: &[f64], i: usize) -> f64 {
    let k = u.len();
    let mut out = 0.0;
    // Column j of Q has entries 1/h_j at row j, -(1/h_j + 1/h_{j+1}) at
    // row j+1, and 1/h_{j+1} at row j+2.
    for j in i.saturating_sub(2)..=i.min(k.saturating_sub(1)) {
        if j >= k {
            continue;
        }
        let entry = match i - j {
            0 => 1.0 / h[j],
            1 => -(1.0 / h[j] + 1.0 / h[j + 1]),
            2 => 1.0 / h[j + 1],
            _ => 0.0,
        };
        out += entry * u[j];
    }
    out
}

fn solve_tridiagonal(diag: &mut [f64], off: &[f64], rhs: &mut [f64]) -> Vec<f64> {
    let n = diag.len();
    for i in 1..n {
        let w = off[i - 1] / diag[i - 1];
        diag[i] -= w * off[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    let mut x = vec![0.0; n];
    x[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (rhs[i] - off[i] * x[i + 1]) / diag[i];
    }
    x
}

/// Gaussian elimination with partial pivoting on a dense row-major system.
fn solve_dense_sym(a: &mut [f64], mut b: Vec<f64>, n: usize) -> Vec<f64> {
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let w = a[row * n + col] / d;
            if w == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= w * a[col * n + j];
            }
            b[row] -= w * b[col];
        }
    }
    for row in (0..n).rev() {
        let mut s = b[row];
        for j in row + 1..n {
            s -= a[row * n + j] * b[j];
        }
        b[row] = s / a[row * n + row];
    }
    b
}

/// Real trigonometric interpolant through n uniform samples with period
/// n * spacing.
#[derive(Debug, Clone)]
struct TrigRep {
    t0: f64,
    period: f64,
    cos_coeff: Vec<f64>,
    sin_coeff: Vec<f64>,
    mean: f64,
    nyquist: Option<f64>,
}

impl TrigRep {
    fn build(times: &[f64], values: &[f64]) -> Result<Self, IoError> {
        let n = times.len();
        let spacing = times[1] - times[0];
        for i in 1..n - 1 {
            let h = times[i + 1] - times[i];
            if (h - spacing).abs() > 1e-9 * spacing.abs() {
                return Err(IoError::NonuniformSpacing(i));
            }
        }
        let period = spacing * n as f64;
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let harmonics = if n % 2 == 0 { n / 2 - 1 } else { (n - 1) / 2 };
        let mut cos_coeff = Vec::with_capacity(harmonics);
        let mut sin_coeff = Vec::with_capacity(harmonics);
        for k in 1..=harmonics {
            let mut a = 0.0;
            let mut b = 0.0;
            for (j, y) in values.iter().enumerate() {
                let phase = std::f64::consts::TAU * (k * j) as f64 / nf;
                a += y * phase.cos();
                b += y * phase.sin();
            }
            cos_coeff.push(2.0 * a / nf);
            sin_coeff.push(2.0 * b / nf);
        }
        let nyquist = if n % 2 == 0 {
            let mut a = 0.0;
            for (j, y) in values.iter().enumerate() {
                if j % 2 == 0 {
                    a += y;
                } else {
                    a -= y;
                }
            }
            Some(a / nf)
        } else {
            None
        };
        Ok(Self {
            t0: times[0],
            period,
            cos_coeff,
            sin_coeff,
            mean,
            nyquist,
        })
    }

    fn evaluate(&self, t: f64) -> f64 {
        let omega = std::f64::consts::TAU / self.period;
        let tau = t - self.t0;
        let mut out = self.mean;
        for (k, (a, b)) in self.cos_coeff.iter().zip(&self.sin_coeff).enumerate() {
            let arg = omega * (k + 1) as f64 * tau;
            out += a * arg.cos() + b * arg.sin();
        }
        if let Some(a) = self.nyquist {
            let m = self.cos_coeff.len() + 1;
            out += a * (omega * m as f64 * tau).cos();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_series(mode: InterpolationMode) -> TimeSeries {
        let times: Vec<f64> = (0..6).map(|i| i as f64 * 0.2).collect();
        let values: Vec<f64> = times.iter().map(|t| 2.0 * t).collect();
        TimeSeries::new(times, values, mode).unwrap()
    }

    #[test]
    fn linear_data_is_reproduced_between_nodes() {
        for mode in [InterpolationMode::Linear, InterpolationMode::CubicSpline] {
            let series = linear_series(mode);
            assert!((series.evaluate(0.35) - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_linear_data_is_flat() {
        let series = linear_series(InterpolationMode::DerivativeLinear);
        for t in [0.05, 0.31, 0.77, 0.99] {
            assert!((series.evaluate(t) - 2.0).abs() < 1e-12);
        }
        // Clamped outside, so the derivative vanishes there.
        assert_eq!(series.evaluate(-0.5), 0.0);
        assert_eq!(series.evaluate(1.5), 0.0);
    }

    #[test]
    fn spline_derivative_tracks_a_parabola() {
        let times: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        let values: Vec<f64> = times.iter().map(|t| t * t).collect();
        let series =
            TimeSeries::new(times, values, InterpolationMode::DerivativeSpline).unwrap();
        // Away from the natural ends the spline derivative approximates 2t.
        for t in [0.35, 0.5, 0.65] {
            assert!((series.evaluate(t) - 2.0 * t).abs() < 1e-3);
        }
    }

    #[test]
    fn all_value_modes_reproduce_their_samples() {
        let times: Vec<f64> = (0..8).map(|i| i as f64 / 8.0).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| (std::f64::consts::TAU * t).sin() + 0.3 * t)
            .collect();
        let modes = [
            InterpolationMode::Linear,
            InterpolationMode::CubicSpline,
            InterpolationMode::SmoothingSpline(0.0),
        ];
        for mode in modes {
            let series = TimeSeries::new(times.clone(), values.clone(), mode).unwrap();
            for (t, y) in times.iter().zip(&values) {
                assert!(
                    (series.evaluate(*t) - y).abs() < 1e-9,
                    "mode {:?} misses sample at t = {t}",
                    series.mode()
                );
            }
        }
        let trig =
            TimeSeries::new(times.clone(), values.clone(), InterpolationMode::Trigonometric)
                .unwrap();
        for (t, y) in times.iter().zip(&values) {
            assert!((trig.evaluate(*t) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn trigonometric_mode_is_exact_for_bandlimited_data() {
        let n = 8;
        let times: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let values: Vec<f64> = times
            .iter()
            .map(|t| (std::f64::consts::TAU * t).sin())
            .collect();
        let series =
            TimeSeries::new(times, values, InterpolationMode::Trigonometric).unwrap();
        // At a node.
        let quarter = std::f64::consts::FRAC_PI_4.sin();
        assert!((series.evaluate(0.125) - quarter).abs() < 1e-12);
        // Between nodes: a single harmonic is reproduced everywhere.
        let eighth = (std::f64::consts::TAU * 0.0625).sin();
        assert!((series.evaluate(0.0625) - eighth).abs() < 1e-10);
        // Periodic extension.
        assert!((series.evaluate(1.0625) - eighth).abs() < 1e-10);
    }

    #[test]
    fn natural_spline_has_flat_ends() {
        let times: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
        let values: Vec<f64> = times.iter().map(|t| (3.0 * t).exp()).collect();
        let series =
            TimeSeries::new(times.clone(), values, InterpolationMode::CubicSpline).unwrap();
        match &series.engine {
            Engine::Spline { rep, .. } => {
                assert!(rep.m[0].abs() <= 1e-9);
                assert!(rep.m[rep.m.len() - 1].abs() <= 1e-9);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn smoothing_budget_is_active_for_wiggly_data() {
        let times: Vec<f64> = (0..12).map(|i| i as f64).collect();
        // Line plus deterministic wiggle.
        let values: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, t)| 0.5 * t + if i % 2 == 0 { 0.3 } else { -0.3 })
            .collect();
        let budget = 0.2;
        let series = TimeSeries::new(
            times.clone(),
            values.clone(),
            InterpolationMode::SmoothingSpline(budget),
        )
        .unwrap();
        let fitted = series.fitted_values();
        let residual: f64 = fitted
            .iter()
            .zip(&values)
            .map(|(g, y)| (g - y).powi(2))
            .sum();
        assert!(residual <= budget + 1e-9);
        // The wiggle makes even the least-squares line exceed the budget, so
        // the constraint is active.
        assert!((residual - budget).abs() <= 1e-6 * budget);
        // Smoothed values deviate from the raw samples.
        assert!(fitted
            .iter()
            .zip(&values)
            .any(|(g, y)| (g - y).abs() > 0.05));
    }

    #[test]
    fn generous_budget_returns_the_least_squares_line() {
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times
            .iter()
            .enumerate()
            .map(|(i, t)| 1.0 + 2.0 * t + if i % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let series = TimeSeries::new(
            times.clone(),
            values,
            InterpolationMode::SmoothingSpline(1e6),
        )
        .unwrap();
        let fitted = series.fitted_values();
        // A line has vanishing second divided differences.
        for i in 1..fitted.len() - 1 {
            let second = fitted[i + 1] - 2.0 * fitted[i] + fitted[i - 1];
            assert!(second.abs() < 1e-8, "second difference {second}");
        }
    }

    #[test]
    fn invalid_series_are_rejected() {
        assert!(matches!(
            TimeSeries::new(vec![0.0], vec![1.0], InterpolationMode::Linear),
            Err(IoError::TooFewSamples(1))
        ));
        assert!(matches!(
            TimeSeries::new(vec![0.0, 0.0], vec![1.0, 2.0], InterpolationMode::Linear),
            Err(IoError::NonIncreasingTimes(1))
        ));
        assert!(matches!(
            TimeSeries::new(vec![0.0, 1.0], vec![1.0], InterpolationMode::Linear),
            Err(IoError::SeriesLengthMismatch { .. })
        ));
        assert!(matches!(
            TimeSeries::new(
                vec![0.0, 1.0, 3.0, 4.0],
                vec![1.0, 2.0, 3.0, 4.0],
                InterpolationMode::Trigonometric
            ),
            Err(IoError::NonuniformSpacing(_))
        ));
    }

    #[test]
    fn clamped_extrapolation_holds_endpoint_values() {
        let series = linear_series(InterpolationMode::CubicSpline);
        assert!((series.evaluate(-1.0) - 0.0).abs() < 1e-12);
        assert!((series.evaluate(5.0) - 2.0).abs() < 1e-12);
    }
}
