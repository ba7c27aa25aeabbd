//! Forward-mode automatic differentiation on dual numbers carrying a full
//! gradient, used to build exact Jacobians of callback-defined residuals.

use crate::linalg::{CsrMatrix, DVector};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Value plus derivatives with respect to a fixed set of seed directions.
/// All operands of a binary operation must carry the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    value: f64,
    derivatives: Vec<f64>,
}

impl Dual {
    pub fn constant(value: f64, width: usize) -> Self {
        Self {
            value,
            derivatives: vec![0.0; width],
        }
    }

    /// Seeds direction `index`, so the derivatives slot tracks d/dx_index.
    pub fn variable(value: f64, index: usize, width: usize) -> Self {
        let mut derivatives = vec![0.0; width];
        derivatives[index] = 1.0;
        Self { value, derivatives }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn derivative(&self, index: usize) -> f64 {
        self.derivatives[index]
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn width(&self) -> usize {
        self.derivatives.len()
    }

    fn map_chain(&self, value: f64, outer_derivative: f64) -> Self {
        Self {
            value,
            derivatives: self
                .derivatives
                .iter()
                .map(|d| outer_derivative * d)
                .collect(),
        }
    }

    pub fn sin(&self) -> Self {
        self.map_chain(self.value.sin(), self.value.cos())
    }

    pub fn cos(&self) -> Self {
        self.map_chain(self.value.cos(), -self.value.sin())
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.map_chain(e, e)
    }

    pub fn ln(&self) -> Self {
        self.map_chain(self.value.ln(), 1.0 / self.value)
    }

    pub fn sqrt(&self) -> Self {
        let root = self.value.sqrt();
        self.map_chain(root, 0.5 / root)
    }

    pub fn powf(&self, exponent: f64) -> Self {
        self.map_chain(
            self.value.powf(exponent),
            exponent * self.value.powf(exponent - 1.0),
        )
    }

    pub fn powi(&self, exponent: i32) -> Self {
        self.map_chain(
            self.value.powi(exponent),
            f64::from(exponent) * self.value.powi(exponent - 1),
        )
    }
}

fn zip_width<'a>(a: &'a Dual, b: &'a Dual) -> impl Iterator<Item = (&'a f64, &'a f64)> {
    assert_eq!(a.derivatives.len(), b.derivatives.len(), "dual width mismatch");
    a.derivatives.iter().zip(b.derivatives.iter())
}

impl Add for &Dual {
    type Output = Dual;
    fn add(self, rhs: &Dual) -> Dual {
        Dual {
            value: self.value + rhs.value,
            derivatives: zip_width(self, rhs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Dual {
    type Output = Dual;
    fn sub(self, rhs: &Dual) -> Dual {
        Dual {
            value: self.value - rhs.value,
            derivatives: zip_width(self, rhs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Dual {
    type Output = Dual;
    fn mul(self, rhs: &Dual) -> Dual {
        Dual {
            value: self.value * rhs.value,
            derivatives: zip_width(self, rhs)
                .map(|(a, b)| a * rhs.value + self.value * b)
                .collect(),
        }
    }
}

impl Div for &Dual {
    type Output = Dual;
    fn div(self, rhs: &Dual) -> Dual {
        let inv = 1.0 / rhs.value;
        Dual {
            value: self.value * inv,
            derivatives: zip_width(self, rhs)
                .map(|(a, b)| (a - self.value * inv * b) * inv)
                .collect(),
        }
    }
}

impl Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            value: -self.value,
            derivatives: self.derivatives.iter().map(|d| -d).collect(),
        }
    }
}

macro_rules! forward_owned_ops {
    ($($trait:ident $method:ident),*) => {$(
        impl $trait for Dual {
            type Output = Dual;
            fn $method(self, rhs: Dual) -> Dual {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Dual> for Dual {
            type Output = Dual;
            fn $method(self, rhs: &Dual) -> Dual {
                (&self).$method(rhs)
            }
        }
        impl $trait<f64> for &Dual {
            type Output = Dual;
            fn $method(self, rhs: f64) -> Dual {
                self.$method(&Dual::constant(rhs, self.derivatives.len()))
            }
        }
        impl $trait<f64> for Dual {
            type Output = Dual;
            fn $method(self, rhs: f64) -> Dual {
                (&self).$method(rhs)
            }
        }
    )*};
}

forward_owned_ops!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        -&self
    }
}

impl Mul<&Dual> for f64 {
    type Output = Dual;
    fn mul(self, rhs: &Dual) -> Dual {
        rhs * self
    }
}

/// Exact Jacobian of `residual_fn` at `x`, one dual sweep with a full-width
/// seed. The result uses a dense sparsity pattern.
pub fn jacobian_via_dual<F>(residual_fn: F, x: &DVector) -> CsrMatrix
where
    F: Fn(&[Dual]) -> Vec<Dual>,
{
    let n = x.len();
    let seeded: Vec<Dual> = (0..n).map(|j| Dual::variable(x[j], j, n)).collect();
    let outputs = residual_fn(&seeded);
    let rows: Vec<Vec<f64>> = outputs
        .iter()
        .map(|out| {
            assert_eq!(out.width(), n, "residual output width mismatch");
            out.derivatives().to_vec()
        })
        .collect();
    CsrMatrix::from_dense(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_unit_derivative() {
        let x = Dual::variable(4.2, 0, 1);
        assert_eq!(x.value(), 4.2);
        assert_eq!(x.derivative(0), 1.0);
    }

    #[test]
    fn product_rule_on_x_sin_x() {
        let x = Dual::variable(1.0, 0, 1);
        let y = &x * &x.sin();
        assert!((y.value() - 1.0f64.sin()).abs() < 1e-15);
        assert!((y.derivative(0) - (1.0f64.sin() + 1.0f64.cos())).abs() < 1e-15);
    }

    #[test]
    fn quotient_and_chain_rules() {
        let x = Dual::variable(2.0, 0, 1);
        // exp(ln x) = x, derivative 1.
        let roundtrip = x.ln().exp();
        assert!((roundtrip.value() - 2.0).abs() < 1e-14);
        assert!((roundtrip.derivative(0) - 1.0).abs() < 1e-14);

        // (x^2 + 1) / x has derivative 1 - 1/x^2.
        let q = &(&(&x * &x) + 1.0) / &x;
        assert!((q.value() - 2.5).abs() < 1e-15);
        assert!((q.derivative(0) - (1.0 - 0.25)).abs() < 1e-15);

        let p = x.powf(2.5);
        assert!((p.derivative(0) - 2.5 * 2.0f64.powf(1.5)).abs() < 1e-13);
        let pi = x.powi(3);
        assert!((pi.derivative(0) - 12.0).abs() < 1e-13);
        assert!(((-&x).derivative(0) + 1.0).abs() < 1e-15);
        assert!((x.sqrt().derivative(0) - 0.5 / 2.0f64.sqrt()).abs() < 1e-15);
        assert!((x.cos().derivative(0) + 2.0f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn jacobian_of_a_two_by_two_map() {
        // F(x, y) = (x y, x + y) at (2, 3) has Jacobian [[3, 2], [1, 1]].
        let x = DVector::from_vec(vec![2.0, 3.0]);
        let jac = jacobian_via_dual(
            |v| vec![&v[0] * &v[1], &v[0] + &v[1]],
            &x,
        );
        assert_eq!(jac.get(0, 0), 3.0);
        assert_eq!(jac.get(0, 1), 2.0);
        assert_eq!(jac.get(1, 0), 1.0);
        assert_eq!(jac.get(1, 1), 1.0);
    }

    #[test]
    #[should_panic(expected = "width mismatch")]
    fn mixed_widths_panic() {
        let a = Dual::variable(1.0, 0, 1);
        let b = Dual::variable(1.0, 0, 2);
        let _ = &a + &b;
    }
}
