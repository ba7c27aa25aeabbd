use std::ops::{Index, IndexMut};

/// Dense real vector used throughout assembly and solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct DVector {
    data: Vec<f64>,
}

impl DVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self { data }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        Self {
            data: vec![value; len],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn fill(&mut self, value: f64) {
        self.data.fill(value);
    }

    pub fn dot(&self, other: &DVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &DVector) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.data.iter_mut().zip(x.data.iter()) {
            *s += a * v;
        }
    }

    /// `self = a * self + x`
    pub fn scale_add(&mut self, a: f64, x: &DVector) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.data.iter_mut().zip(x.data.iter()) {
            *s = a * *s + v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for s in self.data.iter_mut() {
            *s *= a;
        }
    }

    pub fn sub(&self, other: &DVector) -> DVector {
        debug_assert_eq!(self.len(), other.len());
        DVector::from_vec(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn add(&self, other: &DVector) -> DVector {
        debug_assert_eq!(self.len(), other.len());
        DVector::from_vec(
            self.data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    /// All entries finite (neither NaN nor infinite).
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for DVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for DVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl From<Vec<f64>> for DVector {
    fn from(data: Vec<f64>) -> Self {
        Self { data }
    }
}

impl<'a> IntoIterator for &'a DVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.data.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norms() {
        let a = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(a.dot(&a), 25.0);
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.norm_max(), 4.0);
    }

    #[test]
    fn axpy_updates_in_place() {
        let mut a = DVector::from_vec(vec![1.0, 2.0]);
        let b = DVector::from_vec(vec![10.0, 20.0]);
        a.axpy(0.5, &b);
        assert_eq!(a.as_slice(), &[6.0, 12.0]);
    }

    #[test]
    fn finite_detection() {
        let mut a = DVector::zeros(3);
        assert!(a.is_finite());
        a[1] = f64::NAN;
        assert!(!a.is_finite());
        a[1] = f64::INFINITY;
        assert!(!a.is_finite());
    }
}
