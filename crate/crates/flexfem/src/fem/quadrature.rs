//! Tensor-product Gauss quadrature on the unit reference cell [0,1]^dim.

use super::FemError;

/// Gauss-Legendre nodes and weights on (-1, 1), n = 1..=5. With n points the
/// rule is exact for polynomials of degree 2n - 1.
const GAUSS_1D: [(&[f64], &[f64]); 5] = [
    (&[0.0], &[2.0]),
    (
        &[-0.577_350_269_189_625_7, 0.577_350_269_189_625_7],
        &[1.0, 1.0],
    ),
    (
        &[-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
        &[5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
    ),
    (
        &[
            -0.861_136_311_594_052_6,
            -0.339_981_043_584_856_26,
            0.339_981_043_584_856_26,
            0.861_136_311_594_052_6,
        ],
        &[
            0.347_854_845_137_453_86,
            0.652_145_154_862_546_1,
            0.652_145_154_862_546_1,
            0.347_854_845_137_453_86,
        ],
    ),
    (
        &[
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ],
        &[
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ],
    ),
];

/// Quadrature rule on [0,1]^dim. `dim` 0 is the empty product: one point
/// with weight 1, used for the faces of 1D meshes.
#[derive(Debug, Clone)]
pub struct Quadrature {
    dim: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

pub fn gauss_quadrature(dim: usize, n_per_axis: usize) -> Result<Quadrature, FemError> {
    if dim > 3 {
        return Err(FemError::DimensionOutOfRange(dim));
    }
    if !(1..=5).contains(&n_per_axis) {
        return Err(FemError::QuadratureOrderOutOfRange(n_per_axis));
    }
    let (nodes, weights) = GAUSS_1D[n_per_axis - 1];
    let x01: Vec<f64> = nodes.iter().map(|x| 0.5 * (x + 1.0)).collect();
    let w01: Vec<f64> = weights.iter().map(|w| 0.5 * w).collect();

    let n_points = n_per_axis.pow(dim as u32);
    let mut points = Vec::with_capacity(n_points);
    let mut w = Vec::with_capacity(n_points);
    for q in 0..n_points {
        let mut idx = q;
        let mut point = [0.0; 3];
        let mut weight = 1.0;
        for axis in 0..dim {
            let i = idx % n_per_axis;
            idx /= n_per_axis;
            point[axis] = x01[i];
            weight *= w01[i];
        }
        points.push(point);
        w.push(weight);
    }
    Ok(Quadrature {
        dim,
        points,
        weights: w,
    })
}

impl Quadrature {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reference coordinates of point `q`, length `dim`.
    pub fn point(&self, q: usize) -> &[f64] {
        &self.points[q][..self.dim]
    }

    pub(super) fn point_raw(&self, q: usize) -> &[f64; 3] {
        &self.points[q]
    }

    pub fn weight(&self, q: usize) -> f64 {
        self.weights[q]
    }
}
