//! Gauss quadrature for the Beta distribution (Golub–Welsch).

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss rule for `Beta(a, b)` on `[0, 1]`; weights sum to 1.
///
/// An `m`-point rule integrates polynomials of degree `2m - 1` exactly.
#[derive(Debug, Clone)]
pub struct BetaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BetaQuadrature {
    pub fn new(a: f64, b: f64, points: usize) -> Self {
        assert!(a > 0.0 && b > 0.0 && points > 0);
        let s = a + b;
        let mut jacobi = DMatrix::zeros(points, points);
        for k in 0..points {
            let kf = k as f64;
            jacobi[(k, k)] = if k == 0 {
                a / s
            } else {
                0.5 * (1.0 + (a - b) * (s - 2.0) / ((2.0 * kf + s - 2.0) * (2.0 * kf + s)))
            };
            if k + 1 < points {
                let j = kf + 1.0;
                // recurrence coefficient of the monic polynomials, shifted to [0, 1]
                let beta = if j == 1.0 {
                    a * b / (s * s * (s + 1.0))
                } else {
                    let t = 2.0 * j + s - 2.0;
                    j * (j + a - 1.0) * (j + b - 1.0) * (j + s - 2.0)
                        / (t * t * (t + 1.0) * (t - 1.0))
                };
                jacobi[(k, k + 1)] = beta.sqrt();
                jacobi[(k + 1, k)] = beta.sqrt();
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let weights = (0..points)
            .map(|i| eig.eigenvectors[(0, i)].powi(2))
            .collect();
        Self {
            nodes: eig.eigenvalues.iter().copied().collect(),
            weights,
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }
}
