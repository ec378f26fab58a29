//! One-dimensional stencil matrices on the periodic node grid.

use ndarray::Array2;

/// Upwind difference and velocity-split matrices for one mode.
#[derive(Debug, Clone)]
pub struct UpwindMatrices {
    /// Second-order backward difference, periodic.
    pub dplus: Array2<f64>,
    /// `-dplus^T`, the matching forward difference.
    pub dminus: Array2<f64>,
    /// `diag(max(v, 0))`.
    pub vplus: Array2<f64>,
    /// `diag(min(v, 0))`.
    pub vminus: Array2<f64>,
}

pub fn build_upwind_matrices(m: usize, nodes: &[f64]) -> UpwindMatrices {
    assert!(m >= 4 && nodes.len() == m);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let mut dplus = Array2::zeros((m, m));
    for k in 0..m {
        dplus[[k, k]] += 3.0 / (2.0 * h);
        dplus[[k, (k + m - 1) % m]] += -4.0 / (2.0 * h);
        dplus[[k, (k + m - 2) % m]] += 1.0 / (2.0 * h);
    }
    let dminus = -dplus.t().to_owned();
    let vplus = Array2::from_diag(&ndarray::Array1::from_iter(nodes.iter().map(|v| v.max(0.0))));
    let vminus = Array2::from_diag(&ndarray::Array1::from_iter(nodes.iter().map(|v| v.min(0.0))));
    UpwindMatrices {
        dplus,
        dminus,
        vplus,
        vminus,
    }
}

/// Periodic fourth difference with stencil `(1, -4, 6, -4, 1) / h^4`.
/// Wrapped entries accumulate, which matters only for `m = 4`.
pub fn fourth_difference(m: usize) -> Array2<f64> {
    assert!(m >= 4);
    let h = 2.0 * std::f64::consts::PI / m as f64;
    let h4 = h.powi(4);
    let stencil = [1.0, -4.0, 6.0, -4.0, 1.0];
    let mut d = Array2::zeros((m, m));
    for k in 0..m {
        for (o, w) in stencil.iter().enumerate() {
            let col = (k + m + o - 2) % m;
            d[[k, col]] += w / h4;
        }
    }
    d
}
