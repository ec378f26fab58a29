//! Tensor-train tensors and operators.
//!
//! Dense data is always linearized row-major (first mode slowest). Mode order
//! for phase-space fields is `(x_1, .., x_D, v_1, .., v_D)`.

mod dense;
mod operator;
mod tensor;

pub use dense::DenseTensor;
pub use operator::{OpEntry, SparseCore, TtOperator};
pub use tensor::TtTensor;

pub(crate) use dense::increment;
pub(crate) use tensor::{contract_core, right_orthogonalize, to_core};

use ndarray::{Array1, Array2, Array3};

use crate::error::{AptError, Result};

/// Contracts the first `d/2` (spatial) cores into a dense tensor of shape
/// `(m_1, .., m_D, r_D)`, leaving the bond to the velocity cores open.
pub fn partial_reduce_spatial(f: &TtTensor) -> Result<DenseTensor> {
    let d = f.order();
    if d < 2 || !d.is_multiple_of(2) {
        return Err(AptError::InvalidArgument(format!(
            "partial reduction needs an even order of at least 2, got {d}"
        )));
    }
    let y = spatial_matrix(f, d / 2);
    let mut shape: Vec<usize> = f.mode_sizes()[..d / 2].to_vec();
    shape.push(y.ncols());
    DenseTensor::new(shape, y.iter().copied().collect())
}

/// First `split` cores contracted into an `(prod n_k) x r_split` matrix.
pub fn spatial_matrix(f: &TtTensor, split: usize) -> Array2<f64> {
    let mut acc = Array2::<f64>::ones((1, 1));
    for core in &f.cores()[..split] {
        let (r, n, r2) = core.dim();
        let unfolded = core.to_shape((r, n * r2)).expect("contiguous");
        let prod = acc.dot(&unfolded);
        let rows = prod.nrows() * n;
        acc = prod
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((rows, r2))
            .expect("row-major reshape");
    }
    acc
}

/// Contracts cores `split..d` against one weight vector each, returning the
/// length-`r_split` vector left on the open bond.
pub fn contract_tail(f: &TtTensor, split: usize, weights: &[&[f64]]) -> Array1<f64> {
    let cores = &f.cores()[split..];
    assert_eq!(cores.len(), weights.len());
    let mut acc = Array1::<f64>::ones(1);
    for (core, w) in cores.iter().zip(weights).rev() {
        let mat = contract_core(core, w);
        acc = mat.dot(&acc);
    }
    acc
}

/// Inserts a new mode of size `m` so that it becomes mode `position`
/// (1-based, `1 ..= d + 1`). The new core is the identity on the bond it sits
/// on, so every slice along the new mode equals the original tensor.
pub fn expand(t: &TtTensor, position: usize, m: usize) -> Result<TtTensor> {
    let d = t.order();
    if position == 0 || position > d + 1 || m == 0 {
        return Err(AptError::InvalidArgument(format!(
            "expand position {position} outside 1..={} or empty mode",
            d + 1
        )));
    }
    let bond = t.bond_dims()[position - 1];
    let mut id = Array3::<f64>::zeros((bond, m, bond));
    for a in 0..bond {
        for j in 0..m {
            id[[a, j, a]] = 1.0;
        }
    }
    let mut cores = t.cores().to_vec();
    cores.insert(position - 1, id);
    TtTensor::new(cores)
}
