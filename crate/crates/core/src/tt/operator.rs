use ndarray::{s, Array2, Array3, Array4, Axis};

use super::dense::{increment, DenseTensor};
use super::tensor::TtTensor;
use crate::error::{AptError, Result};
use crate::par;

/// A linear operator in TT (matrix-product) format.
///
/// Core `k` has shape `(s_k, n_k, n_k, s_{k+1})`, indexed as
/// `(rank_in, output, input, rank_out)`.
#[derive(Debug, Clone)]
pub struct TtOperator {
    cores: Vec<Array4<f64>>,
}

/// One structurally nonzero entry of an operator core.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpEntry {
    pub s: usize,
    pub i: usize,
    pub j: usize,
    pub t: usize,
    pub w: f64,
}

/// Nonzero listing of an operator core. Entries below
/// `1e-15 * max|core|` are dropped.
#[derive(Debug, Clone)]
pub struct SparseCore {
    pub dims: (usize, usize, usize, usize),
    pub entries: Vec<OpEntry>,
}

impl SparseCore {
    pub fn from_core(core: &Array4<f64>) -> Self {
        let max = core.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cut = 1e-15 * max;
        let mut entries = Vec::new();
        for ((s, i, j, t), &w) in core.indexed_iter() {
            if w != 0.0 && w.abs() > cut {
                entries.push(OpEntry { s, i, j, t, w });
            }
        }
        Self {
            dims: core.dim(),
            entries,
        }
    }
}

impl TtOperator {
    pub fn new(cores: Vec<Array4<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(AptError::InvalidArgument("an operator needs at least one core".into()));
        }
        if cores[0].dim().0 != 1 || cores[cores.len() - 1].dim().3 != 1 {
            return Err(AptError::InvalidArgument("boundary operator ranks must be 1".into()));
        }
        for pair in cores.windows(2) {
            if pair[0].dim().3 != pair[1].dim().0 {
                return Err(AptError::InvalidArgument(format!(
                    "operator cores do not chain: {:?} then {:?}",
                    pair[0].dim(),
                    pair[1].dim()
                )));
            }
        }
        if cores.iter().any(|c| c.dim().1 != c.dim().2) {
            return Err(AptError::InvalidArgument("operator cores must be square".into()));
        }
        Ok(Self { cores })
    }

    pub fn identity(modes: &[usize]) -> Self {
        let cores = modes
            .iter()
            .map(|&n| {
                let mut c = Array4::zeros((1, n, n, 1));
                for i in 0..n {
                    c[[0, i, i, 0]] = 1.0;
                }
                c
            })
            .collect();
        Self { cores }
    }

    /// Kronecker product of square matrices, one per mode.
    pub fn kron(factors: &[Array2<f64>]) -> Result<Self> {
        let cores = factors
            .iter()
            .map(|f| {
                if f.nrows() != f.ncols() {
                    return Err(AptError::InvalidArgument("Kronecker factors must be square".into()));
                }
                let n = f.nrows();
                Ok(f.to_owned().into_shape_with_order((1, n, n, 1))?)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    /// Sum of Kronecker products with block-diagonal cores. Each term holds
    /// one square matrix per mode.
    pub fn from_kron_terms(terms: &[Vec<Array2<f64>>]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| AptError::InvalidArgument("no Kronecker terms".into()))?;
        let d = first.len();
        let modes: Vec<usize> = first.iter().map(|m| m.nrows()).collect();
        for term in terms {
            let tm: Vec<usize> = term.iter().map(|m| m.nrows()).collect();
            if tm != modes || term.iter().any(|m| m.nrows() != m.ncols()) {
                return Err(AptError::InvalidArgument(
                    "Kronecker terms must share square mode sizes".into(),
                ));
            }
        }
        let p = terms.len();
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let n = modes[k];
            let (s_in, s_out) = match (k == 0, k == d - 1) {
                (true, true) => (1, 1),
                (true, false) => (1, p),
                (false, true) => (p, 1),
                (false, false) => (p, p),
            };
            let mut c = Array4::zeros((s_in, n, n, s_out));
            for (t, term) in terms.iter().enumerate() {
                let si = if s_in == 1 { 0 } else { t };
                let so = if s_out == 1 { 0 } else { t };
                let mut block = c.slice_mut(s![si, .., .., so]);
                block += &term[k];
            }
            cores.push(c);
        }
        Self::new(cores)
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.cores[1..].iter().map(|c| c.dim().0).collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn cores(&self) -> &[Array4<f64>] {
        &self.cores
    }

    pub fn sparse_cores(&self) -> Vec<SparseCore> {
        self.cores.iter().map(SparseCore::from_core).collect()
    }

    /// Matrix-vector product `self * x` in TT format; ranks multiply.
    pub fn apply(&self, x: &TtTensor) -> Result<TtTensor> {
        if self.mode_sizes() != x.mode_sizes() {
            return Err(AptError::ModeMismatch {
                left: self.mode_sizes(),
                right: x.mode_sizes(),
            });
        }
        let cores = par::map_range(self.order(), |k| {
            let (w, xc) = (&self.cores[k], x.core(k));
            let sparse = SparseCore::from_core(w);
            let (s_in, n, _, s_out) = w.dim();
            let (ra, _, rb) = xc.dim();
            let mut y = Array3::<f64>::zeros((s_in * ra, n, s_out * rb));
            for e in &sparse.entries {
                let src = xc.slice(s![.., e.j, ..]);
                let mut dst = y.slice_mut(s![e.s * ra..(e.s + 1) * ra, e.i, e.t * rb..(e.t + 1) * rb]);
                dst.scaled_add(e.w, &src);
            }
            y
        });
        TtTensor::new(cores)
    }

    /// Rounds the operator as a TT tensor over merged `(output, input)` modes.
    pub fn round(&self, eps: f64) -> Self {
        let merged = TtTensor::from_cores_unchecked(
            self.cores
                .iter()
                .map(|c| {
                    let (a, n, m, b) = c.dim();
                    c.to_shape((a, n * m, b)).expect("contiguous").to_owned()
                })
                .collect(),
        );
        let rounded = merged.round(eps);
        let cores = rounded
            .into_cores()
            .into_iter()
            .zip(self.mode_sizes())
            .map(|(c, n)| {
                let (a, _, b) = c.dim();
                c.as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((a, n, n, b))
                    .expect("reshape")
            })
            .collect();
        Self { cores }
    }

    pub fn add(&self, other: &TtOperator) -> Result<Self> {
        if self.mode_sizes() != other.mode_sizes() {
            return Err(AptError::ModeMismatch {
                left: self.mode_sizes(),
                right: other.mode_sizes(),
            });
        }
        let d = self.order();
        if d == 1 {
            return Self::new(vec![&self.cores[0] + &other.cores[0]]);
        }
        let mut cores = Vec::with_capacity(d);
        for (k, (a, b)) in self.cores.iter().zip(&other.cores).enumerate() {
            let (sa, n, _, sa2) = a.dim();
            let (sb, _, _, sb2) = b.dim();
            let core = if k == 0 {
                ndarray::concatenate(Axis(3), &[a.view(), b.view()])?
            } else if k == d - 1 {
                ndarray::concatenate(Axis(0), &[a.view(), b.view()])?
            } else {
                let mut c = Array4::zeros((sa + sb, n, n, sa2 + sb2));
                c.slice_mut(s![..sa, .., .., ..sa2]).assign(a);
                c.slice_mut(s![sa.., .., .., sa2..]).assign(b);
                c
            };
            cores.push(core);
        }
        Self::new(cores)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut cores = self.cores.clone();
        cores[0] *= c;
        Self { cores }
    }

    /// Dense `N x N` matrix with row-major multi-indices.
    pub fn to_dense_matrix(&self) -> Array2<f64> {
        let modes = self.mode_sizes();
        let total: usize = modes.iter().product();
        let d = modes.len();
        let mut out = Array2::zeros((total, total));
        // accumulate row blocks over the merged (output, input) index pairs
        let merged: Vec<Array3<f64>> = self
            .cores
            .iter()
            .map(|c| {
                let (a, n, m, b) = c.dim();
                c.to_shape((a, n * m, b)).expect("contiguous").to_owned()
            })
            .collect();
        let dense = TtTensor::from_cores_unchecked(merged).to_dense();
        let shape: Vec<usize> = modes.iter().map(|n| n * n).collect();
        let mut idx = vec![0usize; d];
        for &v in dense.data() {
            let (mut row, mut col) = (0, 0);
            for k in 0..d {
                row = row * modes[k] + idx[k] / modes[k];
                col = col * modes[k] + idx[k] % modes[k];
            }
            out[[row, col]] = v;
            increment(&mut idx, &shape);
        }
        out
    }

    /// Dense matrix-vector product, for tests.
    pub fn apply_dense(&self, x: &DenseTensor) -> Result<DenseTensor> {
        if x.shape() != self.mode_sizes().as_slice() {
            return Err(AptError::ModeMismatch {
                left: self.mode_sizes(),
                right: x.shape().to_vec(),
            });
        }
        let m = self.to_dense_matrix();
        let v = ndarray::ArrayView1::from(x.data());
        DenseTensor::new(x.shape().to_vec(), m.dot(&v).to_vec())
    }
}
