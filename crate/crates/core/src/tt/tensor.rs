use std::fmt::Write as _;

use ndarray::{s, Array2, Array3, ArrayView2, Axis};

use super::dense::DenseTensor;
use crate::error::{AptError, Result};
use crate::linalg::{qr_thin, truncated_svd};

/// A tensor in tensor-train format.
///
/// Core `k` has shape `(r_k, n_k, r_{k+1})` with `r_0 = r_d = 1`, and an entry
/// is the chained product of the matching core slices.
#[derive(Debug, Clone)]
pub struct TtTensor {
    cores: Vec<Array3<f64>>,
}

impl TtTensor {
    pub fn new(cores: Vec<Array3<f64>>) -> Result<Self> {
        if cores.is_empty() {
            return Err(AptError::InvalidArgument("a TT tensor needs at least one core".into()));
        }
        let first = cores[0].dim().0;
        let last = cores[cores.len() - 1].dim().2;
        if first != 1 || last != 1 {
            return Err(AptError::InvalidArgument(format!(
                "boundary ranks must be 1, got {first} and {last}"
            )));
        }
        for (k, pair) in cores.windows(2).enumerate() {
            if pair[0].dim().2 != pair[1].dim().0 {
                return Err(AptError::InvalidArgument(format!(
                    "cores {k} and {} do not chain: {:?} then {:?}",
                    k + 1,
                    pair[0].dim(),
                    pair[1].dim()
                )));
            }
        }
        if cores.iter().any(|c| c.dim().1 == 0 || c.dim().0 == 0 || c.dim().2 == 0) {
            return Err(AptError::InvalidArgument("empty core dimension".into()));
        }
        Ok(Self { cores })
    }

    pub(crate) fn from_cores_unchecked(cores: Vec<Array3<f64>>) -> Self {
        debug_assert!(Self::new(cores.clone()).is_ok());
        Self { cores }
    }

    /// Rank-one zero tensor.
    pub fn zeros(modes: &[usize]) -> Self {
        Self {
            cores: modes.iter().map(|&n| Array3::zeros((1, n, 1))).collect(),
        }
    }

    pub fn ones(modes: &[usize]) -> Self {
        Self {
            cores: modes.iter().map(|&n| Array3::ones((1, n, 1))).collect(),
        }
    }

    /// Outer product of the given vectors.
    pub fn rank_one(factors: &[Vec<f64>]) -> Self {
        Self {
            cores: factors
                .iter()
                .map(|f| Array3::from_shape_vec((1, f.len(), 1), f.clone()).expect("1 x n x 1"))
                .collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.dim().1).collect()
    }

    /// Interior TT-ranks `(r_1, ..., r_{d-1})`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[1..].iter().map(|c| c.dim().0).collect()
    }

    /// All bond dimensions including the two boundary ones.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut b: Vec<usize> = self.cores.iter().map(|c| c.dim().0).collect();
        b.push(1);
        b
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn mean_rank(&self) -> f64 {
        let r = self.ranks();
        if r.is_empty() {
            1.0
        } else {
            r.iter().sum::<usize>() as f64 / r.len() as f64
        }
    }

    /// Number of stored floating point values.
    pub fn storage(&self) -> usize {
        self.cores.iter().map(|c| c.len()).sum()
    }

    pub fn cores(&self) -> &[Array3<f64>] {
        &self.cores
    }

    pub fn core(&self, k: usize) -> &Array3<f64> {
        &self.cores[k]
    }

    pub fn into_cores(self) -> Vec<Array3<f64>> {
        self.cores
    }

    pub fn eval(&self, idx: &[usize]) -> f64 {
        assert_eq!(idx.len(), self.order());
        let mut row = vec![1.0];
        for (core, &i) in self.cores.iter().zip(idx) {
            let slice = core.slice(s![.., i, ..]);
            let mut next = vec![0.0; slice.dim().1];
            for (a, &ra) in row.iter().enumerate() {
                for (b, nb) in next.iter_mut().enumerate() {
                    *nb += ra * slice[[a, b]];
                }
            }
            row = next;
        }
        row[0]
    }

    /// Densifies in row-major order. Intended for tests and small grids.
    pub fn to_dense(&self) -> DenseTensor {
        let mut acc = Array2::<f64>::ones((1, 1));
        for core in &self.cores {
            let (r, n, r2) = core.dim();
            let unfolded = core.to_shape((r, n * r2)).expect("contiguous core");
            let prod = acc.dot(&unfolded);
            let rows = prod.nrows() * n;
            acc = prod
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((rows, r2))
                .expect("row-major reshape");
        }
        let shape = self.mode_sizes();
        DenseTensor::new(shape, acc.iter().copied().collect()).expect("consistent size")
    }

    /// TT-SVD with prescribed relative accuracy:
    /// `||dense(out) - a||_F <= eps * ||a||_F`, the budget split evenly as
    /// `eps ||a|| / sqrt(d-1)` over the `d-1` sequential unfoldings.
    pub fn from_dense(a: &DenseTensor, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        let modes = a.shape().to_vec();
        let d = modes.len();
        let norm = a.norm();
        if norm == 0.0 {
            return Ok(Self::zeros(&modes));
        }
        if d == 1 {
            return Ok(Self::rank_one(&[a.data().to_vec()]));
        }
        let delta = eps * norm / ((d - 1) as f64).sqrt();
        let mut cores = Vec::with_capacity(d);
        let mut rest = Array2::from_shape_vec((1, a.len()), a.data().to_vec())?;
        let mut r_prev = 1;
        for &n in &modes[..d - 1] {
            let cols = rest.len() / (r_prev * n);
            let unfolding = rest
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((r_prev * n, cols))?;
            let (u, sv, vt) = truncated_svd(unfolding.view(), delta, None)?;
            let rank = sv.len();
            cores.push(to_core(u, (r_prev, n, rank)));
            rest = vt;
            for (mut row, &sk) in rest.axis_iter_mut(Axis(0)).zip(sv.iter()) {
                row *= sk;
            }
            r_prev = rank;
        }
        let n_last = modes[d - 1];
        cores.push(to_core(rest, (r_prev, n_last, 1)));
        Ok(Self { cores })
    }

    /// TT-rounding: right-to-left orthogonalization followed by a truncated
    /// SVD sweep, so that `||dense(out) - dense(self)|| <= eps ||dense(self)||`.
    /// No output rank exceeds the matching input rank.
    pub fn round(&self, eps: f64) -> Self {
        self.round_with(eps, None)
    }

    pub fn round_with(&self, eps: f64, max_rank: Option<usize>) -> Self {
        let d = self.order();
        if d == 1 {
            return self.clone();
        }
        let mut cores = self.cores.clone();
        right_orthogonalize(&mut cores, 1);
        let norm = frob_core(&cores[0]);
        if norm == 0.0 {
            return Self::zeros(&self.mode_sizes());
        }
        let delta = eps.max(0.0) * norm / ((d - 1) as f64).sqrt();
        for k in 0..d - 1 {
            let (r, n, r2) = cores[k].dim();
            let unfolding = cores[k].to_shape((r * n, r2)).expect("contiguous");
            let (u, sv, vt) = truncated_svd(unfolding.view(), delta, max_rank).expect("SVD of a finite core");
            let rank = sv.len();
            cores[k] = to_core(u, (r, n, rank));
            let mut sv_vt = vt;
            for (mut row, &sk) in sv_vt.axis_iter_mut(Axis(0)).zip(sv.iter()) {
                row *= sk;
            }
            cores[k + 1] = absorb_left(sv_vt.view(), &cores[k + 1]);
        }
        Self { cores }
    }

    pub fn add(&self, other: &TtTensor) -> Result<Self> {
        self.check_modes(other)?;
        let d = self.order();
        if d == 1 {
            return Ok(Self {
                cores: vec![&self.cores[0] + &other.cores[0]],
            });
        }
        let mut cores = Vec::with_capacity(d);
        for (k, (a, b)) in self.cores.iter().zip(&other.cores).enumerate() {
            let (ra, n, ra2) = a.dim();
            let (rb, _, rb2) = b.dim();
            let core = if k == 0 {
                ndarray::concatenate(Axis(2), &[a.view(), b.view()])?
            } else if k == d - 1 {
                ndarray::concatenate(Axis(0), &[a.view(), b.view()])?
            } else {
                let mut c = Array3::zeros((ra + rb, n, ra2 + rb2));
                c.slice_mut(s![..ra, .., ..ra2]).assign(a);
                c.slice_mut(s![ra.., .., ra2..]).assign(b);
                c
            };
            cores.push(core);
        }
        Ok(Self { cores })
    }

    pub fn sub(&self, other: &TtTensor) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut cores = self.cores.clone();
        cores[0] *= c;
        Self { cores }
    }

    /// Element-wise product. Output ranks are the products of input ranks.
    pub fn hadamard(&self, other: &TtTensor) -> Result<Self> {
        self.check_modes(other)?;
        let cores = self
            .cores
            .iter()
            .zip(&other.cores)
            .map(|(a, b)| {
                let (ra, n, ra2) = a.dim();
                let (rb, _, rb2) = b.dim();
                Array3::from_shape_fn((ra * rb, n, ra2 * rb2), |(p, i, q)| {
                    a[[p / rb, i, q / rb2]] * b[[p % rb, i, q % rb2]]
                })
            })
            .collect();
        Ok(Self { cores })
    }

    /// Frobenius norm, evaluated through a left-orthogonalizing QR sweep.
    pub fn norm(&self) -> f64 {
        let mut cores = self.cores.clone();
        let d = cores.len();
        left_orthogonalize(&mut cores, d - 1);
        frob_core(&cores[d - 1])
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &TtTensor) -> Result<f64> {
        self.check_modes(other)?;
        let mut env = Array2::<f64>::ones((1, 1));
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let (_, n, ra2) = a.dim();
            let rb2 = b.dim().2;
            let mut next = Array2::<f64>::zeros((ra2, rb2));
            for i in 0..n {
                let ai = a.slice(s![.., i, ..]);
                let bi = b.slice(s![.., i, ..]);
                next += &ai.t().dot(&env.dot(&bi));
            }
            env = next;
        }
        Ok(env[[0, 0]])
    }

    /// Contracts mode `mode` against `weights`, returning a tensor of order
    /// `d - 1` (or a scalar wrapped in a one-entry tensor when `d == 1`).
    pub fn contract_mode(&self, mode: usize, weights: &[f64]) -> Result<Self> {
        let core = &self.cores[mode];
        if weights.len() != core.dim().1 {
            return Err(AptError::InvalidArgument(format!(
                "weights of length {} for mode of size {}",
                weights.len(),
                core.dim().1
            )));
        }
        let mat = contract_core(core, weights);
        let d = self.order();
        if d == 1 {
            return Ok(Self::rank_one(&[vec![mat[[0, 0]]]]));
        }
        let mut cores: Vec<Array3<f64>> = Vec::with_capacity(d - 1);
        for (k, c) in self.cores.iter().enumerate() {
            if k == mode {
                continue;
            }
            cores.push(c.clone());
        }
        if mode + 1 < d {
            cores[mode] = absorb_left(mat.view(), &cores[mode]);
        } else {
            let prev = &cores[mode - 1];
            let (r, n, r2) = prev.dim();
            let m = prev.to_shape((r * n, r2)).expect("contiguous").dot(&mat);
            cores[mode - 1] = to_core(m, (r, n, 1));
        }
        Ok(Self { cores })
    }

    /// Keeps every `stride`-th index along every mode.
    pub fn restrict(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.mode_sizes().iter().any(|n| n % stride != 0) {
            return Err(AptError::InvalidArgument(format!(
                "stride {stride} does not divide mode sizes {:?}",
                self.mode_sizes()
            )));
        }
        let cores = self
            .cores
            .iter()
            .map(|c| c.slice(s![.., ..;stride, ..]).to_owned())
            .collect();
        Ok(Self { cores })
    }

    /// Plain-text listing of core shapes and ranks.
    pub fn describe(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "tt order={} modes={:?} ranks={:?} storage={}",
            self.order(),
            self.mode_sizes(),
            self.ranks(),
            self.storage()
        );
        for (k, c) in self.cores.iter().enumerate() {
            let _ = writeln!(out, "  core {k}: {:?}", c.dim());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.cores.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn check_modes(&self, other: &TtTensor) -> Result<()> {
        let (a, b) = (self.mode_sizes(), other.mode_sizes());
        if a != b {
            return Err(AptError::ModeMismatch { left: a, right: b });
        }
        Ok(())
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(AptError::InvalidArgument(format!(
            "relative tolerance must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

pub(crate) fn frob_core(c: &Array3<f64>) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `mat (p x r) * core (r, n, r2)` as a `(p, n, r2)` core.
pub(crate) fn absorb_left(mat: ArrayView2<f64>, core: &Array3<f64>) -> Array3<f64> {
    let (r, n, r2) = core.dim();
    let unfolded = core.to_shape((r, n * r2)).expect("contiguous");
    let p = mat.nrows();
    to_core(mat.dot(&unfolded), (p, n, r2))
}

/// `core (r, n, r2) * mat (r2 x p)` as a `(r, n, p)` core.
pub(crate) fn absorb_right(core: &Array3<f64>, mat: ArrayView2<f64>) -> Array3<f64> {
    let (r, n, r2) = core.dim();
    let unfolded = core.to_shape((r * n, r2)).expect("contiguous");
    let p = mat.ncols();
    to_core(unfolded.dot(&mat), (r, n, p))
}

/// `sum_i core[:, i, :] * w[i]`.
pub(crate) fn contract_core(core: &Array3<f64>, w: &[f64]) -> Array2<f64> {
    let (r, n, r2) = core.dim();
    let mut out = Array2::zeros((r, r2));
    for i in 0..n {
        if w[i] != 0.0 {
            out.scaled_add(w[i], &core.slice(s![.., i, ..]));
        }
    }
    out
}

/// Makes cores `0..upto` left-orthonormal, pushing the remainder into core `upto`.
pub(crate) fn left_orthogonalize(cores: &mut [Array3<f64>], upto: usize) {
    for k in 0..upto {
        let (r, n, r2) = cores[k].dim();
        let unfolding = cores[k].to_shape((r * n, r2)).expect("contiguous").to_owned();
        let (q, rr) = qr_thin(unfolding.view()).expect("QR of a finite core");
        let rank = q.ncols();
        cores[k] = to_core(q, (r, n, rank));
        cores[k + 1] = absorb_left(rr.view(), &cores[k + 1]);
    }
}

/// Makes cores `from..d` right-orthonormal, pushing the remainder into core `from - 1`.
pub(crate) fn right_orthogonalize(cores: &mut [Array3<f64>], from: usize) {
    let d = cores.len();
    for k in (from.max(1)..d).rev() {
        let (r, n, r2) = cores[k].dim();
        let unfolding = cores[k].to_shape((r, n * r2)).expect("contiguous");
        let transposed = unfolding.t().to_owned();
        let (q, rr) = qr_thin(transposed.view()).expect("QR of a finite core");
        let rank = q.ncols();
        cores[k] = to_core(q.reversed_axes(), (rank, n, r2));
        cores[k - 1] = absorb_right(&cores[k - 1], rr.t());
    }
}

/// Row-major reshape of a matrix of any memory layout into a core.
pub(crate) fn to_core(a: Array2<f64>, shape: (usize, usize, usize)) -> Array3<f64> {
    let a = if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    };
    a.into_shape_with_order(shape).expect("row-major reshape")
}
