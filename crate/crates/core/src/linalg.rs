//! Dense linear-algebra building blocks: truncated SVD, thin QR, a restarted
//! GMRES and the randomized range finder used for large two-site splits.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use ndarray_linalg::{JobSvd, Solve, QR, SVDDC};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AptError, Result};

/// Thin SVD `a = u * diag(s) * vt`.
pub fn svd_thin(a: ArrayView2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, s, vt) = a.svddc(JobSvd::Some)?;
    let u = u.ok_or_else(|| AptError::Linalg("svd returned no U".into()))?;
    let vt = vt.ok_or_else(|| AptError::Linalg("svd returned no V^T".into()))?;
    Ok((u, s, vt))
}

/// Smallest rank whose discarded tail has Frobenius norm strictly below
/// `tol_abs`. A singular value sitting exactly on the threshold is kept.
/// Never returns less than one.
pub fn truncation_rank(s: &[f64], tol_abs: f64, max_rank: Option<usize>) -> usize {
    let tol2 = tol_abs * tol_abs;
    let mut rank = s.len();
    let mut tail = 0.0;
    while rank > 1 {
        let next = tail + s[rank - 1] * s[rank - 1];
        if next < tol2 {
            tail = next;
            rank -= 1;
        } else {
            break;
        }
    }
    match max_rank {
        Some(cap) => rank.min(cap.max(1)),
        None => rank,
    }
}

/// Truncated SVD with absolute Frobenius tolerance on the discarded part.
pub fn truncated_svd(
    a: ArrayView2<f64>,
    tol_abs: f64,
    max_rank: Option<usize>,
) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, s, vt) = svd_thin(a)?;
    let k = truncation_rank(s.as_slice().expect("contiguous"), tol_abs, max_rank);
    Ok((
        u.slice(s![.., ..k]).to_owned(),
        s.slice(s![..k]).to_owned(),
        vt.slice(s![..k, ..]).to_owned(),
    ))
}

/// Thin QR. For a tall `p x q` matrix returns `q: p x q`, `r: q x q`; for a
/// wide one `q: p x p`, `r: p x q`.
pub fn qr_thin(a: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
    let (q, r) = a.qr()?;
    Ok((q, r))
}

/// Dense solve `a x = b`; reports singular pivots as `None`.
pub fn dense_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let x = a.solve(b).ok()?;
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Size above which [`truncated_split`] switches to the randomized range finder.
pub const RANDOMIZED_SPLIT_MIN: usize = 320;

/// Low-rank split `a ~= u * diag(s) * vt` with `||a - u s vt||_F < tol_abs`.
///
/// Small matrices go through a full SVD. Large ones use an adaptive randomized
/// range finder: the range error is measured explicitly and the sketch grows
/// until it fits inside the budget, so the bound holds exactly as for the
/// full SVD. The sketch is seeded from the matrix shape, keeping runs
/// deterministic.
pub fn truncated_split(
    a: ArrayView2<f64>,
    tol_abs: f64,
    max_rank: Option<usize>,
    rank_hint: usize,
) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (p, q) = a.dim();
    let full = p.min(q);
    if full <= RANDOMIZED_SPLIT_MIN {
        return truncated_svd(a, tol_abs, max_rank);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(((p as u64) << 32) ^ q as u64 ^ 0x5eed);
    let mut k = (rank_hint + 10).min(full);
    loop {
        if 2 * k >= full {
            return truncated_svd(a, tol_abs, max_rank);
        }
        let omega = Array2::from_shape_fn((q, k), |_| rng.random::<f64>() - 0.5);
        let y = a.dot(&omega);
        let (qy, _) = qr_thin(y.view())?;
        // one power iteration sharpens the basis for slowly decaying spectra
        let z = a.t().dot(&qy);
        let (qz, _) = qr_thin(z.view())?;
        let y = a.dot(&qz);
        let (basis, _) = qr_thin(y.view())?;
        let coeff = basis.t().dot(&a);
        let mut resid = a.to_owned();
        resid -= &basis.dot(&coeff);
        let range_err = frob(resid.view());
        if range_err < 0.5 * tol_abs {
            let budget = (tol_abs * tol_abs - range_err * range_err).sqrt();
            let (uc, sc, vtc) = truncated_svd(coeff.view(), budget, max_rank)?;
            return Ok((basis.dot(&uc), sc, vtc));
        }
        k *= 2;
    }
}

pub fn frob(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Result of an iterative solve.
#[derive(Debug, Clone, Copy)]
pub struct KrylovOutcome {
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
///
/// Solves `A x = b` in place, starting from the incoming `x`, until the true
/// residual norm drops below `tol_abs` or `max_iter` inner iterations are used.
pub fn gmres<F>(mut apply: F, b: &[f64], x: &mut [f64], tol_abs: f64, restart: usize, max_iter: usize) -> KrylovOutcome
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let restart = restart.max(1).min(n.max(1));
    let mut work = vec![0.0; n];
    let mut iterations = 0;
    let mut residual;
    loop {
        apply(x, &mut work);
        let r: Vec<f64> = b.iter().zip(&work).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        residual = beta;
        if beta <= tol_abs || iterations >= max_iter {
            return KrylovOutcome {
                residual,
                iterations,
                converged: beta <= tol_abs,
            };
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(restart + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut hess = Array2::<f64>::zeros((restart + 1, restart));
        let mut cs = vec![0.0; restart];
        let mut sn = vec![0.0; restart];
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut used = 0;
        for j in 0..restart {
            let mut w = vec![0.0; n];
            apply(&basis[j], &mut w);
            iterations += 1;
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                hess[[i, j]] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let hn = norm2(&w);
            hess[[j + 1, j]] = hn;
            for i in 0..j {
                let t = cs[i] * hess[[i, j]] + sn[i] * hess[[i + 1, j]];
                hess[[i + 1, j]] = -sn[i] * hess[[i, j]] + cs[i] * hess[[i + 1, j]];
                hess[[i, j]] = t;
            }
            let (a, bb) = (hess[[j, j]], hess[[j + 1, j]]);
            let den = a.hypot(bb);
            if den == 0.0 {
                cs[j] = 1.0;
                sn[j] = 0.0;
            } else {
                cs[j] = a / den;
                sn[j] = bb / den;
            }
            hess[[j, j]] = den;
            hess[[j + 1, j]] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            used = j + 1;
            let breakdown = hn <= 1e-300;
            if !breakdown {
                basis.push(w.iter().map(|v| v / hn).collect());
            }
            if g[j + 1].abs() <= 0.5 * tol_abs || breakdown || iterations >= max_iter {
                break;
            }
        }
        // back substitution on the triangular part
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let mut acc = g[i];
            for k in i + 1..used {
                acc -= hess[[i, k]] * y[k];
            }
            y[i] = if hess[[i, i]] != 0.0 { acc / hess[[i, i]] } else { 0.0 };
        }
        for (k, yk) in y.iter().enumerate() {
            x.iter_mut().zip(&basis[k]).for_each(|(xi, vi)| *xi += yk * vi);
        }
    }
}

/// Column-wise concatenation helper for `[a | b]`.
pub fn hstack(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[a, b]).expect("row counts agree")
}
