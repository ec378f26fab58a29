//! Two-site alternating (MALS) solver for `A x = r` with `A` and `r` in TT form.
//!
//! Each bond update restricts the system to the span of the current
//! orthonormal interface bases (Galerkin projection), solves the resulting
//! two-core problem and splits the merged block back into two cores by a
//! truncated SVD.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, Array3, ArrayView2, ArrayViewMut2};

use crate::error::{AptError, Result};
use crate::linalg::{dense_solve, gmres, norm2, truncated_split};
use crate::tt::{right_orthogonalize, to_core, SparseCore, TtOperator, TtTensor};

#[derive(Debug, Clone, PartialEq)]
pub struct MalsSettings {
    /// Absolute Frobenius tolerance on `||A x - r||`.
    pub eps_d: f64,
    /// Directional passes over all bonds before giving up.
    pub max_sweeps: usize,
    /// Relative tolerance for splitting the optimized two-site block.
    pub local_trunc: f64,
    pub max_local_rank: Option<usize>,
    /// Local systems up to this size are solved by dense LU, larger ones by GMRES.
    pub dense_local_max: usize,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
}

impl MalsSettings {
    pub fn new(eps_d: f64) -> Self {
        Self {
            eps_d,
            max_sweeps: 20,
            local_trunc: 1e-10,
            max_local_rank: None,
            dense_local_max: 1024,
            gmres_restart: 40,
            gmres_max_iter: 400,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_d > 0.0) {
            return Err(AptError::InvalidArgument(format!(
                "eps_d must be positive, got {}",
                self.eps_d
            )));
        }
        if self.max_sweeps == 0 {
            return Err(AptError::InvalidArgument("max_sweeps must be at least 1".into()));
        }
        if !(self.local_trunc >= 0.0 && self.local_trunc < 1.0) {
            return Err(AptError::InvalidArgument(format!(
                "local_trunc must lie in [0, 1), got {}",
                self.local_trunc
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MalsReport {
    pub sweeps_used: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Ranks of the iterate after each sweep.
    pub rank_history: Vec<Vec<usize>>,
    /// Residual before the first sweep followed by one value per sweep.
    pub residual_history: Vec<f64>,
}

/// `||A x - r||_F`, evaluated in TT form.
pub fn residual_norm(a: &TtOperator, x: &TtTensor, r: &TtTensor) -> Result<f64> {
    Ok(a.apply(x)?.sub(r)?.norm())
}

/// Solves `a x = r` starting from `x0`.
///
/// Returns the best iterate found. When the tolerance is not met within
/// `max_sweeps`, the report says so and the caller decides what to do.
pub fn mals_solve(
    a: &TtOperator,
    r: &TtTensor,
    x0: &TtTensor,
    settings: &MalsSettings,
) -> Result<(TtTensor, MalsReport)> {
    settings.validate()?;
    let modes = a.mode_sizes();
    if modes != r.mode_sizes() || modes != x0.mode_sizes() {
        return Err(AptError::ModeMismatch {
            left: modes,
            right: if r.mode_sizes() != a.mode_sizes() {
                r.mode_sizes()
            } else {
                x0.mode_sizes()
            },
        });
    }
    let mut report = MalsReport::default();
    let res0 = residual_norm(a, x0, r)?;
    report.residual_history.push(res0);
    report.final_residual = res0;
    if res0 <= settings.eps_d {
        report.converged = true;
        report.rank_history.push(x0.ranks());
        return Ok((x0.clone(), report));
    }
    if x0.order() == 1 {
        return solve_single_site(a, r, settings, report);
    }

    let mut solver = Sweeper::new(a, r, x0, settings);
    let mut best = (x0.clone(), res0);
    let mut forward = true;
    for sweep in 1..=settings.max_sweeps {
        if forward {
            solver.forward_pass()?;
        } else {
            solver.backward_pass()?;
        }
        forward = !forward;
        let x = solver.current();
        let res = residual_norm(a, &x, r)?;
        report.sweeps_used = sweep;
        report.residual_history.push(res);
        report.rank_history.push(x.ranks());
        log::debug!("mals sweep {sweep}: residual {res:e}, ranks {:?}", x.ranks());
        let prev = report.residual_history[report.residual_history.len() - 2];
        let stalled = res > STALL_FACTOR * prev;
        if res < best.1 {
            best = (x, res);
        }
        if res <= settings.eps_d {
            break;
        }
        if stalled && sweep < settings.max_sweeps {
            // two-site updates can get stuck when a bond of the iterate is too
            // thin; one minimal-residual step along the residual widens it
            let kicked = enrich(a, r, &best.0, settings)?;
            log::debug!("mals sweep {sweep}: stalled, enriched to ranks {:?}", kicked.ranks());
            solver = Sweeper::new(a, r, &kicked, settings);
            forward = true;
        }
    }
    report.final_residual = best.1;
    report.converged = best.1 <= settings.eps_d;
    Ok((best.0, report))
}

/// A sweep counts as stalled when it removes less than half the residual.
const STALL_FACTOR: f64 = 0.5;
/// Rank cap for the residual correction added on a stall.
const ENRICH_RANK: usize = 4;

fn enrich(a: &TtOperator, r: &TtTensor, x: &TtTensor, settings: &MalsSettings) -> Result<TtTensor> {
    let resid = r.sub(&a.apply(x)?)?;
    let z = resid.round_with(1e-2, Some(ENRICH_RANK));
    let az = a.apply(&z)?;
    let den = az.dot(&az)?;
    if !(den > 0.0) {
        return Ok(x.clone());
    }
    let alpha = az.dot(&resid)? / den;
    Ok(x.add(&z.scaled(alpha))?.round(settings.local_trunc))
}

fn solve_single_site(
    a: &TtOperator,
    r: &TtTensor,
    settings: &MalsSettings,
    mut report: MalsReport,
) -> Result<(TtTensor, MalsReport)> {
    let m = a.to_dense_matrix();
    let b = ndarray::Array1::from(r.to_dense().into_data());
    let x = dense_solve(&m, &b).ok_or(AptError::SingularLocal { bond: 0 })?;
    let x = TtTensor::rank_one(&[x.to_vec()]);
    let res = residual_norm(a, &x, r)?;
    report.sweeps_used = 1;
    report.residual_history.push(res);
    report.rank_history.push(vec![]);
    report.final_residual = res;
    report.converged = res <= settings.eps_d;
    Ok((x, report))
}

/// Mutable sweep state: the iterate plus cached interface projections.
struct Sweeper<'a> {
    settings: &'a MalsSettings,
    ops: Vec<SparseCore>,
    rhs: &'a TtTensor,
    x: Vec<Array3<f64>>,
    /// `la[k]`: projection of `A` onto cores `0..k`, shape `(r_k, s_k, r_k)`.
    la: Vec<Array3<f64>>,
    /// `ra[k]`: projection of `A` onto cores `k..d`, shape `(r_k, s_k, r_k)`.
    ra: Vec<Array3<f64>>,
    /// `ly[k]`: projection of the right-hand side onto cores `0..k`, `(r_k, q_k)`.
    ly: Vec<Array2<f64>>,
    ry: Vec<Array2<f64>>,
}

impl<'a> Sweeper<'a> {
    fn new(a: &'a TtOperator, rhs: &'a TtTensor, x0: &TtTensor, settings: &'a MalsSettings) -> Self {
        let d = x0.order();
        let mut x = x0.cores().to_vec();
        right_orthogonalize(&mut x, 1);
        let ops = a.sparse_cores();
        let ones3 = Array3::<f64>::ones((1, 1, 1));
        let ones2 = Array2::<f64>::ones((1, 1));
        let mut sw = Self {
            settings,
            ops,
            rhs,
            x,
            la: vec![ones3.clone(); d + 1],
            ra: vec![ones3; d + 1],
            ly: vec![ones2.clone(); d + 1],
            ry: vec![ones2; d + 1],
        };
        for k in (1..d).rev() {
            sw.update_right(k);
        }
        sw
    }

    fn current(&self) -> TtTensor {
        TtTensor::new(self.x.clone()).expect("sweeps keep cores chained")
    }

    fn forward_pass(&mut self) -> Result<()> {
        let d = self.x.len();
        for k in 0..d - 1 {
            let w = self.solve_pair(k)?;
            self.split(k, w, true)?;
            self.update_left(k);
        }
        Ok(())
    }

    fn backward_pass(&mut self) -> Result<()> {
        let d = self.x.len();
        for k in (0..d - 1).rev() {
            let w = self.solve_pair(k)?;
            self.split(k, w, false)?;
            self.update_right(k + 1);
        }
        Ok(())
    }

    fn solve_pair(&self, k: usize) -> Result<Vec<f64>> {
        let (r, n, _) = self.x[k].dim();
        let (_, n2, r2) = self.x[k + 1].dim();
        let local = LocalOperator {
            la: &self.la[k],
            w1: &self.ops[k],
            w2: &self.ops[k + 1],
            ra: &self.ra[k + 2],
            dims: (r, n, n2, r2),
        };
        let b = self.local_rhs(k);
        let dim = b.len();
        let mut x = merge_pair(&self.x[k], &self.x[k + 1]);
        if dim <= self.settings.dense_local_max {
            let mat = local.assemble();
            let sol = dense_solve(&mat, &ndarray::Array1::from(b)).ok_or(AptError::SingularLocal { bond: k + 1 })?;
            x = sol.to_vec();
        } else {
            let tol = 0.1 * self.settings.eps_d;
            let out = gmres(
                |v, y| local.apply(v, y),
                &b,
                &mut x,
                tol,
                self.settings.gmres_restart,
                self.settings.gmres_max_iter,
            );
            if !out.converged {
                log::debug!(
                    "local GMRES at bond {} stopped at residual {:e} after {} iterations",
                    k + 1,
                    out.residual,
                    out.iterations
                );
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(AptError::SingularLocal { bond: k + 1 });
        }
        Ok(x)
    }

    fn split(&mut self, k: usize, w: Vec<f64>, left_orthonormal: bool) -> Result<()> {
        let (r, n, old_rank) = self.x[k].dim();
        let (_, n2, r2) = self.x[k + 1].dim();
        let mat = Array2::from_shape_vec((r * n, n2 * r2), w)?;
        let tol = self.settings.local_trunc * norm2(mat.as_slice().expect("contiguous"));
        let (u, sv, vt) = truncated_split(mat.view(), tol, self.settings.max_local_rank, old_rank)?;
        let rank = sv.len();
        let (mut u, mut vt) = (u, vt);
        if left_orthonormal {
            for (mut row, &sk) in vt.outer_iter_mut().zip(sv.iter()) {
                row *= sk;
            }
        } else {
            for (mut col, &sk) in u.columns_mut().into_iter().zip(sv.iter()) {
                col *= sk;
            }
        }
        self.x[k] = to_core(u, (r, n, rank));
        self.x[k + 1] = to_core(vt, (rank, n2, r2));
        Ok(())
    }

    fn local_rhs(&self, k: usize) -> Vec<f64> {
        let y1 = self.rhs.core(k);
        let y2 = self.rhs.core(k + 1);
        let (q, n, q1) = y1.dim();
        let (_, n2, q2) = y2.dim();
        let ly = &self.ly[k];
        let ry = &self.ry[k + 2];
        let r = ly.nrows();
        let t = ly.dot(&y1.to_shape((q, n * q1)).expect("contiguous"));
        let t = t
            .to_shape((r * n, q1))
            .expect("sized")
            .dot(&y2.to_shape((q1, n2 * q2)).expect("contiguous"));
        let t = t.to_shape((r * n * n2, q2)).expect("sized").dot(&ry.t());
        t.as_standard_layout().iter().copied().collect()
    }

    /// Projects through core `k` (left-orthonormal) into `la[k + 1]`, `ly[k + 1]`.
    fn update_left(&mut self, k: usize) {
        let x = &self.x[k];
        let (r, n, r2) = x.dim();
        let la = &self.la[k];
        let op = &self.ops[k];
        let (s, _, _, s2) = op.dims;
        let xm = x.to_shape((r, n * r2)).expect("contiguous");
        // p[σ, a, j, b'] = Σ_a' la[a, σ, a'] x[a', j, b']
        let mut p = vec![0.0; s * r * n * r2];
        for sg in 0..s {
            let mut out =
                ArrayViewMut2::from_shape((r, n * r2), &mut p[sg * r * n * r2..(sg + 1) * r * n * r2]).expect("sized");
            general_mat_mul(1.0, &la.slice(s![.., sg, ..]), &xm, 0.0, &mut out);
        }
        // q[τ, a, i, b'] = Σ w[σ, i, j, τ] p[σ, a, j, b']
        let mut q = vec![0.0; s2 * r * n * r2];
        for e in &op.entries {
            for a in 0..r {
                let src = ((e.s * r + a) * n + e.j) * r2;
                let dst = ((e.t * r + a) * n + e.i) * r2;
                axpy(e.w, &p[src..src + r2], &mut q, dst);
            }
        }
        let xl = x.to_shape((r * n, r2)).expect("contiguous");
        let mut next = Array3::<f64>::zeros((r2, s2, r2));
        for t in 0..s2 {
            let qt = ArrayView2::from_shape((r * n, r2), &q[t * r * n * r2..(t + 1) * r * n * r2]).expect("sized");
            next.slice_mut(s![.., t, ..]).assign(&xl.t().dot(&qt));
        }
        self.la[k + 1] = next;

        let y = self.rhs.core(k);
        let (qd, _, q2) = y.dim();
        let t = self.ly[k].dot(&y.to_shape((qd, n * q2)).expect("contiguous"));
        let t = t.to_shape((r * n, q2)).expect("sized");
        self.ly[k + 1] = xl.t().dot(&t);
    }

    /// Projects through core `k` (right-orthonormal) into `ra[k]`, `ry[k]`.
    fn update_right(&mut self, k: usize) {
        let x = &self.x[k];
        let (r, n, r2) = x.dim();
        let ra = &self.ra[k + 1];
        let op = &self.ops[k];
        let (s, _, _, s2) = op.dims;
        let xl = x.to_shape((r * n, r2)).expect("contiguous");
        // p[τ, a', j, b] = Σ_b' x[a', j, b'] ra[b, τ, b']
        let mut p = vec![0.0; s2 * r * n * r2];
        for t in 0..s2 {
            let mut out =
                ArrayViewMut2::from_shape((r * n, r2), &mut p[t * r * n * r2..(t + 1) * r * n * r2]).expect("sized");
            general_mat_mul(1.0, &xl, &ra.slice(s![.., t, ..]).t(), 0.0, &mut out);
        }
        // q[σ, a', i, b] = Σ w[σ, i, j, τ] p[τ, a', j, b]
        let mut q = vec![0.0; s * r * n * r2];
        for e in &op.entries {
            for a in 0..r {
                let src = ((e.t * r + a) * n + e.j) * r2;
                let dst = ((e.s * r + a) * n + e.i) * r2;
                axpy(e.w, &p[src..src + r2], &mut q, dst);
            }
        }
        let xm = x.to_shape((r, n * r2)).expect("contiguous");
        let mut next = Array3::<f64>::zeros((r, s, r));
        for sg in 0..s {
            let qs = ArrayView2::from_shape((r, n * r2), &q[sg * r * n * r2..(sg + 1) * r * n * r2]).expect("sized");
            next.slice_mut(s![.., sg, ..]).assign(&xm.dot(&qs.t()));
        }
        self.ra[k] = next;

        let y = self.rhs.core(k);
        let (qd, _, q2) = y.dim();
        let t = y.to_shape((qd * n, q2)).expect("contiguous").dot(&self.ry[k + 1].t());
        let t = t.to_shape((qd, n * r2)).expect("sized");
        self.ry[k] = xm.dot(&t.t());
    }
}

fn axpy(w: f64, src: &[f64], dst: &mut [f64], offset: usize) {
    for (d, s) in dst[offset..offset + src.len()].iter_mut().zip(src) {
        *d += w * s;
    }
}

fn merge_pair(a: &Array3<f64>, b: &Array3<f64>) -> Vec<f64> {
    let (r, n, k) = a.dim();
    let (_, n2, r2) = b.dim();
    let m = a
        .to_shape((r * n, k))
        .expect("contiguous")
        .dot(&b.to_shape((k, n2 * r2)).expect("contiguous"));
    m.as_standard_layout().iter().copied().collect()
}

/// Projected two-site operator, applied matrix-free.
struct LocalOperator<'a> {
    la: &'a Array3<f64>,
    w1: &'a SparseCore,
    w2: &'a SparseCore,
    ra: &'a Array3<f64>,
    dims: (usize, usize, usize, usize),
}

impl LocalOperator<'_> {
    fn len(&self) -> usize {
        let (r, n, n2, r2) = self.dims;
        r * n * n2 * r2
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (r, n, n2, r2) = self.dims;
        let s = self.w1.dims.0;
        let t_dim = self.w1.dims.3;
        let u_dim = self.w2.dims.3;
        let rest = n2 * r2;
        let block = r * n * rest;
        let xm = ArrayView2::from_shape((r, n * rest), x).expect("sized");
        let mut t1 = vec![0.0; s * block];
        for sg in 0..s {
            let mut out =
                ArrayViewMut2::from_shape((r, n * rest), &mut t1[sg * block..(sg + 1) * block]).expect("sized");
            general_mat_mul(1.0, &self.la.slice(s![.., sg, ..]), &xm, 0.0, &mut out);
        }
        let mut t2 = vec![0.0; t_dim * block];
        for e in &self.w1.entries {
            for a in 0..r {
                let src = ((e.s * r + a) * n + e.j) * rest;
                let dst = ((e.t * r + a) * n + e.i) * rest;
                axpy(e.w, &t1[src..src + rest], &mut t2, dst);
            }
        }
        let mut t3 = vec![0.0; u_dim * block];
        for e in &self.w2.entries {
            for ai in 0..r * n {
                let src = ((e.s * r * n + ai) * n2 + e.j) * r2;
                let dst = ((e.t * r * n + ai) * n2 + e.i) * r2;
                axpy(e.w, &t2[src..src + r2], &mut t3, dst);
            }
        }
        let mut out = ArrayViewMut2::from_shape((r * n * n2, r2), y).expect("sized");
        out.fill(0.0);
        for u in 0..u_dim {
            let tu = ArrayView2::from_shape((r * n * n2, r2), &t3[u * block..(u + 1) * block]).expect("sized");
            general_mat_mul(1.0, &tu, &self.ra.slice(s![.., u, ..]).t(), 1.0, &mut out);
        }
    }

    fn assemble(&self) -> Array2<f64> {
        let dim = self.len();
        let mut mat = Array2::<f64>::zeros((dim, dim));
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            self.apply(&e, &mut col);
            mat.column_mut(j).assign(&ndarray::ArrayView1::from(&col));
            e[j] = 0.0;
        }
        mat
    }
}
