//! Dense reference implementation of the same discretization.
//!
//! Works on full phase-space arrays and solves the implicit systems with
//! GMRES to a tight relative tolerance. Stencils come from [`crate::bgk`];
//! everything else (moments, equilibrium, operator application) is literal
//! dense arithmetic. Intended for small grids only.

use crate::bgk::{build_upwind_matrices, fourth_difference, require_positive, BgkConfig, ConservedSums, MacroFields};
use crate::error::{AptError, Result};
use crate::linalg::{gmres, norm2};
use crate::par;
use crate::tt::{increment, DenseTensor};

/// Largest phase-space tensor the oracle accepts.
pub const ORACLE_MAX_ENTRIES: usize = 10_000_000;

/// Relative residual for the implicit solves.
pub const ORACLE_SOLVE_RTOL: f64 = 1e-12;

/// Sparse row form of an `m x m` stencil matrix.
#[derive(Debug, Clone)]
struct SparseRows {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseRows {
    fn from_dense(a: &ndarray::Array2<f64>) -> Self {
        let rows = a
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect()
            })
            .collect();
        Self { rows }
    }
}

/// `out += c * (A applied along mode `mode`) x` for a phase-space array
/// with every mode of size `m`.
fn mode_apply_add(x: &[f64], out: &mut [f64], m: usize, order: usize, mode: usize, a: &SparseRows, c: f64) {
    let inner = m.pow((order - mode - 1) as u32);
    let block = m * inner;
    par::for_each_chunk_mut(out, block, |o, out| {
        let x = &x[o * block..(o + 1) * block];
        for (i, row) in a.rows.iter().enumerate() {
            let dst = &mut out[i * inner..(i + 1) * inner];
            for &(j, w) in row {
                let cw = c * w;
                dst.iter_mut()
                    .zip(&x[j * inner..(j + 1) * inner])
                    .for_each(|(d, s)| *d += cw * s);
            }
        }
    });
}

/// Scales `x` by `diag` along `mode`.
fn mode_scale(x: &mut [f64], m: usize, order: usize, mode: usize, diag: &[f64]) {
    let inner = m.pow((order - mode - 1) as u32);
    par::for_each_chunk_mut(x, m * inner, |_, block| {
        for (i, &w) in diag.iter().enumerate() {
            block[i * inner..(i + 1) * inner].iter_mut().for_each(|v| *v *= w);
        }
    });
}

/// Dense phase-space model for one configuration.
#[derive(Debug, Clone)]
pub struct DenseModel {
    pub cfg: BgkConfig,
    nodes: Vec<f64>,
    dplus: SparseRows,
    dminus: SparseRows,
    vplus: Vec<f64>,
    vminus: Vec<f64>,
    d4: SparseRows,
}

impl DenseModel {
    pub fn new(cfg: &BgkConfig) -> Result<Self> {
        cfg.validate()?;
        let entries = cfg.m.checked_pow(cfg.order() as u32).unwrap_or(usize::MAX);
        if entries > ORACLE_MAX_ENTRIES {
            return Err(AptError::SizeGuard {
                entries,
                limit: ORACLE_MAX_ENTRIES,
            });
        }
        let nodes = cfg.nodes();
        let up = build_upwind_matrices(cfg.m, &nodes);
        Ok(Self {
            cfg: cfg.clone(),
            dplus: SparseRows::from_dense(&up.dplus),
            dminus: SparseRows::from_dense(&up.dminus),
            vplus: up.vplus.diag().to_vec(),
            vminus: up.vminus.diag().to_vec(),
            d4: SparseRows::from_dense(&fourth_difference(cfg.m)),
            nodes,
        })
    }

    fn check(&self, f: &DenseTensor) -> Result<()> {
        if f.shape() != self.cfg.modes().as_slice() {
            return Err(AptError::ModeMismatch {
                left: f.shape().to_vec(),
                right: self.cfg.modes(),
            });
        }
        Ok(())
    }

    /// `L f`.
    pub fn transport(&self, f: &[f64]) -> Vec<f64> {
        let (dim, m, order) = (self.cfg.dim, self.cfg.m, self.cfg.order());
        let mut out = vec![0.0; f.len()];
        if !self.cfg.transport {
            return out;
        }
        for i in 0..dim {
            for (d, v) in [(&self.dplus, &self.vplus), (&self.dminus, &self.vminus)] {
                let mut t = vec![0.0; f.len()];
                mode_apply_add(f, &mut t, m, order, i, d, 1.0);
                mode_scale(&mut t, m, order, dim + i, v);
                out.iter_mut().zip(&t).for_each(|(o, x)| *o -= x);
            }
        }
        out
    }

    /// `M f`, the fourth difference summed over spatial modes.
    pub fn dissipation(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        for i in 0..self.cfg.dim {
            mode_apply_add(f, &mut out, self.cfg.m, self.cfg.order(), i, &self.d4, 1.0);
        }
        out
    }

    /// Contiguous blocks of velocity values, one per spatial node.
    fn velocity_blocks<'a>(&self, f: &'a [f64]) -> impl Iterator<Item = &'a [f64]> {
        let nv = self.cfg.m.pow(self.cfg.dim as u32);
        f.chunks(nv)
    }

    /// Velocity node vectors in row-major order over `(v_1, .., v_D)`.
    fn velocity_points(&self) -> Vec<Vec<f64>> {
        let dim = self.cfg.dim;
        let shape = vec![self.cfg.m; dim];
        let count = self.cfg.m.pow(dim as u32);
        let mut idx = vec![0usize; dim];
        let mut pts = Vec::with_capacity(count);
        for _ in 0..count {
            pts.push(idx.iter().map(|&l| self.nodes[l]).collect());
            increment(&mut idx, &shape);
        }
        pts
    }

    /// Literal moment sums. Fails on non-positive density or temperature.
    pub fn moments(&self, f: &DenseTensor) -> Result<MacroFields> {
        self.check(f)?;
        let (dim, bo) = (self.cfg.dim, self.cfg.bo);
        let hd = self.cfg.h().powi(dim as i32);
        let pts = self.velocity_points();
        let shape = self.cfg.spatial_modes();
        let mut rho = Vec::new();
        let mut u: Vec<Vec<f64>> = vec![Vec::new(); dim];
        let mut temp = Vec::new();
        for block in self.velocity_blocks(f.data()) {
            let r: f64 = hd * block.iter().sum::<f64>();
            let mut ui = vec![0.0; dim];
            for (fv, v) in block.iter().zip(&pts) {
                for i in 0..dim {
                    ui[i] += hd * fv * v[i];
                }
            }
            ui.iter_mut().for_each(|x| *x /= r);
            let mut spread = 0.0;
            for (fv, v) in block.iter().zip(&pts) {
                let d2: f64 = (0..dim).map(|i| (v[i] - ui[i]).powi(2)).sum();
                spread += fv * d2;
            }
            temp.push(bo * hd / (dim as f64 * r) * spread);
            rho.push(r);
            for i in 0..dim {
                u[i].push(ui[i]);
            }
        }
        let rho = DenseTensor::new(shape.clone(), rho)?;
        require_positive("density", &rho)?;
        let mf = MacroFields {
            rho,
            u: u.into_iter()
                .map(|ui| DenseTensor::new(shape.clone(), ui))
                .collect::<Result<_>>()?,
            temp: DenseTensor::new(shape, temp)?,
        };
        mf.check_positive()?;
        Ok(mf)
    }

    /// `rho / (2 pi T / Bo)^(D/2) exp(-Bo |v - U|^2 / (2T))` at every node.
    pub fn equilibrium(&self, mf: &MacroFields) -> DenseTensor {
        let (dim, bo) = (self.cfg.dim, self.cfg.bo);
        let pts = self.velocity_points();
        let mut data = Vec::with_capacity(mf.rho.len() * pts.len());
        for k in 0..mf.rho.len() {
            let (r, t) = (mf.rho.data()[k], mf.temp.data()[k]);
            let pre = r / (2.0 * std::f64::consts::PI * t / bo).powf(dim as f64 / 2.0);
            for v in &pts {
                let d2: f64 = (0..dim).map(|i| (v[i] - mf.u[i].data()[k]).powi(2)).sum();
                data.push(pre * (-bo * d2 / (2.0 * t)).exp());
            }
        }
        DenseTensor::new(self.cfg.modes(), data).expect("consistent size")
    }

    /// `(nu / Kn) (f_eq - f)` with `nu = K rho T^(1 - mu)`.
    pub fn collision(&self, f: &DenseTensor) -> Result<DenseTensor> {
        let mf = self.moments(f)?;
        if !self.cfg.collisions {
            return Ok(DenseTensor::zeros(f.shape()));
        }
        let feq = self.equilibrium(&mf);
        let nv = self.cfg.m.pow(self.cfg.dim as u32);
        let mut data = Vec::with_capacity(f.len());
        for (k, (fe, fb)) in feq.data().chunks(nv).zip(f.data().chunks(nv)).enumerate() {
            let nu = self.cfg.k_coll * mf.rho.data()[k] * mf.temp.data()[k].powf(1.0 - self.cfg.mu);
            data.extend(fe.iter().zip(fb).map(|(e, x)| nu / self.cfg.kn * (e - x)));
        }
        DenseTensor::new(f.shape().to_vec(), data)
    }

    /// Phase-space totals with the same weights as the TT diagnostics.
    pub fn conserved_sums(&self, f: &DenseTensor) -> Result<ConservedSums> {
        self.check(f)?;
        let dim = self.cfg.dim;
        let h2d = self.cfg.h().powi(2 * dim as i32);
        let pts = self.velocity_points();
        let (mut mass, mut momentum, mut energy) = (0.0, vec![0.0; dim], 0.0);
        for block in self.velocity_blocks(f.data()) {
            for (fv, v) in block.iter().zip(&pts) {
                mass += fv;
                for i in 0..dim {
                    momentum[i] += fv * v[i];
                }
                energy += 0.5 * fv * v.iter().map(|x| x * x).sum::<f64>();
            }
        }
        Ok(ConservedSums {
            mass: h2d * mass,
            momentum: momentum.into_iter().map(|p| h2d * p).collect(),
            energy: h2d * energy,
        })
    }

    /// One TVD-RK2 step of size `dt`.
    pub fn rk2_step(&self, f: &DenseTensor, dt: f64) -> Result<DenseTensor> {
        let rate = |g: &DenseTensor| -> Result<Vec<f64>> {
            let q = self.collision(g)?;
            let mut r = self.transport(g.data());
            r.iter_mut().zip(q.data()).for_each(|(a, b)| *a += b);
            Ok(r)
        };
        let r0 = rate(f)?;
        let stage: Vec<f64> = f.data().iter().zip(&r0).map(|(a, b)| a + dt * b).collect();
        let stage = DenseTensor::new(f.shape().to_vec(), stage)?;
        let r1 = rate(&stage)?;
        let next = f
            .data()
            .iter()
            .zip(stage.data())
            .zip(&r1)
            .map(|((a, s), r)| 0.5 * a + 0.5 * s + 0.5 * dt * r)
            .collect();
        DenseTensor::new(f.shape().to_vec(), next)
    }

    /// One leap-frog step `F^{n-1}, F^n -> F^{n+1}`.
    pub fn cnlf_step(&self, prev: &DenseTensor, curr: &DenseTensor, dt: f64) -> Result<DenseTensor> {
        self.check(prev)?;
        let q = self.collision(curr)?;
        let lp = self.transport(prev.data());
        let mut rhs: Vec<f64> = prev
            .data()
            .iter()
            .zip(&lp)
            .zip(q.data())
            .map(|((p, l), q)| p + dt * l + 2.0 * dt * q)
            .collect();
        if self.cfg.eps_diss > 0.0 {
            let c = self.cfg.eps_diss * self.cfg.h().powi(4) / 16.0;
            let mp = self.dissipation(prev.data());
            rhs.iter_mut().zip(&mp).for_each(|(r, x)| *r -= c * x);
        }
        let lc = self.transport(curr.data());
        let mut x: Vec<f64> = prev
            .data()
            .iter()
            .zip(&lc)
            .zip(q.data())
            .map(|((p, l), q)| p + 2.0 * dt * (l + q))
            .collect();
        let tol = ORACLE_SOLVE_RTOL * norm2(&rhs);
        let outcome = gmres(
            |v, out| {
                let l = self.transport(v);
                for ((o, vi), li) in out.iter_mut().zip(v).zip(&l) {
                    *o = vi - dt * li;
                }
            },
            &rhs,
            &mut x,
            tol,
            60,
            5000,
        );
        if !outcome.converged {
            return Err(AptError::Stagnation(
                outcome.residual / norm2(&rhs).max(f64::MIN_POSITIVE),
            ));
        }
        DenseTensor::new(prev.shape().to_vec(), x)
    }

    /// Runs the same step sequence as the TT time loop, calling `observer`
    /// with `(step, time, field)` for every level including the initial one.
    pub fn run<F>(&self, f0: &DenseTensor, mut observer: F) -> Result<DenseTensor>
    where
        F: FnMut(usize, f64, &DenseTensor) -> Result<()>,
    {
        let mut stepper = DenseStepper::new(self, f0)?;
        loop {
            let (step, time, f) = stepper.current();
            observer(step, time, f)?;
            if !stepper.advance()? {
                break;
            }
        }
        Ok(stepper.into_field())
    }
}

/// Step-by-step driver over the dense model, following the TT step plan.
pub struct DenseStepper<'a> {
    model: &'a DenseModel,
    prev: DenseTensor,
    curr: DenseTensor,
    step: usize,
    time: f64,
    finished: bool,
}

impl<'a> DenseStepper<'a> {
    pub fn new(model: &'a DenseModel, f0: &DenseTensor) -> Result<Self> {
        model.check(f0)?;
        Ok(Self {
            model,
            prev: f0.clone(),
            curr: f0.clone(),
            step: 0,
            time: 0.0,
            finished: false,
        })
    }

    pub fn current(&self) -> (usize, f64, &DenseTensor) {
        (self.step, self.time, &self.curr)
    }

    /// Advances one level; returns `false` once the final time was reached.
    pub fn advance(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        let cfg = &self.model.cfg;
        let dt = cfg.dt;
        let (full, rest) = cfg.step_plan();
        if self.step == 0 && full >= 1 {
            let next = self.model.rk2_step(&self.curr, dt)?;
            self.prev = std::mem::replace(&mut self.curr, next);
            self.step = 1;
            self.time = dt;
        } else if self.step < full {
            let next = self.model.cnlf_step(&self.prev, &self.curr, dt)?;
            self.prev = std::mem::replace(&mut self.curr, next);
            self.step += 1;
            self.time = self.step as f64 * dt;
        } else if rest > 0.0 {
            let next = self.model.rk2_step(&self.curr, rest)?;
            self.prev = std::mem::replace(&mut self.curr, next);
            self.step += 1;
            self.time = cfg.t_star;
            self.finished = true;
        } else {
            self.finished = true;
            return Ok(false);
        }
        Ok(true)
    }

    pub fn into_field(self) -> DenseTensor {
        self.curr
    }
}
