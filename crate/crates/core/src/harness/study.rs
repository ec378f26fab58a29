//! Grid-convergence and dissipation studies.

use std::fmt::Write as _;

use super::scenario::Scenario;
use crate::bgk::{compute_moments, BgkConfig};
use crate::error::{AptError, Result};
use crate::integrator::run_simulation;
use crate::oracle::DenseModel;
use crate::tt::{DenseTensor, TtTensor};

/// Which pipeline produces the level solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudySolver {
    Tt,
    Dense,
}

/// Fixed tolerance of the convergence study.
pub const STUDY_EPS: f64 = 1e-7;

/// Configuration of one level: `dt = 1/(4m)`.
pub fn study_config(base: &BgkConfig, m: usize) -> BgkConfig {
    let mut cfg = base.clone();
    cfg.m = m;
    cfg.dt = 1.0 / (4.0 * m as f64);
    cfg
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyLevel {
    pub m: usize,
    /// Discrete L2 error against the restricted reference.
    pub error: f64,
    /// `log2(e_coarser / e_this)`; `None` on the coarsest level or when
    /// either error sits at the rounding floor.
    pub order: Option<f64>,
    /// Largest final MALS residual over the level's implicit steps (TT only).
    pub max_mals_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub dim: usize,
    pub t_star: f64,
    pub reference_m: usize,
    /// Errors at or below this are indistinguishable from rounding.
    pub noise_floor: f64,
    pub reference_max_mals_residual: Option<f64>,
    pub levels: Vec<StudyLevel>,
}

impl ConvergenceTable {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# D={} t={} reference m={} (scaled-down reference level)",
            self.dim, self.t_star, self.reference_m
        );
        let _ = writeln!(s, "m,l2_error,order");
        for l in &self.levels {
            let order = l.order.map_or_else(|| "N/A".to_string(), |o| format!("{o:.3}"));
            let _ = writeln!(s, "{},{:e},{order}", l.m, l.error);
        }
        s
    }
}

enum Field {
    Tt(TtTensor),
    Dense(DenseTensor),
}

impl Field {
    fn restrict(&self, stride: usize) -> Result<Field> {
        Ok(match self {
            Field::Tt(t) => Field::Tt(t.restrict(stride)?),
            Field::Dense(d) => {
                let shape: Vec<usize> = d.shape().iter().map(|n| n / stride).collect();
                Field::Dense(DenseTensor::from_fn(&shape, |idx| {
                    let fine: Vec<usize> = idx.iter().map(|i| i * stride).collect();
                    d.get(&fine)
                }))
            }
        })
    }

    fn distance(&self, other: &Field) -> Result<f64> {
        match (self, other) {
            (Field::Tt(a), Field::Tt(b)) => Ok(a.sub(b)?.norm()),
            (Field::Dense(a), Field::Dense(b)) => a.distance(b),
            _ => unreachable!("levels share one solver"),
        }
    }

    fn norm(&self) -> f64 {
        match self {
            Field::Tt(t) => t.norm(),
            Field::Dense(d) => d.norm(),
        }
    }
}

fn solve_level<I>(cfg: &BgkConfig, solver: StudySolver, init: &I) -> Result<(Field, Option<f64>)>
where
    I: Fn(&BgkConfig) -> Result<TtTensor>,
{
    let f0 = init(cfg)?;
    log::info!("study level m={} ({} steps)", cfg.m, cfg.step_plan().0);
    match solver {
        StudySolver::Tt => {
            let mut worst: Option<f64> = None;
            let out = run_simulation(&f0, cfg, |rec, _| {
                if let Some(r) = &rec.mals {
                    worst = Some(worst.map_or(r.final_residual, |w| w.max(r.final_residual)));
                }
                Ok(())
            })?;
            Ok((Field::Tt(out.final_field), worst))
        }
        StudySolver::Dense => {
            let model = DenseModel::new(cfg)?;
            Ok((Field::Dense(model.run(&f0.to_dense(), |_, _, _| Ok(()))?), None))
        }
    }
}

/// Runs every level in `m_list` and a reference at `2 * max(m_list)`, all
/// with `dt = 1/(4m)`, and tabulates the discrete L2 error of each level
/// against the reference restricted to that level's grid.
pub fn convergence_study_with<I>(
    m_list: &[usize],
    base: &BgkConfig,
    solver: StudySolver,
    init: I,
) -> Result<ConvergenceTable>
where
    I: Fn(&BgkConfig) -> Result<TtTensor>,
{
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AptError::Config {
            field: "m_list".into(),
            message: "must be non-empty and strictly ascending".into(),
        });
    }
    let reference_m = 2 * m_list[m_list.len() - 1];
    for &m in m_list {
        if !reference_m.is_multiple_of(m) {
            return Err(AptError::Config {
                field: "m_list".into(),
                message: format!("level {m} does not divide the reference level {reference_m}"),
            });
        }
        study_config(base, m).validate()?;
    }
    let dim = base.dim;
    let ref_cfg = study_config(base, reference_m);
    let (reference, reference_max_mals_residual) = solve_level(&ref_cfg, solver, &init)?;
    let ref_weight = ref_cfg.h().powi(dim as i32);
    let noise_floor = 10.0 * base.eps_b.max(base.eps_d) * ref_weight * reference.norm();

    let mut levels: Vec<StudyLevel> = Vec::new();
    for &m in m_list {
        let cfg = study_config(base, m);
        let (coarse, max_mals_residual) = solve_level(&cfg, solver, &init)?;
        let restricted = reference.restrict(reference_m / m)?;
        // h^D * ||.|| approximates the continuous L2 norm over phase space
        let error = cfg.h().powi(dim as i32) * coarse.distance(&restricted)?;
        let order = levels.last().and_then(|prev| {
            (prev.error > noise_floor && error > noise_floor)
                .then(|| (prev.error / error).ln() / (m as f64 / prev.m as f64).ln())
        });
        levels.push(StudyLevel {
            m,
            error,
            order,
            max_mals_residual,
        });
    }
    Ok(ConvergenceTable {
        dim,
        t_star: base.t_star,
        reference_m,
        noise_floor,
        reference_max_mals_residual,
        levels,
    })
}

/// [`convergence_study_with`] starting from a named scenario.
pub fn convergence_study(
    scenario: Scenario,
    m_list: &[usize],
    base: &BgkConfig,
    solver: StudySolver,
) -> Result<ConvergenceTable> {
    convergence_study_with(m_list, base, solver, |cfg| scenario.initial_field(cfg))
}

/// Periodic total variation summed over all spatial directions.
pub fn total_variation(field: &DenseTensor) -> f64 {
    let shape = field.shape().to_vec();
    let strides = field.strides();
    let data = field.data();
    let mut tv = 0.0;
    for (axis, &n) in shape.iter().enumerate() {
        for (off, &v) in data.iter().enumerate() {
            let i = (off / strides[axis]) % n;
            let next = off - i * strides[axis] + ((i + 1) % n) * strides[axis];
            tv += (data[next] - v).abs();
        }
    }
    tv
}

/// Outcome of a run tracked through the total variation of the density.
#[derive(Debug, Clone, PartialEq)]
pub struct TvTrace {
    pub initial: f64,
    pub max: f64,
    /// Set when the run stopped on a non-positive density or temperature.
    pub positivity_abort: Option<String>,
    pub steps: usize,
}

impl TvTrace {
    /// `max(0, max_n TV(rho^n) - TV(rho^0))`.
    pub fn growth(&self) -> f64 {
        (self.max - self.initial).max(0.0)
    }
}

/// Runs `cfg` from `f0` and records the density total variation at every
/// level. A positivity failure ends the trace instead of failing.
pub fn tv_trace(f0: &TtTensor, cfg: &BgkConfig) -> Result<TvTrace> {
    let rho0 = compute_moments(f0, cfg)?.rho;
    let initial = total_variation(&rho0);
    let mut trace = TvTrace {
        initial,
        max: initial,
        positivity_abort: None,
        steps: 0,
    };
    let result = run_simulation(f0, cfg, |rec, f| {
        let tv = total_variation(&compute_moments(f, cfg)?.rho);
        trace.max = trace.max.max(tv);
        trace.steps = rec.step;
        Ok(())
    });
    match result {
        Ok(_) => Ok(trace),
        Err(e @ AptError::Positivity { .. }) => {
            trace.positivity_abort = Some(e.to_string());
            Ok(trace)
        }
        Err(e) => Err(e),
    }
}
