//! Time stepping: a TVD-RK2 start-up step followed by the semi-implicit
//! Crank-Nicolson leap-frog scheme
//!
//! `(I - dt L) F^{n+1} = (I + dt L) F^{n-1} + 2 dt Q^n - (eps h^4 / 16) M F^{n-1}`,
//!
//! solved with MALS from the explicit leap-frog predictor.

use std::time::Instant;

use crate::bgk::{build_collision_term, conserved_sums, BgkConfig, CollisionTerm, ConservedSums, SystemOperators};
use crate::error::{AptError, Result};
use crate::linsolve::{mals_solve, MalsReport, MalsSettings};
use crate::tt::TtTensor;

/// The two time levels the leap-frog scheme needs.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub f_prev: TtTensor,
    pub f_curr: TtTensor,
    /// Index `n` of `f_curr`.
    pub step: usize,
    pub time: f64,
}

/// Per-step diagnostics handed to observers.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    pub ranks: Vec<usize>,
    pub rank_max: usize,
    pub rank_avg: f64,
    /// `None` for explicit steps.
    pub mals: Option<MalsReport>,
    pub sums: ConservedSums,
    pub wall_ms: f64,
}

impl StepRecord {
    fn new(
        step: usize,
        time: f64,
        f: &TtTensor,
        mals: Option<MalsReport>,
        cfg: &BgkConfig,
        wall_ms: f64,
    ) -> Result<Self> {
        Ok(Self {
            step,
            time,
            ranks: f.ranks(),
            rank_max: f.max_rank(),
            rank_avg: f.mean_rank(),
            mals,
            sums: conserved_sums(f, cfg)?,
            wall_ms,
        })
    }
}

/// Final state of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_field: TtTensor,
    pub final_time: f64,
    pub steps: usize,
    pub records: Vec<StepRecord>,
}

/// `L f + Q(f)` rounded at `eps_b`, along with the collision term.
fn explicit_rate(f: &TtTensor, cfg: &BgkConfig, ops: &SystemOperators) -> Result<(TtTensor, CollisionTerm)> {
    let coll = build_collision_term(f, cfg)?;
    let rate = ops.l.apply(f)?.add(&coll.q)?.round(cfg.eps_b);
    Ok((rate, coll))
}

/// One TVD-RK2 step of size `ops.dt`:
/// `F* = F + dt R(F)`, `F' = F/2 + F*/2 + dt/2 R(F*)`.
pub fn bootstrap_first_step(f0: &TtTensor, cfg: &BgkConfig, ops: &SystemOperators) -> Result<TtTensor> {
    let dt = ops.dt;
    let (r0, _) = explicit_rate(f0, cfg, ops)?;
    let stage = f0.add(&r0.scaled(dt))?.round(cfg.eps_b);
    let (r1, _) = explicit_rate(&stage, cfg, ops)?;
    let next = f0
        .scaled(0.5)
        .add(&stage.scaled(0.5))?
        .add(&r1.scaled(0.5 * dt))?
        .round(cfg.eps_b);
    Ok(next)
}

/// Solver settings for one implicit step. The local split tolerance is
/// relative, so it is tied to the absolute residual target through `||R||`.
pub fn step_solver_settings(cfg: &BgkConfig, rhs_norm: f64) -> MalsSettings {
    let mut s = MalsSettings::new(cfg.eps_d);
    let bonds = (cfg.order() - 1).max(1) as f64;
    let tied = if rhs_norm > 0.0 {
        0.05 * cfg.eps_d / (rhs_norm * bonds.sqrt())
    } else {
        cfg.eps_b
    };
    s.local_trunc = cfg.eps_b.min(tied);
    s
}

/// Right-hand side and leap-frog predictor of the implicit system.
pub fn cnlf_system(
    state: &SimulationState,
    cfg: &BgkConfig,
    ops: &SystemOperators,
) -> Result<(TtTensor, TtTensor, CollisionTerm)> {
    let dt = ops.dt;
    let coll = build_collision_term(&state.f_curr, cfg)?;
    let mut rhs = ops.b.apply(&state.f_prev)?.add(&coll.q.scaled(2.0 * dt))?;
    if let Some(m) = &ops.m {
        let c = cfg.eps_diss * cfg.h().powi(4) / 16.0;
        rhs = rhs.sub(&m.apply(&state.f_prev)?.scaled(c))?;
    }
    let rhs = rhs.round(cfg.eps_b);
    let predictor = ops
        .l
        .apply(&state.f_curr)?
        .add(&coll.q)?
        .scaled(2.0 * dt)
        .add(&state.f_prev)?
        .round(cfg.eps_b);
    Ok((rhs, predictor, coll))
}

/// Advances `state` by one leap-frog step. Non-convergence of the linear
/// solve is an error carrying the solver diagnostics.
pub fn cnlf_step(state: &SimulationState, cfg: &BgkConfig, ops: &SystemOperators) -> Result<(TtTensor, MalsReport)> {
    let (rhs, predictor, _) = cnlf_system(state, cfg, ops)?;
    let settings = step_solver_settings(cfg, rhs.norm());
    let (x, report) = mals_solve(&ops.a, &rhs, &predictor, &settings)?;
    if !report.converged {
        return Err(AptError::NotConverged {
            step: state.step + 1,
            residual: report.final_residual,
            tolerance: settings.eps_d,
            sweeps: report.sweeps_used,
        });
    }
    Ok((x.round(cfg.eps_b), report))
}

/// Runs from `f0` to `cfg.t_star`, calling `observer` with every completed
/// level (including the initial one). When `t_star / dt` is not integral the
/// remainder is covered by one shortened explicit step.
pub fn run_simulation<F>(f0: &TtTensor, cfg: &BgkConfig, mut observer: F) -> Result<RunOutcome>
where
    F: FnMut(&StepRecord, &TtTensor) -> Result<()>,
{
    cfg.validate()?;
    if f0.mode_sizes() != cfg.modes() {
        return Err(AptError::ModeMismatch {
            left: f0.mode_sizes(),
            right: cfg.modes(),
        });
    }
    let mut records = Vec::new();
    let mut emit = |rec: StepRecord, f: &TtTensor, records: &mut Vec<StepRecord>| -> Result<()> {
        observer(&rec, f)?;
        records.push(rec);
        Ok(())
    };

    let clock = Instant::now();
    let f0 = f0.round(cfg.eps_b);
    emit(StepRecord::new(0, 0.0, &f0, None, cfg, ms(clock))?, &f0, &mut records)?;

    let (full, rest) = cfg.step_plan();
    let ops = SystemOperators::new(cfg, cfg.dt);
    let mut state = SimulationState {
        f_prev: f0.clone(),
        f_curr: f0,
        step: 0,
        time: 0.0,
    };
    if full >= 1 {
        let clock = Instant::now();
        let f1 = bootstrap_first_step(&state.f_curr, cfg, &ops)?;
        state = SimulationState {
            f_prev: state.f_curr,
            f_curr: f1,
            step: 1,
            time: cfg.dt,
        };
        emit(
            StepRecord::new(1, state.time, &state.f_curr, None, cfg, ms(clock))?,
            &state.f_curr,
            &mut records,
        )?;
    }
    while state.step < full {
        let clock = Instant::now();
        let (next, report) = cnlf_step(&state, cfg, &ops)?;
        let step = state.step + 1;
        state = SimulationState {
            f_prev: state.f_curr,
            f_curr: next,
            step,
            time: step as f64 * cfg.dt,
        };
        emit(
            StepRecord::new(step, state.time, &state.f_curr, Some(report), cfg, ms(clock))?,
            &state.f_curr,
            &mut records,
        )?;
    }
    if rest > 0.0 {
        log::warn!(
            "t_star = {} is not a multiple of dt = {}; finishing with an explicit step of {rest}",
            cfg.t_star,
            cfg.dt
        );
        let clock = Instant::now();
        let short = SystemOperators::new(cfg, rest);
        let next = bootstrap_first_step(&state.f_curr, cfg, &short)?;
        let step = state.step + 1;
        state = SimulationState {
            f_prev: state.f_curr,
            f_curr: next,
            step,
            time: cfg.t_star,
        };
        emit(
            StepRecord::new(step, state.time, &state.f_curr, None, cfg, ms(clock))?,
            &state.f_curr,
            &mut records,
        )?;
    }
    Ok(RunOutcome {
        final_field: state.f_curr,
        final_time: state.time,
        steps: state.step,
        records,
    })
}

fn ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}
