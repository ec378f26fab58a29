//! Phase-space operators assembled from one-dimensional stencils.

use ndarray::Array2;

use super::config::BgkConfig;
use super::grid::{build_upwind_matrices, fourth_difference};
use crate::tt::TtOperator;

/// Rounding tolerance for assembled operators; only exact redundancy is removed.
pub const OPERATOR_ROUNDING: f64 = 1e-13;

/// Kronecker term with `factor` at the given modes and identities elsewhere.
fn term(d: usize, m: usize, placed: &[(usize, &Array2<f64>)]) -> Vec<Array2<f64>> {
    let mut t = vec![Array2::<f64>::eye(m); d];
    for (mode, f) in placed {
        t[*mode] = (*f).clone();
    }
    t
}

fn transport_terms(cfg: &BgkConfig, scale: f64) -> Vec<Vec<Array2<f64>>> {
    let (dim, m) = (cfg.dim, cfg.m);
    let u = build_upwind_matrices(m, &cfg.nodes());
    let mut terms = Vec::with_capacity(2 * dim);
    for i in 0..dim {
        let vp = &u.vplus * (-scale);
        let vm = &u.vminus * (-scale);
        terms.push(term(2 * dim, m, &[(i, &u.dplus), (dim + i, &vp)]));
        terms.push(term(2 * dim, m, &[(i, &u.dminus), (dim + i, &vm)]));
    }
    terms
}

/// The transport operator `L = -sum_i (V+ D+ + V- D-)` with the difference
/// acting on `x_i` and the velocity split on `v_i`. Zero when transport is
/// switched off in `cfg`.
pub fn build_transport_operator(cfg: &BgkConfig) -> TtOperator {
    if !cfg.transport {
        let zero = Array2::<f64>::zeros((cfg.m, cfg.m));
        return TtOperator::kron(&vec![zero; cfg.order()]).expect("square factors");
    }
    TtOperator::from_kron_terms(&transport_terms(cfg, 1.0))
        .expect("consistent factors")
        .round(OPERATOR_ROUNDING)
}

/// The fourth-difference operator `M = sum_i D4(x_i)`, acting on the spatial
/// modes only.
pub fn build_dissipation_operator(cfg: &BgkConfig) -> TtOperator {
    let d4 = fourth_difference(cfg.m);
    let terms: Vec<_> = (0..cfg.dim).map(|i| term(cfg.order(), cfg.m, &[(i, &d4)])).collect();
    TtOperator::from_kron_terms(&terms)
        .expect("consistent factors")
        .round(OPERATOR_ROUNDING)
}

/// `I + c L`, assembled term-wise and rounded.
pub fn shifted_transport(cfg: &BgkConfig, c: f64) -> TtOperator {
    let id = term(cfg.order(), cfg.m, &[]);
    let mut terms = vec![id];
    if cfg.transport {
        terms.extend(transport_terms(cfg, c));
    }
    TtOperator::from_kron_terms(&terms)
        .expect("consistent factors")
        .round(OPERATOR_ROUNDING)
}

/// Everything the time loop applies, built once per step size.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub dt: f64,
    pub l: TtOperator,
    /// `I - dt L`
    pub a: TtOperator,
    /// `I + dt L`
    pub b: TtOperator,
    /// `M`, present when dissipation is enabled.
    pub m: Option<TtOperator>,
}

impl SystemOperators {
    pub fn new(cfg: &BgkConfig, dt: f64) -> Self {
        Self {
            dt,
            l: build_transport_operator(cfg),
            a: shifted_transport(cfg, -dt),
            b: shifted_transport(cfg, dt),
            m: (cfg.eps_diss > 0.0).then(|| build_dissipation_operator(cfg)),
        }
    }
}
