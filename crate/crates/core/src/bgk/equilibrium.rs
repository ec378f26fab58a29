//! Factorized equilibrium and the BGK collision term in TT form.

use super::config::BgkConfig;
use super::moments::{collision_frequency, compute_moments, MacroFields};
use crate::error::Result;
use crate::tt::{expand, DenseTensor, TtTensor};

/// Dense factor over `(x_1, .., x_D, v_i)`:
/// `rho^(1/D) / sqrt(2 pi T / Bo) * exp(-Bo (v_i - U_i)^2 / (2 T))`.
pub fn equilibrium_factor(mf: &MacroFields, cfg: &BgkConfig, i: usize) -> DenseTensor {
    let v = cfg.nodes();
    let m = cfg.m;
    let nx = mf.rho.len();
    let inv_dim = 1.0 / cfg.dim as f64;
    let mut data = Vec::with_capacity(nx * m);
    for k in 0..nx {
        let rho = mf.rho.data()[k];
        let t = mf.temp.data()[k];
        let u = mf.u[i].data()[k];
        let pre = rho.powf(inv_dim) / (2.0 * std::f64::consts::PI * t / cfg.bo).sqrt();
        data.extend(v.iter().map(|vl| pre * (-cfg.bo * (vl - u).powi(2) / (2.0 * t)).exp()));
    }
    let mut shape = cfg.spatial_modes();
    shape.push(m);
    DenseTensor::new(shape, data).expect("consistent size")
}

/// Inserts identity modes at every velocity position except `keep`, turning a
/// `(x, v_keep)` tensor into a full phase-space tensor.
fn lift_velocity(t: &TtTensor, cfg: &BgkConfig, keep: Option<usize>) -> Result<TtTensor> {
    let mut out = t.clone();
    for l in 0..cfg.dim {
        if Some(l) != keep {
            out = expand(&out, cfg.dim + l + 1, cfg.m)?;
        }
    }
    Ok(out)
}

/// The equilibrium `prod_i E^i` with each factor compressed and expanded
/// separately; rounding at `eps_b` after every product.
pub fn build_equilibrium(mf: &MacroFields, cfg: &BgkConfig, eps_b: f64) -> Result<TtTensor> {
    mf.check_positive()?;
    let mut feq: Option<TtTensor> = None;
    for i in 0..cfg.dim {
        let factor = TtTensor::from_dense(&equilibrium_factor(mf, cfg, i), eps_b)?;
        let factor = lift_velocity(&factor, cfg, Some(i))?;
        feq = Some(match feq {
            None => factor,
            Some(acc) => acc.hadamard(&factor)?.round(eps_b),
        });
    }
    Ok(feq.expect("dim >= 1").round(eps_b))
}

/// Collision term together with the moments it was built from.
#[derive(Debug, Clone)]
pub struct CollisionTerm {
    pub q: TtTensor,
    pub moments: MacroFields,
}

/// `Q = (nu / Kn) (F_eq - F)`, rounded at `eps_b`. Returns a zero tensor
/// when collisions are switched off (moments are still evaluated and checked).
pub fn build_collision_term(f: &TtTensor, cfg: &BgkConfig) -> Result<CollisionTerm> {
    let moments = compute_moments(f, cfg)?;
    if !cfg.collisions {
        return Ok(CollisionTerm {
            q: TtTensor::zeros(&cfg.modes()),
            moments,
        });
    }
    let feq = build_equilibrium(&moments, cfg, cfg.eps_b)?;
    let nu = collision_frequency(&moments, cfg)?;
    let nu_tt = if cfg.dim == 1 {
        TtTensor::rank_one(&[nu.data().to_vec()])
    } else {
        TtTensor::from_dense(&nu, cfg.eps_b)?
    };
    let nu_tt = lift_velocity(&nu_tt, cfg, None)?;
    let diff = feq.sub(f)?.round(cfg.eps_b);
    let q = nu_tt.hadamard(&diff)?.round(cfg.eps_b).scaled(1.0 / cfg.kn);
    Ok(CollisionTerm { q, moments })
}
