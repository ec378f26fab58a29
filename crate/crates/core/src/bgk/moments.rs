//! Macroscopic fields from a TT phase-space density.
//!
//! Velocity sums are taken on the TT cores: the spatial cores are contracted
//! into `Y` (`N_x x r_D`) and the velocity cores into small weight vectors, so
//! the full phase-space tensor is never formed.

use ndarray::Array1;

use super::config::BgkConfig;
use crate::error::{AptError, Result};
use crate::tt::{contract_tail, spatial_matrix, DenseTensor, TtTensor};

/// Density, mean velocity and temperature on the spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub rho: DenseTensor,
    pub u: Vec<DenseTensor>,
    pub temp: DenseTensor,
}

impl MacroFields {
    /// Errors on the first node with non-positive (or non-finite) density or
    /// temperature.
    pub fn check_positive(&self) -> Result<()> {
        require_positive("density", &self.rho)?;
        require_positive("temperature", &self.temp)
    }
}

pub(crate) fn require_positive(field: &'static str, t: &DenseTensor) -> Result<()> {
    match t.data().iter().enumerate().find(|(_, v)| !(**v > 0.0 && v.is_finite())) {
        Some((flat, &value)) => Err(AptError::Positivity {
            field,
            node: unflatten(flat, t.shape()),
            value,
        }),
        None => Ok(()),
    }
}

pub(crate) fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = flat % shape[k];
        flat /= shape[k];
    }
    idx
}

/// Raw velocity sums `h^D sum_l F w(v_l)` per spatial node.
struct VelocitySums {
    s0: Array1<f64>,
    s1: Vec<Array1<f64>>,
    s2: Vec<Array1<f64>>,
}

fn velocity_sums(f: &TtTensor, cfg: &BgkConfig) -> Result<VelocitySums> {
    let dim = cfg.dim;
    if f.mode_sizes() != cfg.modes() {
        return Err(AptError::ModeMismatch {
            left: f.mode_sizes(),
            right: cfg.modes(),
        });
    }
    let v = cfg.nodes();
    let v2: Vec<f64> = v.iter().map(|x| x * x).collect();
    let ones = vec![1.0; cfg.m];
    let hd = cfg.h().powi(dim as i32);
    let y = spatial_matrix(f, dim);
    let reduce = |slot: Option<(usize, &[f64])>| {
        let weights: Vec<&[f64]> = (0..dim)
            .map(|l| match slot {
                Some((i, w)) if i == l => w,
                _ => ones.as_slice(),
            })
            .collect();
        y.dot(&contract_tail(f, dim, &weights)) * hd
    };
    Ok(VelocitySums {
        s0: reduce(None),
        s1: (0..dim).map(|i| reduce(Some((i, &v)))).collect(),
        s2: (0..dim).map(|i| reduce(Some((i, &v2)))).collect(),
    })
}

/// Density, velocity and temperature; fails on non-positive density or
/// temperature at any node.
pub fn compute_moments(f: &TtTensor, cfg: &BgkConfig) -> Result<MacroFields> {
    let sums = velocity_sums(f, cfg)?;
    let shape = cfg.spatial_modes();
    let rho = DenseTensor::new(shape.clone(), sums.s0.to_vec())?;
    require_positive("density", &rho)?;
    let u: Vec<Array1<f64>> = sums.s1.iter().map(|s1| s1 / &sums.s0).collect();
    let mut spread = Array1::<f64>::zeros(sums.s0.len());
    for i in 0..cfg.dim {
        spread = spread + &sums.s2[i] - &(&sums.s1[i] * &u[i]);
    }
    let temp = spread * cfg.bo / (cfg.dim as f64) / &sums.s0;
    let mf = MacroFields {
        rho,
        u: u.into_iter()
            .map(|ui| DenseTensor::new(shape.clone(), ui.to_vec()))
            .collect::<Result<_>>()?,
        temp: DenseTensor::new(shape, temp.to_vec())?,
    };
    mf.check_positive()?;
    Ok(mf)
}

/// `nu = K rho T^(1 - mu)` per node.
pub fn collision_frequency(mf: &MacroFields, cfg: &BgkConfig) -> Result<DenseTensor> {
    mf.check_positive()?;
    let data = mf
        .rho
        .data()
        .iter()
        .zip(mf.temp.data())
        .map(|(r, t)| cfg.k_coll * r * t.powf(1.0 - cfg.mu))
        .collect();
    DenseTensor::new(mf.rho.shape().to_vec(), data)
}

/// Phase-space totals of mass, momentum and energy:
/// `h^2D <F, 1>`, `h^2D <F, v_i>` and `h^2D <F, |v|^2 / 2>`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedSums {
    pub mass: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
}

/// Conserved totals; never fails on negative values.
pub fn conserved_sums(f: &TtTensor, cfg: &BgkConfig) -> Result<ConservedSums> {
    let sums = velocity_sums(f, cfg)?;
    let hd = cfg.h().powi(cfg.dim as i32);
    Ok(ConservedSums {
        mass: hd * sums.s0.sum(),
        momentum: sums.s1.iter().map(|s| hd * s.sum()).collect(),
        energy: 0.5 * hd * sums.s2.iter().map(|s| s.sum()).sum::<f64>(),
    })
}
