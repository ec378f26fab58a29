use std::fmt;
use std::str::FromStr;

use crate::bgk::BgkConfig;
use crate::error::{AptError, Result};
use crate::tt::{expand, DenseTensor, TtTensor};

/// The three initial-value problems the harness knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Maxwellian with `rho = 1 + 0.5 prod sin(x_i)`, `U = 0`, `T = 1`.
    Trig,
    /// Non-Maxwellian product of quartic-exponent factors relaxing to equilibrium.
    Relaxation,
    /// Maxwellian with a density jump from 1 to 10 on `max |x_i| <= pi/8`.
    Discontinuous,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Trig, Scenario::Relaxation, Scenario::Discontinuous];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Trig => "trig",
            Scenario::Relaxation => "relaxation",
            Scenario::Discontinuous => "discontinuous",
        }
    }

    /// Default parameters for this scenario at the given size.
    pub fn default_config(self, dim: usize, m: usize) -> BgkConfig {
        let mut cfg = BgkConfig::new(dim, m);
        match self {
            Scenario::Trig => {}
            Scenario::Relaxation => {
                cfg.kn = 10.0;
                cfg.dt = 0.005;
            }
            Scenario::Discontinuous => {
                cfg.kn = 10.0;
                cfg.eps_b = 1e-5;
                cfg.eps_d = 1e-5;
                cfg.dt = 0.002;
                cfg.eps_diss = 0.1;
            }
        }
        cfg
    }

    /// Initial phase-space density in TT form, built factor by factor.
    pub fn initial_field(self, cfg: &BgkConfig) -> Result<TtTensor> {
        cfg.validate()?;
        let x = cfg.nodes();
        let dim = cfg.dim;
        let gauss: Vec<f64> = x
            .iter()
            .map(|v| (cfg.bo / (2.0 * std::f64::consts::PI)).sqrt() * (-cfg.bo * v * v / 2.0).exp())
            .collect();
        let ones = vec![1.0; cfg.m];
        let maxwellian_two_level = |bump: Vec<f64>, amp: f64| {
            let mut base: Vec<Vec<f64>> = vec![ones.clone(); dim];
            base.extend(vec![gauss.clone(); dim]);
            let mut var: Vec<Vec<f64>> = vec![bump; dim];
            var[0] = var[0].iter().map(|b| amp * b).collect();
            var.extend(vec![gauss.clone(); dim]);
            TtTensor::rank_one(&base).add(&TtTensor::rank_one(&var))
        };
        let f = match self {
            Scenario::Trig => maxwellian_two_level(x.iter().map(|v| v.sin()).collect(), 0.5)?,
            Scenario::Discontinuous => {
                let box_ind = x
                    .iter()
                    .map(|v| {
                        if v.abs() <= std::f64::consts::PI / 8.0 {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect();
                maxwellian_two_level(box_ind, 9.0)?
            }
            Scenario::Relaxation => relaxation_field(cfg)?,
        };
        Ok(f.round(cfg.eps_b.min(1e-10)))
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = AptError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| AptError::Config {
                field: "scenario".into(),
                message: format!("unknown scenario `{s}`, expected trig, relaxation or discontinuous"),
            })
    }
}

/// `prod_i f_i(x, v_i)` with
/// `f_i = rho0^(1/D) / sqrt(2 pi T0 / Bo) exp(-Bo (U_i0 - v_i)^4 / (2 T0))`.
/// Coordinates beyond `D` are taken as zero in the macroscopic profiles.
fn relaxation_field(cfg: &BgkConfig) -> Result<TtTensor> {
    let dim = cfg.dim;
    let nodes = cfg.nodes();
    let coord = |idx: &[usize], i: usize| if i < dim { nodes[idx[i]] } else { 0.0 };
    let mut shape = cfg.spatial_modes();
    shape.push(cfg.m);
    let eps = 1e-12;
    let mut out: Option<TtTensor> = None;
    for i in 0..dim {
        let factor = DenseTensor::from_fn(&shape, |idx| {
            let (x1, x2) = (coord(idx, 0), coord(idx, 1));
            let rho: f64 = (0..dim).map(|k| 1.0 + 0.5 * coord(idx, k).cos()).product();
            let t0 = 1.0 + 0.0025 * x1.cos();
            let u0 = match i {
                0 => 1.0 + 0.025 * (x2 - 1.0).sin(),
                1 => 0.0,
                _ => 0.025 * (x1 - 2.0).sin(),
            };
            let v = nodes[idx[dim]];
            rho.powf(1.0 / dim as f64) / (2.0 * std::f64::consts::PI * t0 / cfg.bo).sqrt()
                * (-cfg.bo / (2.0 * t0) * (u0 - v).powi(4)).exp()
        });
        let mut tt = TtTensor::from_dense(&factor, eps)?;
        for l in 0..dim {
            if l != i {
                tt = expand(&tt, dim + l + 1, cfg.m)?;
            }
        }
        out = Some(match out {
            None => tt,
            Some(acc) => acc.hadamard(&tt)?.round(eps),
        });
    }
    Ok(out.expect("dim >= 1"))
}
