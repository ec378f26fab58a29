use crate::error::{AptError, Result};

/// Physical and numerical parameters of one BGK run.
#[derive(Debug, Clone, PartialEq)]
pub struct BgkConfig {
    /// Spatial dimension `D` (1, 2 or 3); the phase space has `2D` modes.
    pub dim: usize,
    /// Grid points per mode.
    pub m: usize,
    pub dt: f64,
    pub t_star: f64,
    pub kn: f64,
    pub bo: f64,
    /// Collision-frequency pre-factor `K`.
    pub k_coll: f64,
    /// Viscosity exponent `mu`.
    pub mu: f64,
    /// Compression tolerance.
    pub eps_b: f64,
    /// Linear-solver residual tolerance.
    pub eps_d: f64,
    /// Artificial-viscosity coefficient; zero disables dissipation.
    pub eps_diss: f64,
    /// Include the transport term.
    pub transport: bool,
    /// Include the collision term.
    pub collisions: bool,
}

impl Default for BgkConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            m: 16,
            dt: 0.01,
            t_star: 1.0,
            kn: 1.0,
            bo: 3.65,
            k_coll: 1.0,
            mu: 0.5,
            eps_b: 1e-6,
            eps_d: 1e-6,
            eps_diss: 0.0,
            transport: true,
            collisions: true,
        }
    }
}

impl BgkConfig {
    pub fn new(dim: usize, m: usize) -> Self {
        Self {
            dim,
            m,
            ..Self::default()
        }
    }

    /// Grid spacing `2 pi / m`, shared by space and velocity.
    pub fn h(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.m as f64
    }

    /// Node coordinates `h k - pi`, `k = 0..m`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.m).map(|k| h * k as f64 - std::f64::consts::PI).collect()
    }

    pub fn order(&self) -> usize {
        2 * self.dim
    }

    pub fn modes(&self) -> Vec<usize> {
        vec![self.m; self.order()]
    }

    pub fn spatial_modes(&self) -> Vec<usize> {
        vec![self.m; self.dim]
    }

    /// Number of full steps and the length of a trailing partial step
    /// (zero when `t_star / dt` is integral up to rounding).
    pub fn step_plan(&self) -> (usize, f64) {
        let ratio = self.t_star / self.dt;
        let n = ratio.round();
        if (ratio - n).abs() <= 1e-9 * ratio.max(1.0) {
            (n as usize, 0.0)
        } else {
            let full = ratio.floor();
            (full as usize, self.t_star - full * self.dt)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, message: String| {
            Err(AptError::Config {
                field: field.into(),
                message,
            })
        };
        if !(1..=3).contains(&self.dim) {
            return fail("dim", format!("must be 1, 2 or 3, got {}", self.dim));
        }
        if self.m < 4 || !self.m.is_multiple_of(2) {
            return fail("m", format!("must satisfy m >= 4 and be even, got {}", self.m));
        }
        let positive = [
            ("dt", self.dt),
            ("t_star", self.t_star),
            ("kn", self.kn),
            ("bo", self.bo),
            ("k_coll", self.k_coll),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(name, format!("must be positive and finite, got {v}"));
            }
        }
        if !self.mu.is_finite() {
            return fail("mu", format!("must be finite, got {}", self.mu));
        }
        for (name, v) in [("eps_b", self.eps_b), ("eps_d", self.eps_d)] {
            if !(v > 0.0 && v < 1.0) {
                return fail(name, format!("must lie in (0, 1), got {v}"));
            }
        }
        if !(self.eps_diss >= 0.0 && self.eps_diss.is_finite()) {
            return fail("eps_diss", format!("must be non-negative, got {}", self.eps_diss));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_plan_detects_partial_step() {
        let mut c = BgkConfig::new(1, 8);
        c.t_star = 0.1;
        c.dt = 0.01;
        assert_eq!(c.step_plan(), (10, 0.0));
        c.t_star = 0.105;
        let (n, rem) = c.step_plan();
        assert_eq!(n, 10);
        assert!((rem - 0.005).abs() < 1e-12);
    }

    #[test]
    fn validation_names_field() {
        let mut c = BgkConfig::new(2, 8);
        c.m = 5;
        match c.validate() {
            Err(AptError::Config { field, .. }) => assert_eq!(field, "m"),
            other => panic!("unexpected {other:?}"),
        }
        c.m = 8;
        c.eps_b = 1.0;
        assert!(c.validate().is_err());
    }
}
