//! Viscosities and pressure law of the barotropic system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paracalculus::ScalarMap;

/// `P(ρ) = c·ρ^γ/γ`, so `P'(ρ) = c·ρ^{γ-1}` and `P'(1) = c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PressureLaw {
    pub coefficient: f64,
    pub gamma: f64,
}

impl Default for PressureLaw {
    fn default() -> Self {
        Self {
            coefficient: 1.0,
            gamma: 1.4,
        }
    }
}

impl PressureLaw {
    pub fn pressure(&self, rho: f64) -> f64 {
        self.coefficient * rho.powf(self.gamma) / self.gamma
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        self.coefficient * rho.powf(self.gamma - 1.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coefficient: self.coefficient * factor,
            gamma: self.gamma,
        }
    }
}

/// Constant viscosities `λ, μ` and the pressure law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CnsParams {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub pressure: PressureLaw,
}

impl Default for CnsParams {
    /// `λ = 0`, `μ = 1/2` (so `ν = 1`) and `α = 1`.
    fn default() -> Self {
        Self {
            lambda: 0.0,
            mu: 0.5,
            pressure: PressureLaw::default(),
        }
    }
}

impl CnsParams {
    pub fn new(lambda: f64, mu: f64, pressure: PressureLaw) -> Result<Self> {
        let p = Self { lambda, mu, pressure };
        p.validate(false)?;
        Ok(p)
    }

    pub fn nu(&self) -> f64 {
        self.lambda + 2.0 * self.mu
    }

    /// `α = P'(1)`.
    pub fn alpha(&self) -> f64 {
        self.pressure.derivative(1.0)
    }

    /// Checks `μ > 0`, `ν > 0` and, if asked, `α > 0`.
    pub fn validate(&self, need_stability: bool) -> Result<()> {
        if !(self.mu > 0.0 && self.nu() > 0.0) {
            return Err(Error::Ellipticity(format!(
                "need μ > 0 and λ + 2μ > 0 (μ = {}, λ + 2μ = {})",
                self.mu,
                self.nu()
            )));
        }
        if !(self.pressure.gamma.is_finite() && self.pressure.coefficient.is_finite()) {
            return Err(Error::InvalidArgument("pressure law must be finite".into()));
        }
        if need_stability && !(self.alpha() > 0.0) {
            return Err(Error::InvalidArgument(format!("P'(1) = {} must be positive", self.alpha())));
        }
        Ok(())
    }

    /// `G'(a) = P'(1+a)/(1+a)`.
    pub fn g_prime(&self, a: f64) -> f64 {
        self.pressure.derivative(1.0 + a) / (1.0 + a)
    }

    /// `k(a) = G'(a) - G'(0)`.
    pub fn k(&self, a: f64) -> f64 {
        self.g_prime(a) - self.g_prime(0.0)
    }

    /// `I(a) = a/(1+a)`.
    pub fn inverse_density(a: f64) -> f64 {
        a / (1.0 + a)
    }

    pub fn k_map(&self) -> ScalarMap {
        let p = *self;
        ScalarMap::new("k", (-1.0, f64::INFINITY), move |a| p.k(a))
    }

    pub fn i_map(&self) -> ScalarMap {
        ScalarMap::inverse_density()
    }

    /// Pressure multiplied by `factor` (`ℓ²` for rescaling, `ε⁻²` for low Mach).
    pub fn with_pressure_scaled(&self, factor: f64) -> Self {
        Self {
            pressure: self.pressure.scaled(factor),
            ..*self
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_vanish_at_zero() {
        let p = CnsParams::default();
        assert!(p.k(0.0).abs() < 1e-12);
        assert!(CnsParams::inverse_density(0.0).abs() < 1e-12);
        assert_eq!(p.alpha(), 1.0);
        assert_eq!(p.nu(), 1.0);
    }

    #[test]
    fn isothermal_k_matches_finite_differences() {
        // P(ρ) = ρ: G(a) = ln(1+a), so G' is checked against a central difference of ln(1+a).
        let p = CnsParams::new(0.0, 1.0, PressureLaw { coefficient: 1.0, gamma: 1.0 }).unwrap();
        let g = |a: f64| (1.0 + a).ln();
        let eps = 1e-5;
        for a in [-0.4, -0.1, 0.0, 0.2, 0.7] {
            let fd = (g(a + eps) - g(a - eps)) / (2.0 * eps) - 1.0;
            assert!((p.k(a) - fd).abs() < 1e-9, "{a}");
            assert!((p.k(a) + a / (1.0 + a)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_viscosity() {
        assert!(CnsParams::new(-2.0, 0.5, PressureLaw::default()).is_err());
        assert!(CnsParams::new(0.0, 0.0, PressureLaw::default()).is_err());
    }
}
