//! Low Mach number sweep. The ε-system is solved as the unit system with
//! pressure `P/ε²` for `b = εa^ε`, on the unit box so that `1/ε` is a
//! lattice frequency.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::incompressible::{incompressible_run, IncompressibleOptions};
use super::params::{CnsParams, PressureLaw};
use super::run::{cns_run, RunOptions, StopReason};
use super::state::CnsState;
use crate::data::{oscillating_velocity, taylor_green};
use crate::error::{Error, Result};
use crate::harness::fit::{fit_decay_slope, SlopeFit};
use crate::littlewood_paley::{block_norms, BlockNorms};
use crate::spectral::{helmholtz_project, SpectralField, TorusGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowMachFamily {
    /// `u₀^ε = v₀ + A φ(x) sin(x·ω/ε) ω/|ω|`, `a₀^ε = 0`.
    Oscillating,
    /// `u₀^ε = v₀`, `a₀^ε = 0`.
    WellPrepared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowMachConfig {
    pub eps_list: Vec<f64>,
    pub family: LowMachFamily,
    pub n: usize,
    /// Viscosities and pressure of the unit system.
    pub params: CnsParams,
    /// Integrability index of the high-frequency part of `C₀^{ε,ν}`.
    pub p: f64,
    /// Split index: low frequencies are the blocks with `2^j εν ≤ 2^{j₀}`.
    pub j0: i32,
    /// Refuse when `C₀^{ε,ν} > 10ην`.
    pub eta: f64,
    pub oscillation_amplitude: f64,
    pub omega: Vec<f64>,
    /// Taylor–Green amplitude of `v₀`.
    pub reference_amplitude: f64,
    pub t_final: f64,
    /// Sampling interval, reduced to `ε/4` so that the acoustic period `πε/|ξ|`
    /// of the lowest modes is resolved.
    pub output_dt: f64,
    /// `sup_t‖Qu^ε‖` is taken over `t ≥ t_layer`.
    pub t_layer: f64,
    /// Step bound `step_factor·ε²`.
    pub step_factor: f64,
}

impl Default for LowMachConfig {
    fn default() -> Self {
        Self {
            eps_list: vec![0.2, 0.1, 0.05],
            family: LowMachFamily::Oscillating,
            n: 64,
            params: CnsParams {
                lambda: 0.0,
                mu: 2.0,
                pressure: PressureLaw::default(),
            },
            p: 4.0,
            j0: 0,
            eta: 1.0,
            oscillation_amplitude: 0.5,
            omega: vec![1.0, 0.0],
            reference_amplitude: 0.5,
            t_final: 0.5,
            output_dt: 0.05,
            t_layer: 0.05,
            step_factor: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowMachRow {
    pub eps: f64,
    pub sup_qu_l2: f64,
    pub err_pu_vs_v_linf_l2: f64,
    pub c0_eps_nu: f64,
    /// `‖u₀^ε - v₀‖_{Ḃ^{d/p-1}_{p,1}}`.
    pub data_norm: f64,
    pub accepted_steps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LowMachReport {
    pub rows: Vec<LowMachRow>,
    /// `‖v₀‖_{L²}`.
    pub reference_l2: f64,
    /// Fit of `ln‖u₀^ε - v₀‖` against `ln ε` over `ε = 1/k`.
    pub data_exponent: Option<SlopeFit>,
    /// `ε` range of the fit.
    pub data_window: (f64, f64),
    /// `1 - d/p`.
    pub expected_exponent: f64,
}

/// Taylor–Green amplitude of the well-prepared family. `sup‖Qu^ε‖` is then
/// generated by the nonlinearity alone and scales like the amplitude.
pub const WELL_PREPARED_AMPLITUDE: f64 = 0.04;

impl LowMachConfig {
    /// Switches the data family; the well-prepared family uses
    /// [`WELL_PREPARED_AMPLITUDE`] and measures `Qu^ε` from `t = 0`.
    pub fn with_family(mut self, family: LowMachFamily) -> Self {
        self.family = family;
        if family == LowMachFamily::WellPrepared {
            self.reference_amplitude = WELL_PREPARED_AMPLITUDE;
            self.t_layer = 0.0;
        }
        self
    }

    fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.omega.len(), self.n, 1.0)
    }

    fn validate(&self) -> Result<()> {
        self.params.validate(true)?;
        if self.eps_list.is_empty() || self.eps_list.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
            return Err(Error::InvalidArgument("ε values must lie in (0, 1]".into()));
        }
        if self.omega.len() < 2 || self.omega.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("ω must be a nonzero vector with d ≥ 2".into()));
        }
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if !(pos(self.t_final) && pos(self.output_dt) && pos(self.step_factor) && self.t_layer >= 0.0) {
            return Err(Error::InvalidArgument("time options must be positive".into()));
        }
        if self.t_layer >= self.t_final {
            return Err(Error::InvalidArgument("t_layer must precede t_final".into()));
        }
        Ok(())
    }

    fn oscillation(&self, grid: &TorusGrid, eps: f64) -> Result<SpectralField> {
        let norm = self.omega.iter().map(|w| w * w).sum::<f64>().sqrt();
        let dir: Vec<f64> = self.omega.iter().map(|w| w / norm).collect();
        Ok(oscillating_velocity(grid, eps, &self.omega, &dir)?.scaled(self.oscillation_amplitude))
    }

    /// `(a₀^ε, u₀^ε)` and `v₀`.
    pub fn data(&self, eps: f64) -> Result<(CnsState, SpectralField)> {
        let grid = self.grid()?;
        let v0 = taylor_green(&grid, self.reference_amplitude)?;
        let u = match self.family {
            LowMachFamily::Oscillating => v0.add(&self.oscillation(&grid, eps)?)?,
            LowMachFamily::WellPrepared => v0.clone(),
        };
        Ok((CnsState::new(SpectralField::zeros(&grid, 1), u, 0.0)?, v0))
    }
}

fn weighted(bn: &BlockNorms, s: f64, keep: impl Fn(i32) -> bool) -> f64 {
    bn.iter()
        .filter(|(j, _)| keep(*j))
        .map(|(j, v)| 2f64.powf(j as f64 * s) * v)
        .sum()
}

/// `C₀^{ε,ν}` with the disjoint split at `2^j εν ≤ 2^{j₀}`.
pub fn low_mach_data_size(state: &CnsState, eps: f64, nu: f64, p: f64, j0: i32) -> Result<f64> {
    let d = state.grid().dim() as f64;
    let et = eps * nu;
    let cut = (j0 as f64 - et.log2()).floor() as i32;
    let low = block_norms(&state.stacked(), 2.0)?;
    let u_high = block_norms(&state.u, p)?;
    let a_high = block_norms(&state.a, p)?;
    Ok(weighted(&low, d / 2.0 - 1.0, |j| j <= cut)
        + weighted(&u_high, d / p - 1.0, |j| j > cut)
        + et * weighted(&a_high, d / p, |j| j > cut))
}

fn sweep_row(cfg: &LowMachConfig, eps: f64) -> Result<LowMachRow> {
    let (state, v0) = cfg.data(eps)?;
    let output_dt = cfg.output_dt.min(0.25 * eps);
    let reference = incompressible_run(
        &v0,
        cfg.params.mu,
        &IncompressibleOptions {
            t_final: cfg.t_final,
            output_dt,
            max_step: output_dt,
            cfl: 0.5,
        },
    )?
    .states;
    let nu = cfg.params.nu();
    let d = state.grid().dim() as f64;
    let c0 = low_mach_data_size(&state, eps, nu, cfg.p, cfg.j0)?;
    if c0 > 10.0 * cfg.eta * nu {
        return Err(Error::Refused(format!(
            "C₀^{{ε,ν}} = {c0:.3e} exceeds 10ην = {:.3e} at ε = {eps}",
            10.0 * cfg.eta * nu
        )));
    }
    let data_norm = crate::littlewood_paley::besov_norm(
        &state.u.sub(&v0)?,
        &crate::littlewood_paley::NormSpec::besov(d / cfg.p - 1.0, cfg.p, 1.0),
    )?;
    let params = cfg.params.with_pressure_scaled(1.0 / (eps * eps));
    let opts = RunOptions {
        t_final: cfg.t_final,
        output_dt,
        max_step: (cfg.step_factor * eps * eps).min(output_dt),
        keep_trajectory: true,
        ..RunOptions::default()
    };
    let run = cns_run(&state, &params, &opts)?;
    if run.stop != StopReason::Completed {
        return Err(Error::Instability(format!("ε = {eps}: run stopped early ({:?})", run.stop)));
    }
    let mut sup_qu: f64 = 0.0;
    let mut err: f64 = 0.0;
    for (s, v) in run.trajectory.iter().zip(&reference) {
        let (pu, qu) = helmholtz_project(&s.u)?;
        if s.t >= cfg.t_layer - 1e-12 {
            sup_qu = sup_qu.max(qu.l2_norm());
        }
        err = err.max(pu.sub(v)?.l2_norm());
    }
    Ok(LowMachRow {
        eps,
        sup_qu_l2: sup_qu,
        err_pu_vs_v_linf_l2: err,
        c0_eps_nu: c0,
        data_norm,
        accepted_steps: run.accepted_steps,
    })
}

/// Fits the data-norm exponent over `ε = 1/k`, `k = k_min..=k_max`.
pub fn data_norm_exponent(cfg: &LowMachConfig, k_min: usize, k_max: usize) -> Result<SlopeFit> {
    let grid = cfg.grid()?;
    let d = grid.dim() as f64;
    let spec = crate::littlewood_paley::NormSpec::besov(d / cfg.p - 1.0, cfg.p, 1.0);
    let (eps, norms): (Vec<f64>, Vec<f64>) = (k_min..=k_max)
        .map(|k| {
            let e = 1.0 / k as f64;
            let u = cfg.oscillation(&grid, e)?;
            Ok((e, crate::littlewood_paley::besov_norm(&u, &spec)?))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?
        .into_iter()
        .unzip();
    fit_decay_slope(&eps, &norms, (1.0 / k_max as f64, 1.0 / k_min as f64))
}

/// Runs the sweep; the ε runs execute in parallel.
pub fn low_mach_experiment(cfg: &LowMachConfig) -> Result<LowMachReport> {
    cfg.validate()?;
    let (_, v0) = cfg.data(cfg.eps_list[0])?;
    let rows = cfg
        .eps_list
        .par_iter()
        .map(|&eps| sweep_row(cfg, eps))
        .collect::<Result<Vec<_>>>()?;
    let d = v0.grid().dim() as f64;
    let k_max = (cfg.n / 2).saturating_sub(4).min(24);
    let data_exponent = match cfg.family {
        LowMachFamily::Oscillating if cfg.oscillation_amplitude != 0.0 => Some(data_norm_exponent(cfg, 4, k_max)?),
        _ => None,
    };
    Ok(LowMachReport {
        rows,
        reference_l2: v0.l2_norm(),
        data_exponent,
        data_window: (1.0 / k_max as f64, 0.25),
        expected_exponent: 1.0 - d / cfg.p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oversized_data_are_refused() {
        let cfg = LowMachConfig {
            eps_list: vec![0.25],
            oscillation_amplitude: 500.0,
            n: 32,
            ..LowMachConfig::default()
        };
        assert!(matches!(low_mach_experiment(&cfg), Err(Error::Refused(_))));
    }

    #[test]
    fn off_lattice_eps_is_rejected() {
        let cfg = LowMachConfig {
            eps_list: vec![0.3],
            n: 32,
            ..LowMachConfig::default()
        };
        assert!(low_mach_experiment(&cfg).is_err());
    }

    #[test]
    fn data_size_drops_oscillation_into_high_part() {
        let cfg = LowMachConfig::default();
        let (s1, _) = cfg.data(0.2).unwrap();
        let (s2, _) = cfg.data(0.05).unwrap();
        let nu = cfg.params.nu();
        let c1 = low_mach_data_size(&s1, 0.2, nu, cfg.p, cfg.j0).unwrap();
        let c2 = low_mach_data_size(&s2, 0.05, nu, cfg.p, cfg.j0).unwrap();
        assert!(c2 < c1);
    }
}
