//! Long-time decay experiment on the torus: slope fits on the algebraic
//! window and detection of the exponential regime past the spectral gap.

use serde::{Deserialize, Serialize};

use super::monitors::{decay_data_size, MonitorOptions, MonitorSample};
use super::params::CnsParams;
use super::run::{cns_run, RunOptions, StopReason};
use super::state::CnsState;
use crate::error::{Error, Result};
use crate::harness::fit::{fit_decay_slope, SlopeFit};
use crate::linear::decay_profile::japanese_bracket;

/// Shortest admissible algebraic window end.
pub const MIN_GAP_TIME: f64 = 10.0;

/// Local slope drop, relative to the window fit, that marks the exponential regime.
pub const TRANSITION_DROP: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayOptions {
    pub t_final: f64,
    pub output_dt: f64,
    pub max_step: f64,
    pub nonlinear: bool,
    pub k0: i32,
    /// Fit window; defaults to `[1, T_gap]`.
    #[serde(default)]
    pub window: Option<(f64, f64)>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        Self {
            t_final: 200.0,
            output_dt: 1.0,
            max_step: 0.5,
            nonlinear: true,
            k0: 0,
            window: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedSlope {
    pub quantity: String,
    pub fit: SlopeFit,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    /// `M²/4`.
    pub t_gap: f64,
    pub window: (f64, f64),
    /// Slowest decay rate of the lowest nonzero lattice mode.
    pub gap_rate: f64,
    pub d0: f64,
    /// Fits of `besov_s0_low`, `besov_s1_low` and the `L²` norm.
    pub slopes: Vec<NamedSlope>,
    /// `(t, d ln‖z‖_{L²}/d ln t)` between consecutive outputs.
    pub local_slopes: Vec<(f64, f64)>,
    /// First time past `T_gap` at which the local slope drops below the
    /// window slope by [`TRANSITION_DROP`].
    pub transition: Option<f64>,
    /// `-d ln‖z‖_{L²}/dt` over the last output interval.
    pub late_rate: f64,
    pub samples: Vec<MonitorSample>,
    pub stop: StopReason,
}

impl DecayReport {
    pub fn slope(&self, quantity: &str) -> Option<&SlopeFit> {
        self.slopes.iter().find(|s| s.quantity == quantity).map(|s| &s.fit)
    }
}

/// Algebraic window end `M²/4`.
pub fn gap_time(box_scale: f64) -> f64 {
    box_scale * box_scale / 4.0
}

/// Slowest decay rate at `|ξ| = ρ`: `min(μρ², Re(-λ_±))` for the acoustic pair.
pub fn gap_rate(params: &CnsParams, rho: f64) -> f64 {
    let nu = params.nu();
    let r2 = rho * rho;
    let disc = nu * nu * r2 * r2 - 4.0 * params.alpha() * r2;
    let acoustic = if disc < 0.0 {
        0.5 * nu * r2
    } else {
        0.5 * (nu * r2 - disc.sqrt())
    };
    acoustic.min(params.mu * r2)
}

/// Runs `cns_run` with decay monitors and fits the window slopes.
pub fn decay_run(state0: &CnsState, params: &CnsParams, opts: &DecayOptions) -> Result<DecayReport> {
    let grid = state0.grid();
    let t_gap = gap_time(grid.box_scale());
    if t_gap < MIN_GAP_TIME {
        return Err(Error::Refused(format!(
            "algebraic window [1, {t_gap:.2}] is too short; use M ≥ {:.0}",
            (4.0 * MIN_GAP_TIME).sqrt().ceil()
        )));
    }
    let window = opts.window.unwrap_or((1.0, t_gap));
    if !(window.0 > 0.0 && window.1 > window.0 && window.1 <= opts.t_final) {
        return Err(Error::InvalidArgument(format!(
            "window [{}, {}] must lie inside (0, {}]",
            window.0, window.1, opts.t_final
        )));
    }
    let run_opts = RunOptions {
        t_final: opts.t_final,
        output_dt: opts.output_dt,
        max_step: opts.max_step,
        nonlinear: opts.nonlinear,
        keep_trajectory: false,
        monitors: MonitorOptions {
            p: 2.0,
            k0: opts.k0,
            decay: true,
            s_grid: Vec::new(),
        },
        ..RunOptions::default()
    };
    let d0 = decay_data_size(state0, opts.k0)?;
    let run = cns_run(state0, params, &run_opts)?;
    let samples = run.monitors.samples;
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let series: [(&str, Vec<f64>); 3] = [
        ("besov_s0_low", samples.iter().map(|s| s.besov_s0_low).collect()),
        ("besov_s1_low", samples.iter().map(|s| s.besov_s1_low).collect()),
        ("l2", samples.iter().map(|s| s.l2_norm).collect()),
    ];
    let mut slopes = Vec::new();
    for (name, values) in &series {
        slopes.push(NamedSlope {
            quantity: name.to_string(),
            fit: fit_decay_slope(&times, values, window)?,
        });
    }
    let l2 = &series[2].1;
    let local_slopes: Vec<(f64, f64)> = times
        .windows(2)
        .zip(l2.windows(2))
        .filter(|(t, v)| t[0] > 0.0 && v[0] > 0.0 && v[1] > 0.0)
        .map(|(t, v)| (t[1], (v[1] / v[0]).ln() / (t[1] / t[0]).ln()))
        .collect();
    let reference = slopes[2].fit.slope;
    let transition = local_slopes
        .iter()
        .find(|(t, s)| *t > t_gap && *s < reference - TRANSITION_DROP)
        .map(|(t, _)| *t);
    let n = l2.len();
    let late_rate = if n >= 2 && l2[n - 2] > 0.0 && l2[n - 1] > 0.0 {
        -(l2[n - 1] / l2[n - 2]).ln() / (times[n - 1] - times[n - 2])
    } else {
        0.0
    };
    Ok(DecayReport {
        t_gap,
        window,
        gap_rate: gap_rate(params, grid.lowest_frequency()),
        d0,
        slopes,
        local_slopes,
        transition,
        late_rate,
        samples,
        stop: run.stop,
    })
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!("no convergence on [{a}, {b}]")));
    }
    Ok(simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionBound {
    pub sigma1: f64,
    pub sigma2: f64,
    /// `sup_t ⟨t⟩^{σ₁}∫₀ᵗ⟨t-τ⟩^{-σ₁}⟨τ⟩^{-σ₂}dτ` over the sampled times.
    pub constant: f64,
    pub t_at_sup: f64,
}

/// Samples `⟨t⟩^{σ₁}∫₀ᵗ⟨t-τ⟩^{-σ₁}⟨τ⟩^{-σ₂}dτ` on log-spaced `t ≤ t_max`.
pub fn convolution_bound(sigma1: f64, sigma2: f64, t_max: f64) -> Result<ConvolutionBound> {
    if !(sigma2 > 1.0 && sigma1 > 0.0 && sigma1 <= sigma2 && t_max > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < σ₁ ≤ σ₂, σ₂ > 1 and t_max > 1 (σ₁ = {sigma1}, σ₂ = {sigma2})"
        )));
    }
    let mut best = (0.0, 0.0);
    for t in crate::harness::fit::log_times(1e-2, t_max, 121) {
        let f = |tau: f64| japanese_bracket(t - tau).powf(-sigma1) * japanese_bracket(tau).powf(-sigma2);
        let half = 0.5 * t;
        let val = adaptive_simpson(&f, 0.0, half, 1e-12)? + adaptive_simpson(&f, half, t, 1e-12)?;
        let scaled = japanese_bracket(t).powf(sigma1) * val;
        if scaled > best.0 {
            best = (scaled, t);
        }
    }
    Ok(ConvolutionBound {
        sigma1,
        sigma2,
        constant: best.0,
        t_at_sup: best.1,
    })
}

/// The pairs used by the decay monitor's self-test.
pub const CONVOLUTION_PAIRS: [(f64, f64); 2] = [(0.5, 2.0), (1.0, 1.5)];

/// Runs [`convolution_bound`] for [`CONVOLUTION_PAIRS`].
pub fn convolution_self_test(t_max: f64) -> Result<Vec<ConvolutionBound>> {
    CONVOLUTION_PAIRS
        .iter()
        .map(|&(s1, s2)| convolution_bound(s1, s2, t_max))
        .collect()
}
