//! Time loop with step control, output sampling and monitors.

use serde::{Deserialize, Serialize};

use super::integrator::{cns_step_with, PropagatorCache};
use super::monitors::{MonitorOptions, Monitors};
use super::params::CnsParams;
use super::state::CnsState;
use crate::error::{Error, Result};

/// Consecutive halvings tolerated before giving up.
pub const MAX_HALVINGS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub t_final: f64,
    pub output_dt: f64,
    /// Largest step; each output interval is split evenly.
    pub max_step: f64,
    /// Bound on `h·max|u|·k_max` with `k_max` the largest axis frequency.
    pub cfl: f64,
    /// `false` runs the exact linear flow.
    pub nonlinear: bool,
    /// Keep every output state in memory.
    pub keep_trajectory: bool,
    /// Stop once `‖a‖_{L^∞}` exceeds this level.
    pub density_gate: Option<f64>,
    pub monitors: MonitorOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            output_dt: 0.1,
            max_step: 0.05,
            cfl: 0.5,
            nonlinear: true,
            keep_trajectory: true,
            density_gate: Some(0.5),
            monitors: MonitorOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    Completed,
    /// `‖a‖_{L^∞}` passed the gate at output time `t`.
    DensityGate { t: f64, a_sup: f64 },
    /// `1 + a` reached zero inside a step starting at `t`.
    DensityLost { t: f64, min_density: f64 },
}

#[derive(Clone, Debug)]
pub struct CnsRun {
    pub trajectory: Vec<CnsState>,
    pub final_state: CnsState,
    pub monitors: Monitors,
    /// `X_{p,0}`.
    pub x_p0: f64,
    pub stop: StopReason,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl CnsRun {
    pub fn completed(&self) -> bool {
        self.stop == StopReason::Completed
    }
}

fn check_options(opts: &RunOptions) -> Result<()> {
    let pos = |x: f64| x > 0.0 && x.is_finite();
    if !(pos(opts.t_final) && pos(opts.output_dt) && pos(opts.max_step) && pos(opts.cfl)) {
        return Err(Error::InvalidArgument(
            "t_final, output_dt, max_step and cfl must be positive and finite".into(),
        ));
    }
    Ok(())
}

/// Output times `0 = t₀ < … < t_n = T` with spacing close to `output_dt`.
pub fn output_times(t_final: f64, output_dt: f64) -> Vec<f64> {
    let n = ((t_final / output_dt).round() as usize).max(1);
    (0..=n).map(|i| t_final * i as f64 / n as f64).collect()
}

/// Evolves `state0` to `opts.t_final`.
pub fn cns_run(state0: &CnsState, params: &CnsParams, opts: &RunOptions) -> Result<CnsRun> {
    check_options(opts)?;
    params.validate(false)?;
    let grid = state0.grid().clone();
    let k_max = grid.nyquist();
    let mut cache = PropagatorCache::new(&grid, params);
    let mut monitors = Monitors::new(grid.dim(), &opts.monitors);
    let mut state = CnsState::new(state0.a.clone(), state0.u.clone(), 0.0)?;
    let x_p0 = monitors.record(&state)?.xp;
    let mut trajectory = Vec::new();
    if opts.keep_trajectory {
        trajectory.push(state.clone());
    }
    let (mut accepted, mut rejected) = (0, 0);
    let gate_hit = |m: &Monitors| -> Option<StopReason> {
        let s = m.last()?;
        match opts.density_gate {
            Some(g) if s.a_sup > g => Some(StopReason::DensityGate { t: s.t, a_sup: s.a_sup }),
            _ => None,
        }
    };
    let finish = |state: CnsState, trajectory, monitors, stop, accepted, rejected| CnsRun {
        trajectory,
        final_state: state,
        monitors,
        x_p0,
        stop,
        accepted_steps: accepted,
        rejected_steps: rejected,
    };
    if let Some(stop) = gate_hit(&monitors) {
        return Ok(finish(state, trajectory, monitors, stop, accepted, rejected));
    }
    let times = output_times(opts.t_final, opts.output_dt);
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let base = (span / opts.max_step).ceil().max(1.0) as usize;
        let speed = if opts.nonlinear { state.u.sup_norm() } else { 0.0 };
        let mut level = 0u32;
        while (span / base as f64) * 0.5f64.powi(level as i32) * speed * k_max > opts.cfl && level < 40 {
            level += 1;
        }
        let mut remaining = base << level;
        let mut halvings = 0;
        while remaining > 0 {
            let h = span / (base as f64) * 0.5f64.powi(level as i32);
            let prop = cache.get(h)?;
            match cns_step_with(&state, params, &prop, opts.nonlinear) {
                Ok(out) => {
                    accepted += 1;
                    halvings = 0;
                    remaining -= 1;
                    state = out.state;
                    let next_speed = out.max_speed;
                    if remaining > 0 && h * next_speed * k_max > opts.cfl {
                        level += 1;
                        remaining *= 2;
                    }
                }
                Err(Error::StepRejected { .. }) => {
                    rejected += 1;
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::RejectionCascade { halvings, t: state.t });
                    }
                    level += 1;
                    remaining *= 2;
                }
                Err(Error::DensityPositivity(min_density)) => {
                    let stop = StopReason::DensityLost { t: state.t, min_density };
                    return Ok(finish(state, trajectory, monitors, stop, accepted, rejected));
                }
                Err(e) => return Err(e),
            }
        }
        state.t = w[1];
        monitors.record(&state)?;
        if opts.keep_trajectory {
            trajectory.push(state.clone());
        }
        if let Some(stop) = gate_hit(&monitors) {
            return Ok(finish(state, trajectory, monitors, stop, accepted, rejected));
        }
    }
    Ok(finish(state, trajectory, monitors, StopReason::Completed, accepted, rejected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{SpectralField, TorusGrid};

    fn data(g: &TorusGrid, amp: f64) -> CnsState {
        let a = SpectralField::from_fn(g, move |x| amp * (x[0].sin() * x[1].cos()));
        let u = SpectralField::from_vector_fn(g, 2, move |x, o| {
            o[0] = amp * x[1].sin();
            o[1] = amp * (x[0] + x[1]).cos();
        });
        CnsState::new(a, u, 0.0).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let run = cns_run(&CnsState::zeros(&g), &CnsParams::default(), &RunOptions::default()).unwrap();
        assert!(run.completed());
        assert_eq!(run.final_state.l2_norm(), 0.0);
        assert_eq!(run.trajectory.len(), 11);
    }

    #[test]
    fn large_data_stops_cleanly() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let opts = RunOptions {
            t_final: 2.0,
            ..RunOptions::default()
        };
        let run = cns_run(&data(&g, 0.8), &CnsParams::default(), &opts).unwrap();
        assert!(matches!(run.stop, StopReason::DensityGate { .. }));
    }

    #[test]
    fn halving_the_step_gives_second_order() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let p = CnsParams::default();
        let s0 = data(&g, 0.2);
        let solve = |h: f64| {
            let opts = RunOptions {
                t_final: 0.5,
                output_dt: 0.5,
                max_step: h,
                cfl: 100.0,
                ..RunOptions::default()
            };
            cns_run(&s0, &p, &opts).unwrap().final_state
        };
        let reference = solve(0.5 / 64.0);
        let e1 = solve(0.5 / 4.0).distance(&reference).unwrap();
        let e2 = solve(0.5 / 8.0).distance(&reference).unwrap();
        let order = (e1 / e2).log2();
        assert!((order - 2.0).abs() < 0.2, "order {order}");
    }
}
