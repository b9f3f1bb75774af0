//! Damped transport `∂_t a + v·∇a + λa = f` by adaptive RK4.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::heat::check_series;
use super::modes::check_grid;
use crate::error::{Error, Result};
use crate::littlewood_paley::{block_norms, tilde_from_blocks_at, weighted_lr, BlockNorms};
use crate::paracalculus::advect;
use crate::spectral::{partial, SpectralField, TorusGrid};

type PointwiseVelocity = Arc<dyn Fn(f64, &[f64; 3], &mut [f64]) + Send + Sync>;

/// Advecting velocity.
#[derive(Clone)]
pub enum Velocity {
    /// Band-limited and constant in time.
    Steady(SpectralField),
    /// Band-limited, sampled on the solver's time grid, linear in between.
    Series(Vec<SpectralField>),
    /// Arbitrary `v(t, x)` evaluated at grid points; the product `v·∇a` is
    /// formed on the base grid without dealiasing.
    Pointwise(PointwiseVelocity),
}

impl fmt::Debug for Velocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Velocity::Steady(_) => f.write_str("Velocity::Steady"),
            Velocity::Series(s) => write!(f, "Velocity::Series({} samples)", s.len()),
            Velocity::Pointwise(_) => f.write_str("Velocity::Pointwise"),
        }
    }
}

impl Velocity {
    pub fn pointwise<F>(f: F) -> Self
    where
        F: Fn(f64, &[f64; 3], &mut [f64]) + Send + Sync + 'static,
    {
        Velocity::Pointwise(Arc::new(f))
    }
}

/// Tolerances for the step-doubling controller.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TransportOptions {
    /// Admissible local error per unit time, relative to `‖a‖_{L²}`.
    pub tol: f64,
    /// Regularity and integrability of the reported norms.
    pub s: f64,
    pub p: f64,
    pub max_steps: usize,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            s: 0.0,
            p: 2.0,
            max_steps: 1_000_000,
        }
    }
}

/// Gronwall-type bookkeeping at every output time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportReport {
    /// `‖a‖_{L̃^∞_t Ḃ^s_{p,1}}` up to each output time.
    pub solution_norm: Vec<f64>,
    /// `‖a₀‖_{Ḃ^s_{p,1}} + ‖f‖_{L̃^1_t Ḃ^s_{p,1}}`.
    pub data_norm: Vec<f64>,
    /// `V(t) = ∫‖∇v‖_{Ḃ^{d/2}_{2,∞}∩L^∞}`; absent for pointwise velocities.
    pub v_integral: Option<Vec<f64>>,
    /// Smallest `C` with `solution ≤ e^{CV}·data` at every output time.
    pub gronwall_constant: Option<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub times: Vec<f64>,
    pub series: Vec<SpectralField>,
    pub report: TransportReport,
}

struct Problem<'a> {
    velocity: &'a Velocity,
    f: Option<&'a [SpectralField]>,
    damping: f64,
    times: &'a [f64],
}

fn lerp(series: &[SpectralField], times: &[f64], t: f64) -> SpectralField {
    let i = match times.iter().position(|&x| x > t) {
        Some(0) => return series[0].clone(),
        Some(i) => i,
        None => return series[series.len() - 1].clone(),
    };
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    let mut out = series[i - 1].scaled(1.0 - w);
    out.axpy_in_place(w, &series[i]);
    out
}

fn pointwise_advect(grid: &TorusGrid, v: &PointwiseVelocity, t: f64, a: &SpectralField) -> Result<SpectralField> {
    let d = grid.dim();
    let grads: Vec<Vec<Complex64>> = (0..d).map(|i| partial(a, i).to_physical().remove(0)).collect();
    let pts = grid.points();
    let mut vel = vec![0.0; d];
    let samples: Vec<Complex64> = pts
        .iter()
        .enumerate()
        .map(|(k, x)| {
            v(t, x, &mut vel);
            (0..d).map(|i| grads[i][k] * vel[i]).sum()
        })
        .collect();
    let mut out = SpectralField::from_complex_samples(grid, &[samples])?;
    for flat in 0..grid.len() {
        if grid.is_nyquist(flat) {
            out.coeffs_mut(0)[flat] = Complex64::default();
        }
    }
    out.set_real(a.is_real());
    Ok(out)
}

impl Problem<'_> {
    fn velocity_at(&self, t: f64) -> Option<SpectralField> {
        match self.velocity {
            Velocity::Steady(v) => Some(v.clone()),
            Velocity::Series(s) => Some(lerp(s, self.times, t)),
            Velocity::Pointwise(_) => None,
        }
    }

    fn rhs(&self, t: f64, a: &SpectralField) -> Result<SpectralField> {
        let adv = match self.velocity {
            Velocity::Pointwise(v) => pointwise_advect(a.grid(), v, t, a)?,
            _ => advect(&self.velocity_at(t).expect("band-limited"), a)?,
        };
        let mut out = adv.scaled(-1.0);
        if self.damping != 0.0 {
            out.axpy_in_place(-self.damping, a);
        }
        if let Some(f) = self.f {
            let ft = lerp(f, self.times, t);
            out.axpy_in_place(1.0, &ft);
            out.set_real(out.is_real() && ft.is_real());
        }
        Ok(out)
    }

    fn rk4(&self, t: f64, a: &SpectralField, h: f64) -> Result<SpectralField> {
        let k1 = self.rhs(t, a)?;
        let k2 = self.rhs(t + 0.5 * h, &a.axpy(0.5 * h, &k1)?)?;
        let k3 = self.rhs(t + 0.5 * h, &a.axpy(0.5 * h, &k2)?)?;
        let k4 = self.rhs(t + h, &a.axpy(h, &k3)?)?;
        let mut out = a.clone();
        out.axpy_in_place(h / 6.0, &k1);
        out.axpy_in_place(h / 3.0, &k2);
        out.axpy_in_place(h / 3.0, &k3);
        out.axpy_in_place(h / 6.0, &k4);
        Ok(out)
    }

    fn speed_bound(&self) -> f64 {
        match self.velocity {
            Velocity::Steady(v) => v.sup_norm(),
            Velocity::Series(s) => s.iter().map(|v| v.sup_norm()).fold(0.0, f64::max),
            Velocity::Pointwise(_) => 0.0,
        }
    }
}

/// Solves on `t_grid` and reports the Gronwall ratio.
pub fn transport_solve(
    velocity: &Velocity,
    a0: &SpectralField,
    f_series: Option<&[SpectralField]>,
    damping: f64,
    t_grid: &[f64],
    opts: &TransportOptions,
) -> Result<TransportSolution> {
    check_grid(t_grid)?;
    check_series(f_series, a0, t_grid.len())?;
    let grid = a0.grid();
    let d = grid.dim();
    match velocity {
        Velocity::Steady(v) => check_velocity(v, grid)?,
        Velocity::Series(s) => {
            if s.len() != t_grid.len() {
                return Err(Error::SizeMismatch {
                    expected: t_grid.len(),
                    got: s.len(),
                });
            }
            for v in s {
                check_velocity(v, grid)?;
            }
        }
        Velocity::Pointwise(_) => {}
    }
    let problem = Problem {
        velocity,
        f: f_series,
        damping,
        times: t_grid,
    };
    let xi_max = grid.max_wave_norm();
    let speed = problem.speed_bound();
    let mut h = if speed > 0.0 { 0.5 / (speed * xi_max) } else { f64::INFINITY };
    let mut series = vec![a0.clone()];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut a = a0.clone();
    let mut t = t_grid[0];
    for &t_out in &t_grid[1..] {
        while t < t_out {
            if accepted + rejected >= opts.max_steps {
                return Err(Error::Instability(format!("step budget exhausted at t = {t:.4}")));
            }
            let step = h.min(t_out - t);
            let full = problem.rk4(t, &a, step)?;
            let half = problem.rk4(t, &a, 0.5 * step)?;
            let two = problem.rk4(t + 0.5 * step, &half, 0.5 * step)?;
            let err = two.sub(&full)?.l2_norm() / 15.0;
            let scale = a.l2_norm().max(two.l2_norm()).max(f64::MIN_POSITIVE);
            let budget = opts.tol * step * scale;
            if err <= budget {
                // local extrapolation: fifth order
                a = two.axpy(1.0 / 15.0, &two.sub(&full)?)?;
                t = if t_out - t <= step { t_out } else { t + step };
                accepted += 1;
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 { 2.0 } else { 0.9 * (budget / err).powf(0.25) };
            h = step * factor.clamp(0.2, 2.0);
            if h < 1e-12 * (1.0 + t.abs()) {
                return Err(Error::StepRejected { suggested: h });
            }
        }
        series.push(a.clone());
    }

    let bn: Vec<BlockNorms> = series.iter().map(|u| block_norms(u, opts.p)).collect::<Result<_>>()?;
    let fb: Option<Vec<BlockNorms>> = f_series
        .map(|f| f.iter().map(|x| block_norms(x, opts.p)).collect::<Result<_>>())
        .transpose()?;
    let base = weighted_lr(&bn[0], opts.s, 1.0);
    let mut solution_norm = Vec::with_capacity(t_grid.len());
    let mut data_norm = Vec::with_capacity(t_grid.len());
    for i in 0..t_grid.len() {
        let times = &t_grid[..=i];
        solution_norm.push(if i == 0 {
            base
        } else {
            tilde_from_blocks_at(&bn[..=i], times, opts.s, f64::INFINITY, 1.0)
        });
        let forcing = match (&fb, i) {
            (Some(fb), i) if i > 0 => tilde_from_blocks_at(&fb[..=i], times, opts.s, 1.0, 1.0),
            _ => 0.0,
        };
        data_norm.push(base + forcing);
    }
    let v_integral = match velocity {
        Velocity::Pointwise(_) => None,
        _ => {
            let g: Vec<f64> = t_grid
                .iter()
                .map(|&t| problem.velocity_at(t).map_or(Ok(0.0), |v| gradient_size(&v, d)))
                .collect::<Result<_>>()?;
            let mut acc = vec![0.0];
            for i in 1..g.len() {
                acc.push(acc[i - 1] + 0.5 * (t_grid[i] - t_grid[i - 1]) * (g[i] + g[i - 1]));
            }
            Some(acc)
        }
    };
    let gronwall_constant = v_integral.as_ref().map(|v| {
        let mut c: f64 = 0.0;
        for i in 1..v.len() {
            if data_norm[i] > 0.0 && v[i] > 0.0 {
                c = c.max((solution_norm[i] / data_norm[i]).ln() / v[i]);
            }
        }
        c
    });
    Ok(TransportSolution {
        times: t_grid.to_vec(),
        series,
        report: TransportReport {
            solution_norm,
            data_norm,
            v_integral,
            gronwall_constant,
            accepted_steps: accepted,
            rejected_steps: rejected,
        },
    })
}

fn check_velocity(v: &SpectralField, grid: &TorusGrid) -> Result<()> {
    if v.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if v.components() != grid.dim() {
        return Err(Error::InvalidArgument("velocity must be a vector field".into()));
    }
    Ok(())
}

/// `‖∇v‖_{Ḃ^{d/2}_{2,∞}} + ‖∇v‖_{L^∞}`.
fn gradient_size(v: &SpectralField, d: usize) -> Result<f64> {
    let parts: Vec<SpectralField> = (0..d).map(|i| partial(v, i)).collect();
    let grad = SpectralField::stack(&parts)?;
    let bn = block_norms(&grad, 2.0)?;
    Ok(weighted_lr(&bn, d as f64 / 2.0, f64::INFINITY) + grad.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_velocity_translates() {
        let g = TorusGrid::new(1, 32, 1.0).unwrap();
        let a0 = SpectralField::from_fn(&g, |x| x[0].sin() + 0.3 * (2.0 * x[0]).cos());
        let c = 0.7;
        let v = SpectralField::from_vector_fn(&g, 1, move |_, o| o[0] = c);
        let t = [0.0, 0.5, 1.0];
        let sol = transport_solve(&Velocity::Steady(v), &a0, None, 0.2, &t, &TransportOptions::default()).unwrap();
        let tf = 1.0;
        let want = SpectralField::from_fn(&g, move |x| {
            let y = x[0] - c * tf;
            (y.sin() + 0.3 * (2.0 * y).cos()) * (-0.2 * tf).exp()
        });
        let err = sol.series[2].sub(&want).unwrap().l2_norm() / want.l2_norm();
        assert!(err < 1e-8, "{err}");
        assert_eq!(sol.report.gronwall_constant, Some(0.0));
    }
}
