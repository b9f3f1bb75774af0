//! Incompressible reference solver `∂_t v + P(v·∇v) = μΔv`, `div v = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::integrator::REJECTION_RATIO;
use super::run::{output_times, MAX_HALVINGS};
use crate::error::{Error, Result};
use crate::linear::phi::phi_scalar;
use crate::spectral::{helmholtz_project, PaddedSamples, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncompressibleOptions {
    pub t_final: f64,
    pub output_dt: f64,
    pub max_step: f64,
    pub cfl: f64,
}

impl Default for IncompressibleOptions {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            output_dt: 0.1,
            max_step: 0.05,
            cfl: 0.5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IncompressibleRun {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    /// `‖v(t)‖_{L²}` at the output times.
    pub energy: Vec<f64>,
    pub max_divergence: f64,
}

/// `-P(v·∇v)` and `max |v|` from one padded pass.
fn advection(v: &SpectralField) -> Result<(SpectralField, f64)> {
    let grid = v.grid();
    let d = grid.dim();
    let mut arrays: Vec<Vec<Complex64>> = (0..d).map(|i| v.coeffs(i).to_vec()).collect();
    for i in 0..d {
        for j in 0..d {
            arrays.push(
                v.coeffs(i)
                    .iter()
                    .enumerate()
                    .map(|(flat, z)| z * Complex64::new(0.0, grid.wave_vector_sym(flat)[j]))
                    .collect(),
            );
        }
    }
    let refs: Vec<&[Complex64]> = arrays.iter().map(Vec::as_slice).collect();
    let ps = PaddedSamples::from_arrays(grid, &refs);
    let vals = ps.map(d + 1, |x, o| {
        let mut speed = 0.0;
        for i in 0..d {
            speed += x[i] * x[i];
            o[i] = -(0..d).map(|j| x[j] * x[d + i * d + j]).sum::<f64>();
        }
        o[d] = speed;
    });
    let speed = vals[d].iter().copied().fold(0.0, f64::max).sqrt();
    let (p, _) = helmholtz_project(&ps.to_field(&vals[..d]))?;
    Ok((p, speed))
}

fn heat_apply(v: &SpectralField, mu: f64, h: f64, which: usize) -> SpectralField {
    let grid = v.grid();
    let mut out = v.clone();
    for c in 0..v.components() {
        let cs = out.coeffs_mut(c);
        for (flat, z) in cs.iter_mut().enumerate() {
            *z *= if grid.is_nyquist(flat) {
                0.0
            } else {
                phi_scalar(-mu * grid.wave_norm_sq(flat) * h)[which]
            };
        }
    }
    out
}

/// One ETD2 step; returns the new field and `max |v|` at the start.
pub fn incompressible_step(v: &SpectralField, mu: f64, h: f64) -> Result<(SpectralField, f64)> {
    if !(mu > 0.0 && h > 0.0) {
        return Err(Error::InvalidArgument(format!("need μ > 0 and h > 0 (μ = {mu}, h = {h})")));
    }
    let (n0, speed) = advection(v)?;
    let mut mid = heat_apply(v, mu, 0.5 * h, 0);
    mid.axpy_in_place(0.5 * h, &heat_apply(&n0, mu, 0.5 * h, 1));
    let (n1, _) = advection(&mid)?;
    let lin = heat_apply(v, mu, h, 0);
    let mut inc = heat_apply(&n0, mu, h, 1).scaled(h);
    inc.axpy_in_place(-2.0 * h, &heat_apply(&n0, mu, h, 2));
    inc.axpy_in_place(2.0 * h, &heat_apply(&n1, mu, h, 2));
    let (ln, inn) = (lin.l2_norm(), inc.l2_norm());
    if inn > REJECTION_RATIO * ln && inn > 0.0 {
        return Err(Error::StepRejected { suggested: 0.5 * h });
    }
    Ok((lin.add(&inc)?, speed))
}

/// Runs from `v0` (projected onto divergence-free fields first).
pub fn incompressible_run(v0: &SpectralField, mu: f64, opts: &IncompressibleOptions) -> Result<IncompressibleRun> {
    let grid = v0.grid().clone();
    if v0.components() != grid.dim() || !v0.is_real() {
        return Err(Error::InvalidArgument("initial velocity must be a real vector field".into()));
    }
    if !(opts.t_final > 0.0 && opts.output_dt > 0.0 && opts.max_step > 0.0 && opts.cfl > 0.0) {
        return Err(Error::InvalidArgument("time options must be positive".into()));
    }
    let (mut v, _) = helmholtz_project(&super::state::strip_nyquist(v0))?;
    let k_max = grid.nyquist();
    let times = output_times(opts.t_final, opts.output_dt);
    let mut states = vec![v.clone()];
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let base = (span / opts.max_step).ceil().max(1.0) as usize;
        let speed = v.sup_norm();
        let mut level = 0i32;
        while span / base as f64 * 0.5f64.powi(level) * speed * k_max > opts.cfl && level < 40 {
            level += 1;
        }
        let mut remaining = base << level;
        let mut halvings = 0;
        while remaining > 0 {
            let h = span / base as f64 * 0.5f64.powi(level);
            match incompressible_step(&v, mu, h) {
                Ok((next, _)) => {
                    v = next;
                    remaining -= 1;
                    halvings = 0;
                }
                Err(Error::StepRejected { .. }) => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::RejectionCascade { halvings, t: w[0] });
                    }
                    level += 1;
                    remaining *= 2;
                }
                Err(e) => return Err(e),
            }
        }
        states.push(v.clone());
    }
    let max_divergence = states
        .iter()
        .map(|s| crate::spectral::divergence(s).map(|d| d.max_coeff()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(IncompressibleRun {
        energy: states.iter().map(SpectralField::l2_norm).collect(),
        times,
        states,
        max_divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::taylor_green;
    use crate::spectral::TorusGrid;

    #[test]
    fn taylor_green_is_exact() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let v0 = taylor_green(&g, 1.0).unwrap();
        let mu = 0.1;
        let run = incompressible_run(&v0, mu, &IncompressibleOptions::default()).unwrap();
        for (t, v) in run.times.iter().zip(&run.states) {
            let want = v0.scaled((-2.0 * mu * t).exp());
            assert!(v.sub(&want).unwrap().max_coeff() < 1e-8);
        }
    }

    #[test]
    fn zero_stays_zero_and_energy_decreases() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let run = incompressible_run(&SpectralField::zeros(&g, 2), 0.1, &IncompressibleOptions::default()).unwrap();
        assert_eq!(run.states.last().unwrap().max_coeff(), 0.0);
        let v0 = crate::data::random_band_limited(&g, 2, 1.0, 4.0, 1.0, 5).unwrap();
        let run = incompressible_run(&v0, 0.05, &IncompressibleOptions::default()).unwrap();
        for w in run.energy.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        assert!(run.max_divergence < 1e-12);
    }
}
