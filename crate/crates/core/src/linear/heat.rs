//! Heat equation `∂_t u - κΔu = f` solved mode by mode.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::modes::check_grid;
use super::phi::phi_scalar;
use crate::error::{Error, Result};
use crate::littlewood_paley::{block_norms, tilde_from_blocks_at, weighted_lr, BlockNorms};
use crate::spectral::SpectralField;

/// Maximal-regularity ratio
/// `(‖u‖_{L̃^∞Ḃ^s_{p,1}} + κ‖u‖_{L̃^1Ḃ^{s+2}_{p,1}}) / (‖u₀‖_{Ḃ^s_{p,1}} + ‖f‖_{L̃^1Ḃ^s_{p,1}})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegularityReport {
    pub s: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct HeatSolution {
    pub times: Vec<f64>,
    pub series: Vec<SpectralField>,
    pub report: RegularityReport,
}

pub(crate) fn check_series(series: Option<&[SpectralField]>, u0: &SpectralField, len: usize) -> Result<()> {
    if let Some(f) = series {
        if f.len() != len {
            return Err(Error::SizeMismatch {
                expected: len,
                got: f.len(),
            });
        }
        for x in f {
            if x.grid() != u0.grid() {
                return Err(Error::GridMismatch);
            }
            if x.components() != u0.components() {
                return Err(Error::SizeMismatch {
                    expected: u0.components(),
                    got: x.components(),
                });
            }
        }
    }
    Ok(())
}

/// One exact step for piecewise-linear `f` on `[t, t + h]`.
pub(crate) fn heat_step(u: &SpectralField, f: Option<(&SpectralField, &SpectralField)>, kappa: f64, h: f64) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for flat in 0..grid.len() {
        let z = -kappa * grid.wave_norm_sq(flat) * h;
        let [e, p1, p2] = phi_scalar(z);
        for c in 0..u.components() {
            let mut v = u.coeffs(c)[flat] * e;
            if let Some((f0, f1)) = f {
                let g0 = f0.coeffs(c)[flat];
                let g1 = f1.coeffs(c)[flat];
                v += (g0 * p1 + (g1 - g0) * p2) * h;
            }
            out.coeffs_mut(c)[flat] = v;
        }
    }
    out.set_real(u.is_real() && f.map_or(true, |(a, b)| a.is_real() && b.is_real()));
    out
}

/// Solves on `t_grid` with `f` sampled there (linear in between).
pub fn heat_solve(
    u0: &SpectralField,
    f_series: Option<&[SpectralField]>,
    t_grid: &[f64],
    kappa: f64,
    s: f64,
    p: f64,
) -> Result<HeatSolution> {
    check_grid(t_grid)?;
    check_series(f_series, u0, t_grid.len())?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("diffusivity {kappa} must be positive")));
    }
    let mut series = Vec::with_capacity(t_grid.len());
    series.push(u0.clone());
    for i in 1..t_grid.len() {
        let h = t_grid[i] - t_grid[i - 1];
        let f = f_series.map(|f| (&f[i - 1], &f[i]));
        let next = heat_step(&series[i - 1], f, kappa, h);
        series.push(next);
    }
    let report = regularity_report(&series, f_series, t_grid, kappa, s, p)?;
    Ok(HeatSolution {
        times: t_grid.to_vec(),
        series,
        report,
    })
}

fn regularity_report(
    series: &[SpectralField],
    f_series: Option<&[SpectralField]>,
    times: &[f64],
    kappa: f64,
    s: f64,
    p: f64,
) -> Result<RegularityReport> {
    let bn: Vec<BlockNorms> = series.iter().map(|u| block_norms(u, p)).collect::<Result<_>>()?;
    let sup = if times.len() == 1 {
        weighted_lr(&bn[0], s, 1.0)
    } else {
        tilde_from_blocks_at(&bn, times, s, f64::INFINITY, 1.0)
    };
    let integral = if times.len() > 1 {
        tilde_from_blocks_at(&bn, times, s + 2.0, 1.0, 1.0)
    } else {
        0.0
    };
    let lhs = sup + kappa * integral;
    let mut rhs = weighted_lr(&bn[0], s, 1.0);
    if let (Some(f), true) = (f_series, times.len() > 1) {
        let fb: Vec<BlockNorms> = f.iter().map(|x| block_norms(x, p)).collect::<Result<_>>()?;
        rhs += tilde_from_blocks_at(&fb, times, s, 1.0, 1.0);
    }
    Ok(RegularityReport {
        s,
        p,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

/// Largest `‖e^{tΔ}Δ̇_j u‖_{L^p} / (e^{-c2^{2j}t}‖Δ̇_j u‖_{L^p})` over `times`.
pub fn heat_block_constant(block: &SpectralField, j: i32, times: &[f64], c: f64, p: f64) -> Result<f64> {
    let base = crate::spectral::lebesgue_norm(block, p)?;
    if base == 0.0 {
        return Ok(0.0);
    }
    let grid = block.grid();
    let mut worst: f64 = 0.0;
    for &t in times {
        let coeffs = block
            .all_coeffs()
            .iter()
            .map(|cs| {
                cs.iter()
                    .enumerate()
                    .map(|(flat, z)| z * (-grid.wave_norm_sq(flat) * t).exp())
                    .collect::<Vec<Complex64>>()
            })
            .collect();
        let evolved = SpectralField::from_coeffs(grid, coeffs, block.is_real())?;
        let num = crate::spectral::lebesgue_norm(&evolved, p)?;
        let den = (-c * 4f64.powi(j) * t).exp() * base;
        worst = worst.max(num / den);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn eigenfunction_decays() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let u0 = SpectralField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).cos());
        let t = [0.0, 0.1, 0.3];
        let sol = heat_solve(&u0, None, &t, 1.0, 0.0, 2.0).unwrap();
        for (u, t) in sol.series.iter().zip(t) {
            let want = u0.scaled((-5.0 * t).exp());
            assert!(u.sub(&want).unwrap().max_coeff() < 1e-12);
        }
    }

    #[test]
    fn constant_source_matches_ode() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let u0 = SpectralField::zeros(&g, 1);
        let f = SpectralField::from_fn(&g, |x| (3.0 * x[0]).sin());
        let t: Vec<f64> = (0..5).map(|i| 0.07 * i as f64).collect();
        let fs = vec![f.clone(); t.len()];
        let sol = heat_solve(&u0, Some(&fs), &t, 1.0, 0.0, 2.0).unwrap();
        let tf = *t.last().unwrap();
        let want = f.scaled((1.0 - (-9.0 * tf).exp()) / 9.0);
        assert!(sol.series.last().unwrap().sub(&want).unwrap().max_coeff() < 1e-13);
    }

    #[test]
    fn rejects_non_increasing_grid() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let u0 = SpectralField::zeros(&g, 1);
        assert!(heat_solve(&u0, None, &[0.0, 0.0], 1.0, 0.0, 2.0).is_err());
    }
}
