//! Initial-data generators. Random recipes use ChaCha8 and are reproducible
//! from the seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cns::{initial_size, CnsState};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// Real random field with modes in `rho_lo ≤ |ξ| ≤ rho_hi`, amplitude
/// `|ξ|^{-decay}`, normalized to unit `L²` norm.
pub fn random_band_limited(
    grid: &TorusGrid,
    components: usize,
    rho_lo: f64,
    rho_hi: f64,
    decay: f64,
    seed: u64,
) -> Result<SpectralField> {
    if !(rho_hi >= rho_lo && rho_hi > 0.0) {
        return Err(Error::InvalidArgument(format!("bad band [{rho_lo}, {rho_hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![vec![Complex64::default(); grid.len()]; components];
    for c in coeffs.iter_mut() {
        for flat in 0..grid.len() {
            let r = grid.wave_norm(flat);
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if r == 0.0 || grid.is_nyquist(flat) || r < rho_lo || r > rho_hi {
                continue;
            }
            c[flat] = z * r.powf(-decay);
        }
        // Hermitian symmetrization keeps the samples real.
        let sym: Vec<Complex64> = (0..grid.len())
            .map(|flat| 0.5 * (c[flat] + c[grid.conj_index(flat)].conj()))
            .collect();
        *c = sym;
    }
    let f = SpectralField::from_coeffs(grid, coeffs, true)?;
    let n = f.l2_norm();
    if n == 0.0 {
        return Err(Error::InvalidArgument("band contains no grid modes".into()));
    }
    Ok(f.scaled(1.0 / n))
}

/// `exp(-|x - c|²/(2σ²))` with `c` the box center, minus its mean.
pub fn gaussian_bump(grid: &TorusGrid, width: f64) -> SpectralField {
    let c = PI * grid.box_scale();
    let d = grid.dim();
    let f = SpectralField::from_fn(grid, move |x| {
        let r2: f64 = x[..d].iter().map(|xi| (xi - c) * (xi - c)).sum();
        (-r2 / (2.0 * width * width)).exp()
    });
    f.without_mean()
}

/// Two-dimensional Taylor–Green vortex `(sin x₁ cos x₂, -cos x₁ sin x₂)`.
pub fn taylor_green(grid: &TorusGrid, amplitude: f64) -> Result<SpectralField> {
    if grid.dim() != 2 {
        return Err(Error::InvalidArgument("Taylor–Green data are two-dimensional".into()));
    }
    Ok(SpectralField::from_vector_fn(grid, 2, move |x, o| {
        o[0] = amplitude * x[0].sin() * x[1].cos();
        o[1] = -amplitude * x[0].cos() * x[1].sin();
    }))
}

/// Smooth periodic envelope `φ(x) = Π_i (1 + cos(x_i/M))/2` peaking at the origin.
pub fn envelope(grid: &TorusGrid) -> SpectralField {
    let m = grid.box_scale();
    let d = grid.dim();
    SpectralField::from_fn(grid, move |x| x[..d].iter().map(|xi| 0.5 * (1.0 + (xi / m).cos())).product())
}

/// `φ(x) sin(x·ω/ε) n`; `ω/ε` must land on the frequency lattice.
pub fn oscillating_velocity(grid: &TorusGrid, eps: f64, omega: &[f64], direction: &[f64]) -> Result<SpectralField> {
    let d = grid.dim();
    if omega.len() != d || direction.len() != d {
        return Err(Error::SizeMismatch {
            expected: d,
            got: omega.len().min(direction.len()),
        });
    }
    let m = grid.box_scale();
    for w in omega {
        let k = w / eps * m;
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "frequency {w}/ε = {} is not on the lattice (1/M = {})",
                w / eps,
                1.0 / m
            )));
        }
    }
    let (om, n) = (omega.to_vec(), direction.to_vec());
    let env = envelope(grid);
    let phase = SpectralField::from_vector_fn(grid, d, move |x, o| {
        let s: f64 = (0..d).map(|i| x[i] * om[i]).sum::<f64>() / eps;
        for i in 0..d {
            o[i] = s.sin() * n[i];
        }
    });
    crate::spectral::dealiased_product(&env, &phase)
}

/// Named initial-data recipes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataRecipe {
    /// Random density and velocity in the band `[rho_lo, rho_hi]`.
    RandomBand { rho_lo: f64, rho_hi: f64, decay: f64 },
    /// Mean-free Gaussian `G` of the given width: `a₀ = G`, `u₀ = G e₁`.
    Gaussian { width: f64 },
    /// Taylor–Green velocity with zero density.
    TaylorGreen,
}

/// Builds `(a₀, u₀)` from a recipe and rescales it so that `X_{p,0} = size`
/// (or leaves the unit-normalized data when `size` is `None`).
pub fn make_state(grid: &TorusGrid, recipe: &DataRecipe, size: Option<f64>, p: f64, k0: i32, seed: u64) -> Result<CnsState> {
    let d = grid.dim();
    let (a, u) = match recipe {
        DataRecipe::RandomBand { rho_lo, rho_hi, decay } => (
            random_band_limited(grid, 1, *rho_lo, *rho_hi, *decay, seed)?,
            random_band_limited(grid, d, *rho_lo, *rho_hi, *decay, seed.wrapping_add(1))?,
        ),
        DataRecipe::Gaussian { width } => {
            let a = gaussian_bump(grid, *width);
            let mut parts = vec![a.clone()];
            parts.extend((1..d).map(|_| SpectralField::zeros(grid, 1)));
            (a, SpectralField::stack(&parts)?)
        }
        DataRecipe::TaylorGreen => (SpectralField::zeros(grid, 1), taylor_green(grid, 1.0)?),
    };
    let state = CnsState::new(a, u, 0.0)?;
    match size {
        None => Ok(state),
        Some(target) => {
            let x0 = initial_size(&state, p, k0)?;
            if x0 == 0.0 {
                return Err(Error::InvalidArgument("recipe produced zero data".into()));
            }
            let s = target / x0;
            CnsState::new(state.a.scaled(s), state.u.scaled(s), 0.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_fields_are_real_and_reproducible() {
        let g = TorusGrid::new(2, 16, 2.0).unwrap();
        let f = random_band_limited(&g, 2, 0.5, 3.0, 1.0, 7).unwrap();
        let h = random_band_limited(&g, 2, 0.5, 3.0, 1.0, 7).unwrap();
        assert_eq!(f.all_coeffs(), h.all_coeffs());
        assert!(f.hermitian_residual() < 1e-14);
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn make_state_hits_requested_size() {
        let g = TorusGrid::new(2, 32, 4.0).unwrap();
        let s = make_state(&g, &DataRecipe::Gaussian { width: 1.5 }, Some(1e-2), 2.0, 0, 3).unwrap();
        assert!((initial_size(&s, 2.0, 0).unwrap() - 1e-2).abs() < 1e-12);
    }

    #[test]
    fn off_lattice_oscillation_is_rejected() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        assert!(oscillating_velocity(&g, 0.3, &[1.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(oscillating_velocity(&g, 0.25, &[1.0, 0.0], &[1.0, 0.0]).is_ok());
    }
}
