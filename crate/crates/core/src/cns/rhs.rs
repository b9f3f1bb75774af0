//! Nonlinear terms `f = -div(au)` and `g = -u·∇u - I(a)Au - k(a)∇a`.

use num_complex::Complex64;

use super::params::CnsParams;
use super::state::CnsState;
use crate::error::{Error, Result};
use crate::spectral::{PaddedSamples, SpectralField, TorusGrid};

/// Right-hand side with the padded-grid extrema seen while assembling it.
#[derive(Clone, Debug)]
pub struct RhsEval {
    pub f: SpectralField,
    pub g: SpectralField,
    /// `min(1 + a)` over padded samples.
    pub min_density: f64,
    /// `max |u|` over padded samples.
    pub max_speed: f64,
}

/// `Au = μΔu + (λ+μ)∇div u` per mode.
pub fn lame_apply(u: &SpectralField, params: &CnsParams) -> SpectralField {
    let grid = u.grid();
    let d = grid.dim();
    let mut out = SpectralField::zeros(grid, d);
    out.set_real(u.is_real());
    let lm = params.lambda + params.mu;
    for flat in 0..grid.len() {
        let xi = grid.wave_vector_sym(flat);
        let r2 = grid.wave_norm_sq(flat);
        let dot: Complex64 = (0..d).map(|c| u.coeffs(c)[flat] * xi[c]).sum();
        for c in 0..d {
            out.coeffs_mut(c)[flat] = -u.coeffs(c)[flat] * (params.mu * r2) - dot * (lm * xi[c]);
        }
    }
    out
}

fn derivative(grid: &TorusGrid, coeffs: &[Complex64], axis: usize) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .map(|(flat, z)| z * Complex64::new(0.0, grid.wave_vector_sym(flat)[axis]))
        .collect()
}

/// `I(a)` and `k(a)` truncated to the base grid, plus `min(1 + a)`.
fn composed_maps(a: &SpectralField, params: &CnsParams) -> Result<(SpectralField, SpectralField, f64)> {
    let ps = PaddedSamples::new(&[a])?;
    let min_a = ps.min(0);
    if 1.0 + min_a <= 0.0 {
        return Err(Error::DensityPositivity(1.0 + min_a));
    }
    let p = *params;
    let vals = ps.map(2, |x, o| {
        o[0] = CnsParams::inverse_density(x[0]);
        o[1] = p.k(x[0]);
    });
    let ia = ps.to_field(&vals[..1]);
    let ka = ps.to_field(&vals[1..]);
    Ok((ia, ka, 1.0 + min_a))
}

/// Assembles `(f, g)`: `I(a)` and `k(a)` are composed first, then every
/// product is taken in one padded pass over `a, u, ∇u, Au, ∇a, I(a), k(a)`.
pub fn nonlinear_rhs(state: &CnsState, params: &CnsParams) -> Result<RhsEval> {
    let grid = state.grid();
    let d = grid.dim();
    let (ia, ka, min_density) = composed_maps(&state.a, params)?;
    let au = lame_apply(&state.u, params);
    let mut arrays: Vec<Vec<Complex64>> = Vec::with_capacity(3 + d + d * d + 2 * d);
    arrays.push(state.a.coeffs(0).to_vec());
    for i in 0..d {
        arrays.push(state.u.coeffs(i).to_vec());
    }
    // ∂_j u_i at index 1 + d + i*d + j
    for i in 0..d {
        for j in 0..d {
            arrays.push(derivative(grid, state.u.coeffs(i), j));
        }
    }
    for i in 0..d {
        arrays.push(au.coeffs(i).to_vec());
    }
    for j in 0..d {
        arrays.push(derivative(grid, state.a.coeffs(0), j));
    }
    arrays.push(ia.coeffs(0).to_vec());
    arrays.push(ka.coeffs(0).to_vec());
    let refs: Vec<&[Complex64]> = arrays.iter().map(Vec::as_slice).collect();
    let ps = PaddedSamples::from_arrays(grid, &refs);
    let (off_du, off_au, off_da) = (1 + d, 1 + d + d * d, 1 + 2 * d + d * d);
    let off_maps = 1 + 3 * d + d * d;
    // outputs: a·u (d), g (d), |u|² (1)
    let vals = ps.map(2 * d + 1, |x, o| {
        let a = x[0];
        let (ia, ka) = (x[off_maps], x[off_maps + 1]);
        let mut speed = 0.0;
        for i in 0..d {
            let ui = x[1 + i];
            speed += ui * ui;
            o[i] = a * ui;
            let mut adv = 0.0;
            for j in 0..d {
                adv += x[1 + j] * x[off_du + i * d + j];
            }
            o[d + i] = -adv - ia * x[off_au + i] - ka * x[off_da + i];
        }
        o[2 * d] = speed;
    });
    let max_speed = vals[2 * d].iter().copied().fold(0.0, f64::max).sqrt();
    let flux = ps.to_field(&vals[..d]);
    let g = ps.to_field(&vals[d..2 * d]);
    let mut f = SpectralField::zeros(grid, 1);
    {
        let fc = f.coeffs_mut(0);
        for (flat, z) in fc.iter_mut().enumerate() {
            let xi = grid.wave_vector_sym(flat);
            let div: Complex64 = (0..d).map(|i| flux.coeffs(i)[flat] * Complex64::new(0.0, xi[i])).sum();
            *z = -div;
        }
    }
    Ok(RhsEval {
        f,
        g,
        min_density,
        max_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dealiased_product, divergence};

    fn grid() -> TorusGrid {
        TorusGrid::new(2, 16, 1.0).unwrap()
    }

    fn velocity(g: &TorusGrid) -> SpectralField {
        SpectralField::from_vector_fn(g, 2, |x, o| {
            o[0] = 0.3 * x[1].sin() + 0.1 * (x[0] + x[1]).cos();
            o[1] = 0.2 * (2.0 * x[0]).cos();
        })
    }

    #[test]
    fn zero_density_gives_advection_only() {
        let g = grid();
        let u = velocity(&g);
        let s = CnsState::new(SpectralField::zeros(&g, 1), u.clone(), 0.0).unwrap();
        let r = nonlinear_rhs(&s, &CnsParams::default()).unwrap();
        assert!(r.f.max_coeff() < 1e-12);
        let adv = crate::paracalculus::advect(&u, &u).unwrap().scaled(-1.0);
        assert!(r.g.sub(&adv).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn zero_velocity_gives_pressure_term_only() {
        let g = grid();
        let a = SpectralField::from_fn(&g, |x| 0.2 * x[0].cos() * x[1].sin());
        let s = CnsState::new(a.clone(), SpectralField::zeros(&g, 2), 0.0).unwrap();
        let p = CnsParams::default();
        let r = nonlinear_rhs(&s, &p).unwrap();
        assert!(r.f.max_coeff() < 1e-12);
        let ka = crate::paracalculus::compose(&p.k_map(), &a).unwrap();
        let want = dealiased_product(&ka, &crate::spectral::gradient(&a).unwrap()).unwrap().scaled(-1.0);
        assert!(r.g.sub(&want).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn mass_flux_matches_product_path() {
        let g = grid();
        let a = SpectralField::from_fn(&g, |x| 0.1 * (x[0] - x[1]).sin());
        let u = velocity(&g);
        let s = CnsState::new(a.clone(), u.clone(), 0.0).unwrap();
        let r = nonlinear_rhs(&s, &CnsParams::default()).unwrap();
        let want = divergence(&dealiased_product(&a, &u).unwrap()).unwrap().scaled(-1.0);
        assert!(r.f.sub(&want).unwrap().max_coeff() < 1e-12);
        assert!(r.f.mean(0).norm() < 1e-14);
    }

    #[test]
    fn vacuum_is_rejected() {
        let g = grid();
        let a = SpectralField::from_fn(&g, |x| -1.2 * x[0].cos().powi(2));
        let s = CnsState::new(a, SpectralField::zeros(&g, 2), 0.0).unwrap();
        assert!(matches!(
            nonlinear_rhs(&s, &CnsParams::default()),
            Err(Error::DensityPositivity(_))
        ));
    }
}
