//! Effective velocity `w = ∇(-Δ)^{-1}(a - div u)`.

use num_complex::Complex64;

use super::state::CnsState;
use crate::spectral::SpectralField;

/// `ŵ = iξ|ξ|^{-2}(â - iξ·û)`; the mean of `a` is dropped.
pub fn effective_velocity(state: &CnsState) -> SpectralField {
    let grid = state.grid();
    let d = grid.dim();
    let mut w = SpectralField::zeros(grid, d);
    for flat in 0..grid.len() {
        let r2 = grid.wave_norm_sq(flat);
        if r2 == 0.0 || grid.is_nyquist(flat) {
            continue;
        }
        let xi = grid.wave_vector(flat);
        let i = Complex64::new(0.0, 1.0);
        let div: Complex64 = (0..d).map(|c| i * xi[c] * state.u.coeffs(c)[flat]).sum();
        let s = state.a.coeffs(0)[flat] - div;
        for c in 0..d {
            w.coeffs_mut(c)[flat] = i * (xi[c] / r2) * s;
        }
    }
    w.set_real(state.a.is_real() && state.u.is_real());
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gradient, helmholtz_project, TorusGrid};

    #[test]
    fn density_mode_gives_inverse_gradient() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let flat = g.flat_index(&[2, -1]).unwrap();
        let mut a = SpectralField::zeros(&g, 1);
        a.coeffs_mut(0)[flat] = Complex64::new(1.0, 0.0);
        a.set_real(false);
        let mut u = SpectralField::zeros(&g, 2);
        u.set_real(false);
        let s = CnsState { a, u, t: 0.0 };
        let w = effective_velocity(&s);
        let xi = g.wave_vector(flat);
        for c in 0..2 {
            let want = Complex64::new(0.0, xi[c] / 5.0);
            assert!((w.coeffs(c)[flat] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn gradient_velocity_gives_q() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let phi = SpectralField::from_fn(&g, |x| (x[0] + x[1]).sin() + 0.2 * (3.0 * x[1]).cos());
        let u = gradient(&phi).unwrap();
        let s = CnsState::new(SpectralField::zeros(&g, 1), u.clone(), 0.0).unwrap();
        let (_, q) = helmholtz_project(&u).unwrap();
        let w = effective_velocity(&s);
        assert!(w.sub(&q).unwrap().max_coeff() < 1e-12);
    }
}
