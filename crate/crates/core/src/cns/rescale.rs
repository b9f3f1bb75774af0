//! Scaling `(ρ, u)(t, x) ↦ (ρ, ℓu)(ℓ²t, ℓx)` with pressure `ℓ²P`.

use super::params::CnsParams;
use super::state::CnsState;
use crate::error::{Error, Result};

/// `m` with `ℓ = 2^m`, or an error for non-dyadic `ℓ`.
pub fn dyadic_exponent(ell: f64) -> Result<i32> {
    if !(ell > 0.0 && ell.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale ℓ = {ell} must be positive")));
    }
    let m = ell.log2();
    if (m - m.round()).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("scale ℓ = {ell} is not a power of two")));
    }
    Ok(m.round() as i32)
}

/// Rescaled state on the box of scale `M/ℓ` (same samples) at time `t/ℓ²`,
/// with the pressure multiplied by `ℓ²`.
pub fn rescale_state(state: &CnsState, params: &CnsParams, ell: f64) -> Result<(CnsState, CnsParams)> {
    let m = dyadic_exponent(ell)?;
    let ell = 2f64.powi(m);
    let grid = state.grid();
    let new_grid = grid.with_box_scale(grid.box_scale() / ell)?;
    let vol = ell.powi(-(grid.dim() as i32));
    let a = state.a.regrid(&new_grid, vol);
    let u = state.u.regrid(&new_grid, ell * vol);
    let out = CnsState {
        a,
        u,
        t: state.t / (ell * ell),
    };
    Ok((out, params.with_pressure_scaled(ell * ell)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cns::linear_propagate;
    use crate::spectral::{SpectralField, TorusGrid};

    fn sample(g: &TorusGrid) -> CnsState {
        let m = g.box_scale();
        let a = SpectralField::from_fn(g, move |x| 0.02 * (x[0] / m).sin() * (2.0 * x[1] / m).cos());
        let u = SpectralField::from_vector_fn(g, 2, move |x, o| {
            o[0] = 0.03 * (x[1] / m).sin();
            o[1] = 0.01 * ((x[0] + x[1]) / m).cos();
        });
        CnsState::new(a, u, 0.0).unwrap()
    }

    #[test]
    fn unit_scale_is_identity() {
        let g = TorusGrid::new(2, 16, 2.0).unwrap();
        let s = sample(&g);
        let p = CnsParams::default();
        let (r, q) = rescale_state(&s, &p, 1.0).unwrap();
        assert_eq!(r.a.all_coeffs(), s.a.all_coeffs());
        assert_eq!(r.u.all_coeffs(), s.u.all_coeffs());
        assert_eq!(q, p);
    }

    #[test]
    fn non_dyadic_scale_is_rejected() {
        let g = TorusGrid::new(2, 16, 4.0).unwrap();
        assert!(rescale_state(&sample(&g), &CnsParams::default(), 3.0).is_err());
    }

    #[test]
    fn samples_are_preserved() {
        let g = TorusGrid::new(2, 16, 4.0).unwrap();
        let s = sample(&g);
        let (r, _) = rescale_state(&s, &CnsParams::default(), 2.0).unwrap();
        let (a0, a1) = (s.a.real_samples(), r.a.real_samples());
        let (u0, u1) = (s.u.real_samples(), r.u.real_samples());
        for i in 0..g.len() {
            assert!((a0[0][i] - a1[0][i]).abs() < 1e-14);
            assert!((2.0 * u0[1][i] - u1[1][i]).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_flow_commutes_with_scaling() {
        let g = TorusGrid::new(2, 16, 4.0).unwrap();
        let s = sample(&g);
        let p = CnsParams::default();
        let t = 3.0;
        let ell = 2.0;
        let (evolved, _) = rescale_state(&linear_propagate(&s, &p, t).unwrap(), &p, ell).unwrap();
        let (r, q) = rescale_state(&s, &p, ell).unwrap();
        let other = linear_propagate(&r, &q, t / (ell * ell)).unwrap();
        let diff = evolved.distance(&other).unwrap() / evolved.l2_norm();
        assert!(diff < 1e-12, "{diff}");
    }
}
