//! Fourier multipliers, Helmholtz projection and dealiased products.

use spectral_cns::spectral::{divergence, helmholtz_project, lebesgue_norm, SpectralField, TorusGrid};
use spectral_cns::spectral::{dealiased_product, gradient};

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 32, 2.0)?;
    let u = SpectralField::from_vector_fn(&grid, 2, |x, o| {
        o[0] = (0.5 * x[0]).sin() + (x[1]).cos();
        o[1] = (0.5 * x[1]).sin() * (0.5 * x[0]).cos();
    });
    let (p, q) = helmholtz_project(&u)?;
    println!("‖div Pu‖ = {:.2e}", divergence(&p)?.l2_norm());
    println!("‖Pu‖² + ‖Qu‖² - ‖u‖² = {:.2e}", p.l2_norm().powi(2) + q.l2_norm().powi(2) - u.l2_norm().powi(2));
    let f = SpectralField::from_fn(&grid, |x| (0.5 * x[0]).sin());
    let g = gradient(&f)?;
    println!("‖∇f‖_L∞ = {:.6}", lebesgue_norm(&g, f64::INFINITY)?);
    let ff = dealiased_product(&f, &f)?;
    println!("mean of sin² = {:.6}", ff.mean(0).re);
    Ok(())
}
