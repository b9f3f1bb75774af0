//! Bony decomposition of a product into two paraproducts and a remainder.

use spectral_cns::data::random_band_limited;
use spectral_cns::paracalculus::bony;
use spectral_cns::spectral::{dealiased_product, TorusGrid};

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 64, 1.0)?;
    let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 1.0, 1)?;
    let v = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 1.0, 2)?;
    let parts = bony(&u, &v)?;
    let uv = dealiased_product(&u, &v)?;
    println!("‖T_u v‖ = {:.4e}", parts.t_uv.l2_norm());
    println!("‖T_v u‖ = {:.4e}", parts.t_vu.l2_norm());
    println!("‖R(u,v)‖ = {:.4e}", parts.r_uv.l2_norm());
    let defect = uv.sub(&parts.sum())?.l2_norm() / (u.l2_norm() * v.l2_norm());
    println!("relative defect {defect:.2e}");
    Ok(())
}
