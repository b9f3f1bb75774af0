//! Splits a random field into dyadic blocks and prints its Besov norms.

use spectral_cns::data::random_band_limited;
use spectral_cns::littlewood_paley::{besov_norm, block_norms, resolvable_range, DyadicBlocks, NormSpec};
use spectral_cns::spectral::TorusGrid;

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 64, 1.0)?;
    let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 1.0, 7)?;
    let (j_min, j_max) = resolvable_range(&grid);
    println!("resolvable blocks j = {j_min}..={j_max}");
    for (j, n) in block_norms(&u, 2.0)?.iter() {
        println!("  ‖Δ_{j} u‖_L2 = {n:.4e}");
    }
    let rec = DyadicBlocks::new(&u).reconstruct();
    println!("reconstruction error {:.2e}", rec.sub(&u)?.l2_norm() / u.l2_norm());
    for s in [-1.0, 0.0, 1.0] {
        println!("‖u‖_B^{s}_2,1 = {:.4e}", besov_norm(&u, &NormSpec::besov(s, 2.0, 1.0))?);
    }
    Ok(())
}
