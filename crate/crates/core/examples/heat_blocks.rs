//! Heat flow on each dyadic block and the maximal regularity ratio.

use spectral_cns::data::random_band_limited;
use spectral_cns::linear::{heat_block_constant, heat_solve};
use spectral_cns::littlewood_paley::DyadicBlocks;
use spectral_cns::spectral::TorusGrid;

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(1, 64, 1.0)?;
    let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 0.0, 3)?;
    let times: Vec<f64> = (0..=20).map(|i| 0.025 * i as f64).collect();
    let blocks = DyadicBlocks::new(&u);
    for j in blocks.j_min..=blocks.j_max {
        let b = blocks.block(j).expect("in range");
        let c2 = heat_block_constant(b, j, &times, 9.0 / 16.0, 2.0)?;
        let cinf = heat_block_constant(b, j, &times, 9.0 / 16.0, f64::INFINITY)?;
        println!("j = {j:2}: L2 ratio {c2:.6}, Linf ratio {cinf:.6}");
    }
    for p in [2.0, 4.0] {
        let sol = heat_solve(&u, None, &times, 1.0, 0.0, p)?;
        println!("p = {p}: maximal regularity ratio {:.4}", sol.report.ratio);
    }
    Ok(())
}
