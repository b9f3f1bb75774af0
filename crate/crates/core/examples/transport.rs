//! Transport by a steady divergence-free velocity with the Gronwall constant.

use spectral_cns::harness::experiments::smooth_random;
use spectral_cns::linear::{transport_solve, TransportOptions, Velocity};
use spectral_cns::spectral::{helmholtz_project, TorusGrid};

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 32, 1.0)?;
    let (v, _) = helmholtz_project(&smooth_random(&grid, 2, 0.5, 1)?)?;
    let a0 = smooth_random(&grid, 1, 1.0, 2)?;
    let times: Vec<f64> = (0..=10).map(|i| 0.1 * i as f64).collect();
    let sol = transport_solve(&Velocity::Steady(v), &a0, None, 0.0, &times, &TransportOptions::default())?;
    for (t, a) in times.iter().zip(&sol.series) {
        println!("t = {t:.1}: ‖a‖_L2 = {:.10}", a.l2_norm());
    }
    println!("Gronwall constant {:?}", sol.report.gronwall_constant);
    Ok(())
}
