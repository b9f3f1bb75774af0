//! Lamé flow with constant and with variable coefficients.

use spectral_cns::harness::experiments::smooth_random;
use spectral_cns::linear::{lame_solve, LameCoefficients, LameOptions, VariableLame};
use spectral_cns::spectral::{SpectralField, TorusGrid};

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 32, 1.0)?;
    let u0 = smooth_random(&grid, 2, 1.0, 1)?;
    let times: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
    let opts = LameOptions::default();
    let constant = lame_solve(&u0, None, &LameCoefficients::Constant { lambda: 0.0, mu: 1.0 }, &times, &opts)?;
    let one = SpectralField::from_fn(&grid, |_| 1.0);
    let b = one.sub(&smooth_random(&grid, 1, 0.3, 2)?)?;
    let coeffs = VariableLame {
        a: b.clone(),
        b,
        mu: one.clone(),
        lambda: SpectralField::zeros(&grid, 1),
    };
    let variable = lame_solve(&u0, None, &LameCoefficients::Variable(coeffs), &times, &opts)?;
    for (i, t) in times.iter().enumerate() {
        println!(
            "t = {t:.2}: constant {:.5e}, variable {:.5e}",
            constant.series[i].l2_norm(),
            variable.series[i].l2_norm()
        );
    }
    if let Some(d) = variable.diagnostics {
        println!("positivity {:.3}, smallness {:.3}", d.positivity, d.smallness);
    }
    Ok(())
}
