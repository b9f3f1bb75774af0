//! Spectrum and Lyapunov decay of the linearized mode system.

use num_complex::Complex64;
use spectral_cns::linear::modes::{lyapunov_decay_check, mode_spectrum};

fn main() -> spectral_cns::Result<()> {
    for rho in [0.5, 1.0, 1.9, 2.0, 2.1, 4.0, 10.0] {
        let sp = mode_spectrum(rho);
        println!("ρ = {rho:4}: λ+ = {:.6}, λ- = {:.6} ({:?})", sp.lambda_plus, sp.lambda_minus, sp.regime);
    }
    for rho in [0.1, 1.0, 10.0] {
        let rep = lyapunov_decay_check(Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), rho, 20.0, 400)?;
        println!(
            "ρ = {rho}: identity residual {:.1e}, worst bound ratio {:.4}",
            rep.identity_residual, rep.worst_bound_ratio
        );
    }
    Ok(())
}
