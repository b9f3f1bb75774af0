//! Whole-space decay of the linearized system from radial profiles.

use spectral_cns::harness::{fit_decay_slope, log_times};
use spectral_cns::linear::{linear_decay_profile, RadialData};

fn main() -> spectral_cns::Result<()> {
    let times = log_times(10.0, 1e3, 41);
    for d in [2, 3] {
        let data = RadialData::indicator(d, 1.0, 1.0, 0.0)?;
        let curves = linear_decay_profile(&data, &[0.0, 1.0], &times, 0)?;
        for (k, s) in [0.0, 1.0].iter().enumerate() {
            let fit = fit_decay_slope(&times, &curves.plain[k], (10.0, 1e3))?;
            println!("d = {d}, s = {s}: slope {:.4} ± {:.4}", fit.slope, fit.stderr);
        }
    }
    Ok(())
}
