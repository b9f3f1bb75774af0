//! Small-data global run: tracks `X₂(t)/X₂(0)`, the density floor and mass.

use std::time::Instant;

use spectral_cns::cns::{cns_run, CnsParams, RunOptions};
use spectral_cns::data::{make_state, DataRecipe};
use spectral_cns::spectral::TorusGrid;

fn main() -> spectral_cns::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let t_final: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(20.0);
    let grid = TorusGrid::new(2, n, 16.0)?;
    let state = make_state(&grid, &DataRecipe::Gaussian { width: 2.0 }, Some(1e-2), 2.0, 0, 1)?;
    let opts = RunOptions {
        t_final,
        output_dt: 1.0,
        max_step: 0.5,
        keep_trajectory: false,
        ..RunOptions::default()
    };
    let clock = Instant::now();
    let run = cns_run(&state, &CnsParams::default(), &opts)?;
    for s in run.monitors.samples.iter().step_by(5) {
        println!(
            "t={:7.2} X2={:.4e} ratio={:.3} L2={:.4e} min_rho={:.5} mass={:.2e} Dlow={:.3e} Dtgrad={:.3e}",
            s.t,
            s.xp,
            s.xp / run.x_p0,
            s.besov_s0_low,
            s.min_density,
            s.mass_mean,
            s.d_high_alpha,
            s.d_tnablau_high
        );
    }
    println!(
        "stop={:?} steps={} rejected={} max ratio={:.3} wall={:.1}s",
        run.stop,
        run.accepted_steps,
        run.rejected_steps,
        run.monitors.xp_growth(),
        clock.elapsed().as_secs_f64()
    );
    Ok(())
}
