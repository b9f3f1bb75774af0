//! Long-time decay of a small Gaussian perturbation on a large box.

use spectral_cns::cns::{decay_run, CnsParams, DecayOptions};
use spectral_cns::data::{make_state, DataRecipe};
use spectral_cns::spectral::TorusGrid;

fn main() -> spectral_cns::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let grid = TorusGrid::new(2, n, 16.0)?;
    let state = make_state(&grid, &DataRecipe::Gaussian { width: 2.0 }, Some(1e-2), 2.0, 0, 1)?;
    let opts = DecayOptions {
        t_final: 200.0,
        output_dt: 1.0,
        max_step: 0.5,
        nonlinear: true,
        k0: 0,
        window: None,
    };
    let rep = decay_run(&state, &CnsParams::default(), &opts)?;
    println!("T_gap = {}, window {:?}", rep.t_gap, rep.window);
    for s in &rep.slopes {
        println!("{}: slope {:.4} ± {:.4}", s.quantity, s.fit.slope, s.fit.stderr);
    }
    println!("exponential regime from {:?}, late rate {:.4e}", rep.transition, rep.late_rate);
    Ok(())
}
