//! Iterative local existence scheme compared with the direct solver.

use spectral_cns::cns::{cns_run, local_iteration_scheme, CnsParams, LocalSchemeOptions, RunOptions};
use spectral_cns::data::{make_state, DataRecipe};
use spectral_cns::spectral::TorusGrid;

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 32, 1.0)?;
    let recipe = DataRecipe::RandomBand {
        rho_lo: 0.5,
        rho_hi: 4.0,
        decay: 1.0,
    };
    let state = make_state(&grid, &recipe, Some(1e-2), 2.0, 0, 1)?;
    let params = CnsParams::default();
    let sol = local_iteration_scheme(&state.a, &state.u, &params, &LocalSchemeOptions::default())?;
    for (n, inc) in sol.report.increments.iter().enumerate() {
        println!("iterate {n:2}: increment {inc:.3e}");
    }
    println!("asymptotic ratio {:?}", sol.report.asymptotic_ratio);
    let t = sol.report.t_final;
    let opts = RunOptions {
        t_final: t,
        output_dt: t,
        max_step: t / 8.0,
        keep_trajectory: false,
        ..RunOptions::default()
    };
    let direct = cns_run(&state, &params, &opts)?;
    let gap = sol.final_state().distance(&direct.final_state)? / direct.final_state.l2_norm();
    println!("relative gap to the direct solver {gap:.2e}");
    Ok(())
}
