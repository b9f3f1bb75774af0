//! Flow map of a small velocity, coordinate changes and the Lagrangian solve.

use spectral_cns::cns::CnsParams;
use spectral_cns::harness::experiments::smooth_random;
use spectral_cns::lagrangian::{
    change_coords, div_identity_defect, flow_bounds, flow_map, lagrangian_fixed_point_solve, piola_defect, CoordChange,
    FlowOptions, LagrangianOptions,
};
use spectral_cns::spectral::{SpectralField, TorusGrid};

fn main() -> spectral_cns::Result<()> {
    let grid = TorusGrid::new(2, 32, 1.0)?;
    let v = smooth_random(&grid, 2, 0.02, 1)?;
    let times: Vec<f64> = (0..=32).map(|i| i as f64 / 64.0).collect();
    let flow = flow_map(&vec![v; times.len()], &times, &FlowOptions::default())?;
    let last = flow.last();
    println!("min J {:.6}, gate integral {:.4}", flow.min_jacobian(), flow.gate_integral());
    println!("Piola residual {:.2e}", piola_defect(last)?);
    let h = smooth_random(&grid, 2, 1.0, 2)?;
    let (defect, c1) = div_identity_defect(&h, last)?;
    println!("divergence identity defect {:.2e} (C1 norm {c1:.3})", defect);
    let f = smooth_random(&grid, 1, 1.0, 3)?;
    let back = change_coords(&change_coords(&f, last, CoordChange::ToLagrangian)?, last, CoordChange::ToEulerian)?;
    println!("round trip {:.2e}", back.sub(&f)?.l2_norm() / f.l2_norm());
    let b = flow_bounds(&flow, 2.0)?;
    println!("flow constants {:?}", b.constants);

    let rho0 = SpectralField::from_fn(&grid, |x| 1.0 + 0.1 * x[0].sin() * x[1].cos());
    let u0 = smooth_random(&grid, 2, 0.02, 4)?;
    let (state, rep) = lagrangian_fixed_point_solve(&rho0, &u0, &CnsParams::default(), &LagrangianOptions::default())?;
    println!("fixed point: {} iterations, increments {:?}", rep.iterations, rep.increments);
    println!("mass defect {:.2e}, T = {}", rep.mass_defect, rep.t_final);
    let (rho, u) = state.eulerian(state.times.len() - 1)?;
    println!("Eulerian density mean {:.8}, ‖u(T)‖ {:.4e}", rho.mean(0).re, u.l2_norm());
    Ok(())
}
