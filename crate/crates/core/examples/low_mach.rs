//! Low Mach number sweep for oscillating and well-prepared data.

use spectral_cns::cns::{low_mach_experiment, LowMachConfig, LowMachFamily};

fn main() -> spectral_cns::Result<()> {
    for family in [LowMachFamily::Oscillating, LowMachFamily::WellPrepared] {
        let cfg = LowMachConfig::default().with_family(family);
        let rep = low_mach_experiment(&cfg)?;
        println!("{family:?}, ‖v₀‖ = {:.4}", rep.reference_l2);
        for row in &rep.rows {
            println!(
                "  ε = {:5}: sup‖Qu‖ = {:.4e}, ‖Pu - v‖ = {:.4e}, C0 = {:.4e}",
                row.eps, row.sup_qu_l2, row.err_pu_vs_v_linf_l2, row.c0_eps_nu
            );
        }
        if let Some(fit) = &rep.data_exponent {
            println!("  data exponent {:.3} (expected {:.3})", fit.slope, rep.expected_exponent);
        }
    }
    Ok(())
}
