use spectral_cns::cns::{low_mach_experiment, LowMachConfig, LowMachFamily};

#[test]
fn well_prepared_data_stay_nearly_incompressible() {
    let cfg = LowMachConfig::default().with_family(LowMachFamily::WellPrepared);
    let rep = low_mach_experiment(&cfg).unwrap();
    for row in &rep.rows {
        assert!(row.sup_qu_l2 <= 1e-3 * rep.reference_l2, "ε = {}: {}", row.eps, row.sup_qu_l2);
    }
}
