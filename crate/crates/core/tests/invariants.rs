use num_complex::Complex64;
use proptest::prelude::*;

use spectral_cns::cns::{cns_step, CnsParams, CnsState};
use spectral_cns::data::random_band_limited;
use spectral_cns::harness::{Experiment, ExperimentConfig};
use spectral_cns::linear::modes::{lyapunov_derivative, lyapunov_dissipation, mode_spectrum};
use spectral_cns::littlewood_paley::{build_cutoffs, DyadicBlocks};
use spectral_cns::paracalculus::bony;
use spectral_cns::spectral::{dealiased_product, divergence, helmholtz_project, SpectralField, TorusGrid};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dyadic_partition_sums_to_one(log_rho in -20.0f64..20.0) {
        let cut = build_cutoffs();
        let rho = log_rho.exp2();
        let full: f64 = (-80..80).map(|j| cut.phi(rho * 2f64.powi(-j))).sum();
        prop_assert!((full - 1.0).abs() <= 1e-12);
        let split = cut.chi(rho) + (0..80).map(|j| cut.phi(rho * 2f64.powi(-j))).sum::<f64>();
        prop_assert!((split - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn mode_eigenvalues_satisfy_vieta(rho in 1e-3f64..50.0) {
        let sp = mode_spectrum(rho);
        let r2 = rho * rho;
        let sum = sp.lambda_plus + sp.lambda_minus;
        let prod = sp.lambda_plus * sp.lambda_minus;
        prop_assert!((sum + r2).norm() <= 1e-12 * r2.max(1.0));
        prop_assert!((prod - r2).norm() <= 1e-11 * r2.max(1.0).powi(2));
    }

    #[test]
    fn lyapunov_identity_holds(rho in 1e-3f64..100.0, re in -1.0f64..1.0, im in -1.0f64..1.0, vr in -1.0f64..1.0, vi in -1.0f64..1.0) {
        let (a, v) = (Complex64::new(re, im), Complex64::new(vr, vi));
        let scale = (rho * rho).max(1.0) * (1.0 + rho * rho) * (a.norm_sqr() + v.norm_sqr()).max(1e-300);
        prop_assert!((lyapunov_derivative(a, v, rho) - lyapunov_dissipation(a, v, rho)).abs() <= 1e-9 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn helmholtz_split_is_orthogonal(seed in 0u64..10_000) {
        let g = TorusGrid::new(2, 16, 2.0).unwrap();
        let u = random_band_limited(&g, 2, 0.0, f64::INFINITY, 0.5, seed).unwrap();
        let (p, q) = helmholtz_project(&u).unwrap();
        prop_assert!(p.add(&q).unwrap().sub(&u).unwrap().l2_norm() <= 1e-13);
        prop_assert!(divergence(&p).unwrap().l2_norm() <= 1e-12);
        let pythagoras = p.l2_norm().powi(2) + q.l2_norm().powi(2) - u.l2_norm().powi(2);
        prop_assert!(pythagoras.abs() <= 1e-12);
    }

    #[test]
    fn blocks_reconstruct_and_bony_is_exact(seed in 0u64..10_000, d in 1usize..=2) {
        let g = TorusGrid::new(d, 32, 1.0).unwrap();
        let u = random_band_limited(&g, 1, 0.0, f64::INFINITY, 1.0, seed).unwrap();
        let v = random_band_limited(&g, 1, 0.0, f64::INFINITY, 1.0, seed + 1).unwrap();
        prop_assert!(DyadicBlocks::new(&u).reconstruct().sub(&u).unwrap().l2_norm() <= 1e-13);
        let uv = dealiased_product(&u, &v).unwrap();
        let uv_mean_free = uv.without_mean();
        let parts = bony(&u, &v).unwrap().sum();
        prop_assert!(uv_mean_free.sub(&parts.without_mean()).unwrap().l2_norm() <= 1e-10 * u.l2_norm() * v.l2_norm());
    }

    #[test]
    fn one_step_conserves_mass(seed in 0u64..10_000) {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let a = random_band_limited(&g, 1, 1.0, 4.0, 1.0, seed).unwrap().scaled(0.05);
        let u = random_band_limited(&g, 2, 1.0, 4.0, 1.0, seed + 7).unwrap().scaled(0.05);
        let s = CnsState::new(a.add(&SpectralField::from_fn(&g, |_| 0.01)).unwrap(), u, 0.0).unwrap();
        let next = cns_step(&s, &CnsParams::default(), 0.02).unwrap();
        prop_assert!((next.mass_mean() - s.mass_mean()).abs() <= 1e-14);
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), n in 2usize..64) {
        let mut cfg = ExperimentConfig::preset(Experiment::CnsRun, seed);
        cfg.grid.n = 2 * n;
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        prop_assert_eq!(cfg, back);
    }
}
