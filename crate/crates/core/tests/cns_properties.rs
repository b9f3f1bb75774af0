use spectral_cns::cns::{cns_run, cns_step, effective_velocity, linear_propagate, rescale_state, CnsParams, CnsState, RunOptions};
use spectral_cns::data::{make_state, DataRecipe};
use spectral_cns::spectral::{gradient, helmholtz_project, SpectralField, TorusGrid};

fn smooth_state(g: &TorusGrid, amp: f64) -> CnsState {
    let m = g.box_scale();
    let a = SpectralField::from_fn(g, move |x| amp * (x[0] / m).sin() * (2.0 * x[1] / m).cos());
    let u = SpectralField::from_vector_fn(g, 2, move |x, o| {
        o[0] = amp * (1.5 * (x[1] / m).sin() + 0.5 * (x[0] / m).cos());
        o[1] = amp * ((x[0] + x[1]) / m).cos();
    });
    CnsState::new(a, u, 0.0).unwrap()
}

fn fixed_steps(t: f64, h: f64) -> RunOptions {
    RunOptions {
        t_final: t,
        output_dt: t,
        max_step: h,
        cfl: 1e6,
        keep_trajectory: false,
        density_gate: None,
        ..RunOptions::default()
    }
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[test]
fn nonlinear_deviation_is_quadratic_in_amplitude() {
    let g = TorusGrid::new(2, 32, 1.0).unwrap();
    let p = CnsParams::default();
    let amps = [1e-3, 2e-3, 4e-3, 8e-3];
    let dev: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let s = smooth_state(&g, a);
            cns_step(&s, &p, 0.05).unwrap().distance(&linear_propagate(&s, &p, 0.05).unwrap()).unwrap()
        })
        .collect();
    let k = slope(&amps, &dev);
    assert!((k - 2.0).abs() <= 0.2, "slope {k}");
}

#[test]
fn step_halving_gives_second_order() {
    let g = TorusGrid::new(2, 32, 1.0).unwrap();
    let p = CnsParams::default();
    let s = smooth_state(&g, 0.2);
    let t = 0.4;
    let reference = cns_run(&s, &p, &fixed_steps(t, 0.1 / 8.0)).unwrap().final_state;
    let err: Vec<f64> = [0.1, 0.05]
        .iter()
        .map(|&h| cns_run(&s, &p, &fixed_steps(t, h)).unwrap().final_state.distance(&reference).unwrap())
        .collect();
    for w in err.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((order - 2.0).abs() <= 0.2, "order {order}, errors {err:?}");
    }
}

#[test]
fn nonlinear_solve_commutes_with_rescaling() {
    let g = TorusGrid::new(2, 32, 4.0).unwrap();
    let p = CnsParams::default();
    let s = smooth_state(&g, 0.05);
    let (t, h, ell) = (2.0, 0.25, 2.0);
    let (evolved, _) = rescale_state(&cns_run(&s, &p, &fixed_steps(t, h)).unwrap().final_state, &p, ell).unwrap();
    let (r, q) = rescale_state(&s, &p, ell).unwrap();
    let other = cns_run(&r, &q, &fixed_steps(t / (ell * ell), h / (ell * ell))).unwrap().final_state;
    let diff = evolved.distance(&other).unwrap() / evolved.l2_norm();
    assert!(diff <= 1e-6, "{diff}");
}

#[test]
fn mass_is_conserved_along_a_run() {
    let g = TorusGrid::new(2, 32, 4.0).unwrap();
    let s = make_state(&g, &DataRecipe::Gaussian { width: 2.0 }, Some(0.05), 2.0, 0, 3).unwrap();
    let run = cns_run(&s, &CnsParams::default(), &RunOptions { t_final: 5.0, output_dt: 0.5, ..RunOptions::default() }).unwrap();
    let m0 = run.monitors.samples[0].mass_mean;
    for m in &run.monitors.samples {
        assert!((m.mass_mean - m0).abs() <= 1e-12, "{} at t = {}", m.mass_mean, m.t);
    }
}

#[test]
fn effective_velocity_of_a_gradient_field() {
    // For u = ∇φ and a = 0 the effective velocity reduces to Qu = u.
    let g = TorusGrid::new(2, 32, 1.0).unwrap();
    let phi = SpectralField::from_fn(&g, |x| 0.1 * x[0].sin() * (2.0 * x[1]).cos());
    let u = gradient(&phi).unwrap();
    let s = CnsState::new(SpectralField::zeros(&g, 1), u.clone(), 0.0).unwrap();
    let w = effective_velocity(&s);
    let (_, q) = helmholtz_project(&u).unwrap();
    assert!(w.sub(&q).unwrap().l2_norm() <= 1e-12 * u.l2_norm());
}
