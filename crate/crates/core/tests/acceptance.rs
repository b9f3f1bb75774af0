//! Acceptance criteria 1–13: one PASS/FAIL line each, nonzero exit on failure.

use std::time::Instant;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectral_cns::cns::{
    cns_run, cns_step, decay_run, linear_propagate, local_iteration_scheme, low_mach_experiment, CnsParams, CnsState,
    DecayOptions, LocalSchemeOptions, LowMachConfig, LowMachFamily, RunOptions, StopReason,
};
use spectral_cns::data::{make_state, random_band_limited, DataRecipe};
use spectral_cns::harness::experiments::smooth_random;
use spectral_cns::lagrangian::{
    change_coords, div_identity_defect, flow_bounds, flow_map, lagrangian_fixed_point_solve, piola_defect, CoordChange,
    FlowOptions, LagrangianOptions,
};
use spectral_cns::linear::modes::{lyapunov_decay_check, lyapunov_dissipation, mode_propagate, mode_spectrum};
use spectral_cns::linear::{heat_block_constant, heat_solve, linear_decay_profile, RadialData};
use spectral_cns::littlewood_paley::{build_cutoffs, dyadic_block, resolvable_range, DyadicBlocks};
use spectral_cns::paracalculus::bony;
use spectral_cns::spectral::{SpectralField, TorusGrid};

type Outcome = Result<(bool, String), String>;

struct Ledger {
    failures: usize,
}

impl Ledger {
    fn run(&mut self, id: usize, title: &str, f: impl FnOnce() -> Outcome) {
        let clock = Instant::now();
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            self.failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("criterion {id:2} {tag} {title}: {detail} [{:.1} s]", clock.elapsed().as_secs_f64());
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Least-squares slope of `ln y` against `ln x`.
fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn spread(v: &[f64]) -> f64 {
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

/// `‖f‖_{L²}` from the coefficients by Parseval.
fn parseval(grid: &TorusGrid, coeffs: &[Complex64]) -> f64 {
    (coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / grid.volume()).sqrt()
}

fn c1_partition_of_unity() -> Outcome {
    let clock = Instant::now();
    let cut = build_cutoffs();
    let mut worst: f64 = 0.0;
    for m in [1.0, 8.0] {
        let g = TorusGrid::new(2, 64, m).map_err(e)?;
        for flat in 1..g.len() {
            let rho = g.wave_norm(flat);
            let s: f64 = (-40..40).map(|j| cut.phi(rho * 2f64.powi(-j))).sum();
            worst = worst.max((s - 1.0).abs());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Ok((worst <= 1e-10 && secs < 1.0, format!("max |Σφ - 1| = {worst:.2e} (≤ 1e-10) in {secs:.3} s (< 1 s)")))
}

fn c2_quasi_orthogonality() -> Outcome {
    let g = TorusGrid::new(2, 64, 1.0).map_err(e)?;
    let (j_min, j_max) = resolvable_range(&g);
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let u = random_band_limited(&g, 1, 0.0, f64::INFINITY, 0.0, 100 + seed).map_err(e)?;
        for j in j_min..=j_max {
            let bj = dyadic_block(&u, j).map_err(e)?;
            for k in j_min..=j_max {
                if (j - k).abs() > 1 {
                    let jk = dyadic_block(&bj, k).map_err(e)?;
                    worst = worst.max(jk.l2_norm() / u.l2_norm());
                }
            }
        }
    }
    Ok((worst <= 1e-12, format!("max ‖Δ_jΔ_k u‖/‖u‖ = {worst:.2e} (≤ 1e-12), 20 fields")))
}

/// Truncated coefficient convolution `(1/vol)Σ_{k+l=m} c_k c_l`.
fn convolution(grid: &TorusGrid, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid.len()];
    let d = grid.dim();
    let half = (grid.n() / 2) as i32;
    for (fa, ca) in a.iter().enumerate() {
        if *ca == Complex64::default() {
            continue;
        }
        let ka = grid.wave_index(fa);
        for (fb, cb) in b.iter().enumerate() {
            if *cb == Complex64::default() {
                continue;
            }
            let kb = grid.wave_index(fb);
            let k: Vec<i32> = (0..d).map(|i| ka[i] + kb[i]).collect();
            if k.iter().all(|x| x.abs() < half) {
                let flat = grid.flat_index(&k).expect("in range");
                out[flat] += ca * cb / grid.volume();
            }
        }
    }
    out
}

fn c3_bony() -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, n) in [(1, 64), (2, 16)] {
        let g = TorusGrid::new(d, n, 1.0).map_err(e)?;
        for k in 0..50u64 {
            let u = random_band_limited(&g, 1, 0.0, f64::INFINITY, 1.0, 2 * k).map_err(e)?;
            let v = random_band_limited(&g, 1, 0.0, f64::INFINITY, 1.0, 2 * k + 1).map_err(e)?;
            let exact = convolution(&g, u.coeffs(0), v.coeffs(0));
            let sum = bony(&u, &v).map_err(e)?.sum();
            let diff: Vec<Complex64> = exact.iter().zip(sum.coeffs(0)).map(|(a, b)| a - b).collect();
            worst = worst.max(parseval(&g, &diff) / (u.l2_norm() * v.l2_norm()));
        }
    }
    Ok((worst <= 1e-10, format!("max ‖uv - T_uv - T_vu - R‖/(‖u‖‖v‖) = {worst:.2e} (≤ 1e-10), 50 pairs, d ∈ {{1, 2}}")))
}

fn c4_heat_blocks() -> Outcome {
    let g = TorusGrid::new(2, 32, 1.0).map_err(e)?;
    let times: Vec<f64> = (0..=20).map(|i| 0.025 * i as f64).collect();
    let mut worst_l2: f64 = 0.0;
    let mut solver_gap: f64 = 0.0;
    let mut linf = Vec::new();
    for seed in 1..=4u64 {
        let u = random_band_limited(&g, 1, 0.0, f64::INFINITY, 0.0, seed).map_err(e)?;
        let blocks = DyadicBlocks::new(&u);
        let mut c_inf: f64 = 0.0;
        for j in blocks.j_min..=blocks.j_max {
            let b = blocks.block(j).expect("in range");
            let base = parseval(&g, b.coeffs(0));
            for &t in &times {
                let evolved: Vec<Complex64> =
                    b.coeffs(0).iter().enumerate().map(|(f, z)| z * (-g.wave_norm_sq(f) * t).exp()).collect();
                let bound = (-(9.0 / 16.0) * 4f64.powi(j) * t).exp() * base;
                worst_l2 = worst_l2.max(parseval(&g, &evolved) / bound);
            }
            c_inf = c_inf.max(heat_block_constant(b, j, &times, 9.0 / 16.0, f64::INFINITY).map_err(e)?);
        }
        linf.push(c_inf);
        let sol = heat_solve(&u, None, &times, 1.0, 0.0, 2.0).map_err(e)?;
        let t = *times.last().expect("nonempty");
        let exact: Vec<Complex64> = u.coeffs(0).iter().enumerate().map(|(f, z)| z * (-g.wave_norm_sq(f) * t).exp()).collect();
        let diff: Vec<Complex64> = exact.iter().zip(sol.series.last().expect("nonempty").coeffs(0)).map(|(a, b)| a - b).collect();
        solver_gap = solver_gap.max(parseval(&g, &diff) / u.l2_norm());
    }
    let s = spread(&linf);
    let ok = worst_l2 <= 1.0 + 1e-12 && s <= 1.2 && solver_gap <= 1e-13;
    Ok((
        ok,
        format!(
            "p = 2 worst ratio {worst_l2:.15} (≤ 1), solver vs multiplier {solver_gap:.1e}; p = ∞ constants {linf:.4?} spread {s:.3} (≤ 1.2)"
        ),
    ))
}

/// `e^{tB}` by scaling and squaring of the Taylor series.
fn expm_reference(b: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let norm = b.iter().flatten().map(|x| x.abs()).sum::<f64>() * t;
    let s = norm.max(1.0).log2().ceil() as i32 + 4;
    let h = t / 2f64.powi(s);
    let a = Matrix2::new(b[0][0] * h, b[0][1] * h, b[1][0] * h, b[1][1] * h);
    let mut term = Matrix2::identity();
    let mut sum = Matrix2::identity();
    for k in 1..30 {
        term = term * a / k as f64;
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    [[sum[(0, 0)], sum[(0, 1)]], [sum[(1, 0)], sum[(1, 1)]]]
}

fn c5_eigenvalues() -> Outcome {
    let mut worst_eig: f64 = 0.0;
    let mut worst_re: f64 = 0.0;
    let key = |z: &Complex64| (z.re, z.im);
    for i in 1..=400 {
        let rho = 0.025 * i as f64;
        if (rho - 2.0).abs() < 1e-2 {
            continue;
        }
        let sp = mode_spectrum(rho);
        let eig = Matrix2::new(0.0, -rho, rho, -rho * rho).complex_eigenvalues();
        let mut closed = [sp.lambda_plus, sp.lambda_minus];
        let mut numeric = [eig[0], eig[1]];
        closed.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        numeric.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        for k in 0..2 {
            worst_eig = worst_eig.max((closed[k] - numeric[k]).norm() / (rho * rho).max(1.0));
        }
        if rho < 2.0 {
            for l in [sp.lambda_plus, sp.lambda_minus] {
                worst_re = worst_re.max((l.re + 0.5 * rho * rho).abs());
            }
        }
    }
    // Propagator near the defective point against an independent exponential.
    let (a0, v0) = (Complex64::new(1.0, 0.3), Complex64::new(-0.4, 0.2));
    let t = [0.0, 0.7, 1.5];
    let mut worst_prop: f64 = 0.0;
    for k in 4..=9 {
        for rho in [2.0 - 10f64.powi(-k), 2.0, 2.0 + 10f64.powi(-k)] {
            let traj = mode_propagate(a0, v0, rho, None, None, &t).map_err(e)?;
            for (i, &ti) in t.iter().enumerate() {
                let m = expm_reference([[0.0, -rho], [rho, -rho * rho]], ti);
                let a = m[0][0] * a0 + m[0][1] * v0;
                let v = m[1][0] * a0 + m[1][1] * v0;
                worst_prop = worst_prop.max((traj[i].0 - a).norm().max((traj[i].1 - v).norm()));
            }
        }
    }
    let ok = worst_eig <= 1e-11 && worst_re <= 1e-12 && worst_prop <= 1e-9;
    Ok((
        ok,
        format!(
            "closed form vs eigensolver {worst_eig:.1e} (≤ 1e-11); |Re λ + ρ²/2| {worst_re:.1e} for ρ < 2; propagator at ρ = 2 ± 1e-4…1e-9 vs Taylor {worst_prop:.1e} (≤ 1e-9)"
        ),
    ))
}

fn c6_lyapunov() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut bound = true;
    let mut worst_ratio: f64 = 0.0;
    for i in 0..10_000 {
        let rho: f64 = 10f64.powf(rng.gen_range(-2.0..2.0));
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        // Chain rule along A' = -ρV, V' = ρA - ρ²V for
        // L² = 2(|A|² + |V|²) + ρ²|A|² - 2ρ Re(A V̄).
        let da = -rho * v;
        let dv = rho * a - rho * rho * v;
        let dl = 2.0 * (2.0 + rho * rho) * (a * da.conj()).re + 4.0 * (v * dv.conj()).re
            - 2.0 * rho * (da * v.conj() + a * dv.conj()).re;
        let scale = (rho * rho).max(1.0) * (1.0 + rho * rho) * (a.norm_sqr() + v.norm_sqr());
        worst = worst.max((dl - lyapunov_dissipation(a, v, rho)).abs() / scale);
        if i % 100 == 0 {
            let rep = lyapunov_decay_check(a, v, rho, 10.0, 100).map_err(e)?;
            bound &= rep.bound_holds;
            worst_ratio = worst_ratio.max(rep.worst_bound_ratio);
        }
    }
    Ok((
        worst <= 1e-9 && bound,
        format!("identity residual {worst:.1e} (≤ 1e-9) on 10⁴ modes; decay bound holds on 100 trajectories (worst ratio {worst_ratio:.6})"),
    ))
}

fn c7_linear_decay() -> Outcome {
    let clock = Instant::now();
    let times: Vec<f64> = (0..=40).map(|i| 10f64.powf(1.0 + 2.0 * i as f64 / 40.0)).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for (d, s, want, tol) in [(2, 0.0, -0.5, 0.03), (2, 1.0, -1.0, 0.05), (3, 0.0, -0.75, 0.04)] {
        let data = RadialData::indicator(d, 1.0, 1.0, 0.0).map_err(e)?;
        let curves = linear_decay_profile(&data, &[s], &times, 0).map_err(e)?;
        let k = loglog_slope(&times, &curves.plain[0]);
        ok &= (k - want).abs() <= tol;
        parts.push(format!("d = {d}, s = {s}: {k:.4} ({want} ± {tol})"));
    }
    let secs = clock.elapsed().as_secs_f64();
    ok &= secs < 30.0;
    Ok((ok, format!("{}; {secs:.1} s (< 30 s)", parts.join(", "))))
}

fn c8_c9_global_run(ledger: &mut Ledger) {
    let clock = Instant::now();
    let run = (|| {
        let g = TorusGrid::new(2, 256, 16.0)?;
        let state = make_state(&g, &DataRecipe::Gaussian { width: 2.0 }, Some(1e-2), 2.0, 0, 1)?;
        let opts = DecayOptions {
            t_final: 200.0,
            output_dt: 1.0,
            max_step: 0.5,
            nonlinear: true,
            k0: 0,
            window: None,
        };
        decay_run(&state, &CnsParams::default(), &opts)
    })();
    let secs = clock.elapsed().as_secs_f64();
    let rep = match run {
        Ok(r) => r,
        Err(err) => {
            let msg = err.to_string();
            ledger.run(8, "nonlinear global small-data run", || Err(msg.clone()));
            ledger.run(9, "nonlinear decay", || Err(msg));
            return;
        }
    };
    let s = &rep.samples;
    ledger.run(8, "nonlinear global small-data run", || {
        let x0 = s[0].xp;
        let growth = s.iter().map(|m| m.xp / x0).fold(0.0, f64::max);
        let min_rho = s.iter().map(|m| m.min_density).fold(f64::INFINITY, f64::min);
        let drift = s.iter().map(|m| (m.mass_mean - s[0].mass_mean).abs()).fold(0.0, f64::max);
        let done = rep.stop == StopReason::Completed && (s.last().expect("nonempty").t - 200.0).abs() < 1e-9;
        let ok = done && (x0 / 1e-2 - 1.0).abs() < 1e-6 && growth <= 3.0 && min_rho >= 0.9 && drift <= 1e-10 && secs < 600.0;
        Ok((
            ok,
            format!(
                "X₂(0) = {x0:.3e}, max X₂(t)/X₂(0) = {growth:.3} (≤ 3), min density {min_rho:.5} (≥ 0.9), mass drift {drift:.1e} (≤ 1e-10), {secs:.0} s (< 600 s)"
            ),
        ))
    });
    ledger.run(9, "nonlinear decay", || {
        let (lo, hi) = rep.window;
        let (t, l2): (Vec<f64>, Vec<f64>) = s.iter().filter(|m| m.t >= lo && m.t <= hi).map(|m| (m.t, m.l2_norm)).unzip();
        let k = loglog_slope(&t, &l2);
        let floor = 1e-10 * s[0].xp;
        let rise = s
            .windows(2)
            .filter(|w| w[0].t >= 5.0)
            .map(|w| w[1].d_tnablau_high - w[0].d_tnablau_high)
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = (-0.75..=-0.30).contains(&k) && rise <= floor;
        Ok((
            ok,
            format!(
                "L² slope {k:.4} on [{lo}, {hi}] (in [-0.75, -0.30], target -0.5); largest rise of ‖τ∇u‖^h after t = 5: {rise:.1e} (≤ {floor:.0e})"
            ),
        ))
    });
}

fn c10_local_scheme() -> Outcome {
    let g = TorusGrid::new(3, 16, 1.0).map_err(e)?;
    let recipe = DataRecipe::RandomBand {
        rho_lo: 0.5,
        rho_hi: 4.0,
        decay: 1.0,
    };
    let state = make_state(&g, &recipe, Some(1e-2), 2.0, 0, 1).map_err(e)?;
    let params = CnsParams::default();
    let opts = LocalSchemeOptions {
        t_final: 0.2,
        intervals: 40,
        p: 2.0,
        ..LocalSchemeOptions::default()
    };
    let sol = local_iteration_scheme(&state.a, &state.u, &params, &opts).map_err(e)?;
    let ratio = sol.report.asymptotic_ratio.unwrap_or(f64::INFINITY);
    let t = sol.report.t_final;
    let run_opts = RunOptions {
        t_final: t,
        output_dt: t,
        max_step: t / 40.0,
        keep_trajectory: false,
        density_gate: None,
        ..RunOptions::default()
    };
    let direct = cns_run(&state, &params, &run_opts).map_err(e)?.final_state;
    let gap = sol.final_state().distance(&direct).map_err(e)? / direct.l2_norm();
    Ok((
        ratio <= 0.725 && gap <= 1e-4,
        format!("asymptotic increment ratio {ratio:.4} (≤ 0.725); relative gap to cns_run {gap:.2e} (≤ 1e-4)"),
    ))
}

fn c11_low_mach() -> Outcome {
    let cfg = LowMachConfig {
        eps_list: vec![0.2, 0.1, 0.05],
        ..LowMachConfig::default()
    };
    assert_eq!(cfg.family, LowMachFamily::Oscillating);
    let rep = low_mach_experiment(&cfg).map_err(e)?;
    let qu: Vec<f64> = rep.rows.iter().map(|r| r.sup_qu_l2).collect();
    let err: Vec<f64> = rep.rows.iter().map(|r| r.err_pu_vs_v_linf_l2).collect();
    let dec = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" > ");
    let want = 1.0 - 2.0 / cfg.p;
    let got = rep.data_exponent.as_ref().map(|f| f.slope).unwrap_or(f64::NAN);
    let ok = dec(&qu) && dec(&err) && (got - want).abs() <= 0.2 * want.abs();
    Ok((
        ok,
        format!("sup‖Qu‖ {}, ‖Pu - v‖ {} (strictly decreasing); data exponent {got:.3} vs {want} (± 20%)", list(&qu), list(&err)),
    ))
}

fn c12_lagrangian() -> Outcome {
    let g = TorusGrid::new(2, 32, 1.0).map_err(e)?;
    let times: Vec<f64> = (0..=64).map(|i| i as f64 / 128.0).collect();
    let (mut piola, mut div, mut trip) = (0.0f64, 0.0f64, 0.0f64);
    let mut consts: Vec<[f64; 4]> = Vec::new();
    for seed in 1..=4u64 {
        let v = smooth_random(&g, 2, 0.02, seed).map_err(e)?;
        let flow = flow_map(&vec![v; times.len()], &times, &FlowOptions { p: 2.0, gate: f64::INFINITY }).map_err(e)?;
        let last = flow.last();
        piola = piola.max(piola_defect(last).map_err(e)?);
        let h = smooth_random(&g, 2, 1.0, seed + 10).map_err(e)?;
        let (defect, c1) = div_identity_defect(&h, last).map_err(e)?;
        div = div.max(defect / c1);
        let f = smooth_random(&g, 1, 1.0, seed + 20).map_err(e)?;
        let lag = change_coords(&f, last, CoordChange::ToLagrangian).map_err(e)?;
        let back = change_coords(&lag, last, CoordChange::ToEulerian).map_err(e)?;
        trip = trip.max(back.sub(&f).map_err(e)?.l2_norm() / f.l2_norm());
        consts.push(flow_bounds(&flow, 2.0).map_err(e)?.constants);
    }
    let spreads: Vec<f64> = (0..4).map(|k| spread(&consts.iter().map(|c| c[k]).collect::<Vec<_>>())).collect();
    // Fixed point with a nonconstant density and the Eulerian round trip.
    let rho0 = SpectralField::from_fn(&g, |x| 1.0 + 0.1 * x[0].sin() * x[1].cos());
    let u0 = smooth_random(&g, 2, 0.02, 5).map_err(e)?;
    let params = CnsParams::default();
    let (state, rep) = lagrangian_fixed_point_solve(&rho0, &u0, &params, &LagrangianOptions::default()).map_err(e)?;
    let steps = state.times.len() - 1;
    let a0 = rho0.sub(&SpectralField::from_fn(&g, |_| 1.0)).map_err(e)?;
    let run = cns_run(
        &CnsState::new(a0, u0, 0.0).map_err(e)?,
        &params,
        &RunOptions {
            t_final: rep.t_final,
            output_dt: rep.t_final / steps as f64,
            max_step: 1e-3,
            density_gate: None,
            ..RunOptions::default()
        },
    )
    .map_err(e)?;
    let mut round: f64 = 0.0;
    for i in [steps / 2, steps] {
        let (_, u) = state.eulerian(i).map_err(e)?;
        round = round.max(u.sub(&run.trajectory[i].u).map_err(e)?.l2_norm() / run.trajectory[i].u.l2_norm());
    }
    let ok = piola <= 1e-6
        && div <= 1e-6
        && trip <= 1e-8
        && rep.converged
        && rep.mass_defect <= 1e-5
        && round <= 1e-4
        && spreads.iter().all(|s| *s <= 1.3);
    Ok((
        ok,
        format!(
            "Piola {piola:.1e}, div identity {div:.1e} (≤ 1e-6); coords round trip {trip:.1e}; ‖Jρ̄ - ρ₀‖ {:.1e} (≤ 1e-5); Eulerian round trip {round:.1e} (≤ 1e-4); flow-bound constant spreads {spreads:.3?} (≤ 1.3)",
            rep.mass_defect
        ),
    ))
}

fn c13_consistency() -> Outcome {
    let g = TorusGrid::new(2, 32, 1.0).map_err(e)?;
    let p = CnsParams::default();
    let state = |amp: f64| {
        let a = SpectralField::from_fn(&g, move |x| amp * x[0].sin() * (2.0 * x[1]).cos());
        let u = SpectralField::from_vector_fn(&g, 2, move |x, o| {
            o[0] = amp * (1.5 * x[1].sin() + 0.5 * x[0].cos());
            o[1] = amp * (x[0] + x[1]).cos();
        });
        CnsState::new(a, u, 0.0)
    };
    let amps = [1e-3, 2e-3, 4e-3, 8e-3];
    let mut dev = Vec::new();
    for &a in &amps {
        let s = state(a).map_err(e)?;
        let nl = cns_step(&s, &p, 0.05).map_err(e)?;
        dev.push(nl.distance(&linear_propagate(&s, &p, 0.05).map_err(e)?).map_err(e)?);
    }
    let k = loglog_slope(&amps, &dev);
    let s = state(0.2).map_err(e)?;
    let solve = |h: f64| {
        let opts = RunOptions {
            t_final: 0.4,
            output_dt: 0.4,
            max_step: h,
            cfl: 1e6,
            keep_trajectory: false,
            density_gate: None,
            ..RunOptions::default()
        };
        cns_run(&s, &p, &opts).map(|r| r.final_state)
    };
    let h = 0.1;
    let reference = solve(h / 8.0).map_err(e)?;
    let e1 = solve(h).map_err(e)?.distance(&reference).map_err(e)?;
    let e2 = solve(h / 2.0).map_err(e)?.distance(&reference).map_err(e)?;
    let order = (e1 / e2).log2();
    Ok((
        (k - 2.0).abs() <= 0.2 && (order - 2.0).abs() <= 0.2,
        format!("nonlinear deviation slope {k:.3} (2 ± 0.2); Richardson order {order:.3} (2 ± 0.2)"),
    ))
}

fn main() {
    let mut ledger = Ledger { failures: 0 };
    ledger.run(1, "partition of unity", c1_partition_of_unity);
    ledger.run(2, "quasi-orthogonality", c2_quasi_orthogonality);
    ledger.run(3, "Bony exactness", c3_bony);
    ledger.run(4, "heat block decay", c4_heat_blocks);
    ledger.run(5, "eigenvalues", c5_eigenvalues);
    ledger.run(6, "Lyapunov", c6_lyapunov);
    ledger.run(7, "linear whole-space decay", c7_linear_decay);
    c8_c9_global_run(&mut ledger);
    ledger.run(10, "local iteration contraction", c10_local_scheme);
    ledger.run(11, "low Mach sweep", c11_low_mach);
    ledger.run(12, "Lagrangian suite", c12_lagrangian);
    ledger.run(13, "linear-consistency order", c13_consistency);
    if ledger.failures > 0 {
        println!("{} criteria failed", ledger.failures);
        std::process::exit(1);
    }
    println!("all 13 criteria pass");
}
