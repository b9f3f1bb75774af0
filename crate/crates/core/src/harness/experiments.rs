//! Experiment registry: each entry fills a [`RunReport`] from a config.

use std::time::Instant;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Experiment, ExperimentConfig};
use super::fit::{fit_decay_slope, log_times};
use super::report::{Check, RunReport, SlopeRow, Table, DECAY_COLUMNS, LOW_MACH_COLUMNS};
use crate::cns::{
    cns_run, convolution_self_test, decay_run, local_iteration_scheme, low_mach_experiment, CnsState, DecayOptions,
    LocalSchemeOptions, LowMachConfig, RunOptions, StopReason,
};
use crate::data::{make_state, random_band_limited};
use crate::error::{Error, Result};
use crate::lagrangian::{
    change_coords, div_identity_defect, flow_bounds, flow_map, flow_stability, lagrangian_fixed_point_solve, piola_defect,
    CoordChange, FlowOptions, LagrangianOptions, MASS_TOLERANCE,
};
use crate::linear::modes::{lyapunov_decay_check, lyapunov_derivative, lyapunov_dissipation, mode_matrix, mode_propagate, mode_spectrum};
use crate::linear::{
    heat_block_constant, heat_solve, lame_solve, linear_decay_profile, transport_solve, LameCoefficients, LameOptions,
    RadialData, TransportOptions, Velocity, VariableLame,
};
use crate::littlewood_paley::{build_cutoffs, dyadic_block, resolvable_range, DyadicBlocks};
use crate::paracalculus::bony;
use crate::spectral::{dealiased_product, helmholtz_project, SpectralField, TorusGrid};

/// Runs one experiment and times it.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let clock = Instant::now();
    let mut report = RunReport::new(cfg);
    match cfg.experiment {
        Experiment::HeatSmoke => heat_smoke(cfg, &mut report)?,
        Experiment::LpCheck => lp_check(cfg, &mut report)?,
        Experiment::ParaCheck => para_check(cfg, &mut report)?,
        Experiment::LinearHeat => linear_heat(cfg, &mut report)?,
        Experiment::LinearTransport => linear_transport(cfg, &mut report)?,
        Experiment::LinearLame => linear_lame(cfg, &mut report)?,
        Experiment::LinearModes => linear_modes(cfg, &mut report)?,
        Experiment::LinearDecayProfile => linear_decay(cfg, &mut report)?,
        Experiment::CnsRun => cns(cfg, &mut report)?,
        Experiment::LocalScheme => local_scheme(cfg, &mut report)?,
        Experiment::LagrangianCheck => lagrangian(cfg, &mut report)?,
        Experiment::LowMach => low_mach(cfg, &mut report)?,
        Experiment::Decay => decay(cfg, &mut report)?,
    }
    report.wall_clock_s = clock.elapsed().as_secs_f64();
    Ok(report)
}

fn uniform_times(t_final: f64, dt: f64) -> Vec<f64> {
    crate::cns::output_times(t_final, dt)
}

/// Random field with modes in `[1/M, min(4, Nyquist/2)]` and sup norm `amplitude`.
pub fn smooth_random(grid: &TorusGrid, components: usize, amplitude: f64, seed: u64) -> Result<SpectralField> {
    let hi = (0.5 * grid.nyquist()).min(4.0).max(grid.lowest_frequency());
    let f = random_band_limited(grid, components, grid.lowest_frequency(), hi, 1.0, seed)?;
    Ok(f.scaled(amplitude / f.sup_norm()))
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn seeds(cfg: &ExperimentConfig) -> Vec<u64> {
    cfg.knobs.seeds.clone().unwrap_or_else(|| vec![cfg.seed])
}

fn heat_blocks(cfg: &ExperimentConfig, seed: u64, p: f64, report: &mut Option<&mut Table>) -> Result<f64> {
    let grid = cfg.grid.build()?;
    let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 0.0, seed)?;
    let times = uniform_times(cfg.time.t_final, cfg.time.output_dt);
    let blocks = DyadicBlocks::new(&u);
    let mut worst: f64 = 0.0;
    for j in blocks.j_min..=blocks.j_max {
        let b = blocks.block(j).expect("in range");
        let c = heat_block_constant(b, j, &times, 9.0 / 16.0, p)?;
        if let Some(t) = report.as_deref_mut() {
            t.push(vec![j as f64, c]);
        }
        worst = worst.max(c);
    }
    Ok(worst)
}

fn heat_smoke(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let mut table = Table::new("heat_blocks", &["j", "ratio_L2"]);
    let worst = heat_blocks(cfg, cfg.seed, 2.0, &mut Some(&mut table))?;
    r.tables.push(table);
    r.check(Check::at_most(
        "heat_block_l2",
        "‖e^{tΔ}Δ̇_j u‖_{L²} ≤ e^{-(9/16)4^j t}‖Δ̇_j u‖_{L²}",
        worst,
        1.0 + 1e-12,
    ));
    let grid = cfg.grid.build()?;
    let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 0.0, cfg.seed)?;
    let times = uniform_times(cfg.time.t_final, cfg.time.output_dt);
    let sol = heat_solve(&u, None, &times, 1.0, 0.0, 2.0)?;
    r.constant("heat_maximal_regularity", sol.report.ratio, MAX_REG_ANCHOR, &[cfg.seed]);
    Ok(())
}

const MAX_REG_ANCHOR: &str = "‖u‖_{L̃^∞Ḃ^s_{p,1}} + ‖u‖_{L̃^1Ḃ^{s+2}_{p,1}} ≤ C(‖u₀‖_{Ḃ^s_{p,1}} + ‖f‖_{L̃^1Ḃ^s_{p,1}})";

fn lp_check(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let cut = build_cutoffs();
    let mut worst_pu: f64 = 0.0;
    let mut scales = vec![cfg.grid.box_scale];
    if cfg.grid.box_scale != 8.0 {
        scales.push(8.0);
    }
    for m in scales {
        let grid = TorusGrid::new(cfg.grid.dim, cfg.grid.n, m)?;
        for flat in 1..grid.len() {
            let rho = grid.wave_norm(flat);
            let j0 = rho.log2().floor() as i32;
            let s: f64 = (j0 - 3..=j0 + 3).map(|j| cut.phi(rho * 2f64.powi(-j))).sum();
            worst_pu = worst_pu.max((s - 1.0).abs());
        }
    }
    r.check(Check::at_most("partition_of_unity", "Σ_j φ(2^{-j}ξ) = 1 for ξ ≠ 0", worst_pu, 1e-10));
    let grid = cfg.grid.build()?;
    let (j_min, j_max) = resolvable_range(&grid);
    let mut worst_q: f64 = 0.0;
    let mut worst_rec: f64 = 0.0;
    for k in 0..cfg.knobs.samples {
        let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 0.0, cfg.seed + k as u64)?;
        let blocks = DyadicBlocks::new(&u);
        worst_rec = worst_rec.max(blocks.reconstruct().sub(&u)?.l2_norm() / u.l2_norm());
        for j in j_min..=j_max {
            for kk in j_min..=j_max {
                if (j - kk).abs() > 1 {
                    let b = dyadic_block(blocks.block(kk).expect("in range"), j)?;
                    worst_q = worst_q.max(b.l2_norm() / u.l2_norm());
                }
            }
        }
    }
    r.check(Check::at_most("quasi_orthogonality", "Δ̇_jΔ̇_k = 0 for |j - k| > 1", worst_q, 1e-12));
    r.check(Check::at_most("reconstruction", "u = mean + Σ_j Δ̇_j u", worst_rec, 1e-12));
    Ok(())
}

fn para_check(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let mut dims = vec![cfg.grid.dim];
    if cfg.grid.dim != 1 {
        dims.push(1);
    }
    let mut worst: f64 = 0.0;
    for (dim, k) in dims.iter().flat_map(|&dim| (0..cfg.knobs.samples).map(move |k| (dim, k))) {
        let grid = TorusGrid::new(dim, cfg.grid.n, cfg.grid.box_scale)?;
        let s = cfg.seed + 2 * k as u64;
        let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 1.0, s)?;
        let v = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 1.0, s + 1)?;
        let uv = dealiased_product(&u, &v)?;
        let parts = bony(&u, &v)?;
        worst = worst.max(uv.sub(&parts.sum())?.l2_norm() / (u.l2_norm() * v.l2_norm()));
    }
    r.check(Check::at_most("bony_exactness", "uv = T_uv + T_vu + R(u,v)", worst, 1e-10));
    Ok(())
}

fn linear_heat(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let seeds = seeds(cfg);
    let mut table = Table::new("heat_constants", &["seed", "constant_L2", "constant_Linf"]);
    let (mut c2, mut cinf) = (Vec::new(), Vec::new());
    for &s in &seeds {
        let a = heat_blocks(cfg, s, 2.0, &mut None)?;
        let b = heat_blocks(cfg, s, f64::INFINITY, &mut None)?;
        table.push(vec![s as f64, a, b]);
        c2.push(a);
        cinf.push(b);
    }
    r.tables.push(table);
    let anchor = "‖e^{tΔ}Δ̇_j u‖_{L^p} ≤ Ce^{-c4^j t}‖Δ̇_j u‖_{L^p}";
    r.check(Check::at_most("heat_block_l2", anchor, c2.iter().copied().fold(0.0, f64::max), 1.0 + 1e-12));
    r.check(Check::at_most("heat_linf_constant_spread", anchor, spread(&cinf), 1.2));
    r.constant("heat_block_linf", cinf.iter().copied().fold(0.0, f64::max), anchor, &seeds);
    let grid = cfg.grid.build()?;
    let times = uniform_times(cfg.time.t_final, cfg.time.output_dt);
    let mut mr = Table::new("maximal_regularity", &["s", "p", "seed", "ratio"]);
    for s in [-1.0, 0.0, 1.0] {
        for p in [2.0, 4.0] {
            let mut ratios = Vec::new();
            for &seed in &seeds {
                let u = random_band_limited(&grid, 1, 0.0, f64::INFINITY, 0.0, seed)?;
                let ratio = heat_solve(&u, None, &times, 1.0, s, p)?.report.ratio;
                mr.push(vec![s, p, seed as f64, ratio]);
                ratios.push(ratio);
            }
            let name = format!("heat_maximal_regularity_s{s}_p{p}");
            r.constant(&name, ratios.iter().copied().fold(0.0, f64::max), MAX_REG_ANCHOR, &seeds);
            r.check(Check::at_most(&format!("{name}_spread"), MAX_REG_ANCHOR, spread(&ratios), 1.2));
        }
    }
    r.tables.push(mr);
    Ok(())
}

fn linear_transport(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let grid = cfg.grid.build()?;
    let d = grid.dim();
    let (v, _) = helmholtz_project(&smooth_random(&grid, d, cfg.data.amplitude, cfg.seed)?)?;
    let a0 = smooth_random(&grid, 1, 1.0, cfg.seed + 1)?;
    let times = uniform_times(cfg.time.t_final, cfg.time.output_dt);
    let sol = transport_solve(&Velocity::Steady(v), &a0, None, 0.0, &times, &TransportOptions::default())?;
    let mut table = Table::new("transport", &["t", "l2", "solution_norm", "data_norm"]);
    for (i, t) in times.iter().enumerate() {
        table.push(vec![*t, sol.series[i].l2_norm(), sol.report.solution_norm[i], sol.report.data_norm[i]]);
    }
    r.tables.push(table);
    let drift = (sol.series.last().expect("nonempty").l2_norm() / a0.l2_norm() - 1.0).abs();
    r.check(Check::at_most("l2_conservation", "div v = 0 ⇒ ‖a(t)‖_{L²} = ‖a₀‖_{L²}", drift, 1e-6));
    if let Some(c) = sol.report.gronwall_constant {
        r.constant(
            "gronwall",
            c,
            "‖a‖_{L̃^∞_tḂ^s_{p,1}} ≤ e^{CV(t)}(‖a₀‖_{Ḃ^s_{p,1}} + ‖f‖_{L̃^1_tḂ^s_{p,1}})",
            &[cfg.seed],
        );
    }
    Ok(())
}

fn linear_lame(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let grid = cfg.grid.build()?;
    let d = grid.dim();
    let (lambda, mu) = (cfg.params.lambda, cfg.params.mu);
    let u0 = smooth_random(&grid, d, 1.0, cfg.seed)?;
    let times = uniform_times(cfg.time.t_final, cfg.time.output_dt);
    let opts = LameOptions {
        max_step: cfg.time.max_step,
        ..LameOptions::default()
    };
    let exact = lame_solve(&u0, None, &LameCoefficients::Constant { lambda, mu }, &times, &opts)?;
    let as_fields = lame_solve(
        &u0,
        None,
        &LameCoefficients::Variable(VariableLame::from_constants(&grid, lambda, mu)),
        &times,
        &opts,
    )?;
    let gap = exact.series.last().expect("nonempty").sub(as_fields.series.last().expect("nonempty"))?.l2_norm() / u0.l2_norm();
    r.check(Check::at_most(
        "constant_paths_agree",
        "∂_t u - μΔu - (λ+μ)∇div u = 0 solved two ways",
        gap,
        1e-10,
    ));
    r.constant(
        "lame_smoothing_ratio",
        exact.report.ratio,
        "‖u‖_{L̃^∞Ḃ^s} + ‖u‖_{L̃^1Ḃ^{s+2}} ≤ C‖u₀‖_{Ḃ^s}",
        &[cfg.seed],
    );
    let a = smooth_random(&grid, 1, cfg.data.amplitude, cfg.seed + 1)?;
    let inv = a.scaled(-1.0);
    let one = SpectralField::from_fn(&grid, |_| 1.0);
    let coeffs = VariableLame {
        a: one.add(&inv)?,
        b: one.add(&inv)?,
        mu: one.scaled(mu),
        lambda: one.scaled(lambda),
    };
    let var = lame_solve(&u0, None, &LameCoefficients::Variable(coeffs), &times, &opts)?;
    let mut table = Table::new("lame", &["t", "l2_constant", "l2_variable"]);
    for (i, t) in times.iter().enumerate() {
        table.push(vec![*t, exact.series[i].l2_norm(), var.series[i].l2_norm()]);
    }
    r.tables.push(table);
    if let Some(diag) = var.diagnostics {
        r.constant("lame_positivity", diag.positivity, "positivity of the smooth part Ṡ_m of the coefficients", &[cfg.seed]);
        r.constant("lame_smallness", diag.smallness, "smallness of the rough part (Id - Ṡ_m) of the coefficients", &[cfg.seed]);
    }
    r.check(Check::holds(
        "variable_energy_decays",
        "energy inequality for the variable Lamé flow",
        var.series.windows(2).all(|w| w[1].l2_norm() <= w[0].l2_norm() * (1.0 + 1e-10)),
    ));
    Ok(())
}

fn linear_modes(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let mut worst_eig: f64 = 0.0;
    let mut worst_re: f64 = 0.0;
    let mut table = Table::new("modes", &["rho", "re_plus", "im_plus", "re_minus", "im_minus"]);
    for i in 1..=400 {
        let rho = 0.025 * i as f64;
        let sp = mode_spectrum(rho);
        let m = mode_matrix(rho).m;
        let eig = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]).complex_eigenvalues();
        let scale = rho * rho;
        let mut closed = [sp.lambda_plus, sp.lambda_minus];
        let mut numeric = [eig[0], eig[1]];
        let key = |z: &Complex64| (z.re, z.im);
        closed.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        numeric.sort_by(|a, b| key(a).partial_cmp(&key(b)).expect("finite"));
        if (rho - 2.0).abs() > 1e-2 {
            for k in 0..2 {
                worst_eig = worst_eig.max((closed[k] - numeric[k]).norm() / scale.max(1.0));
            }
        }
        if rho < 2.0 {
            worst_re = worst_re.max((sp.lambda_plus.re + 0.5 * rho * rho).abs());
        }
        table.push(vec![rho, sp.lambda_plus.re, sp.lambda_plus.im, sp.lambda_minus.re, sp.lambda_minus.im]);
    }
    r.tables.push(table);
    r.check(Check::at_most("eigenvalues_closed_form", "λ_± = -ρ²/2(1 ± √(1 - 4/ρ²))", worst_eig, 1e-11));
    r.check(Check::at_most("real_part", "Re λ_± = -ρ²/2 for ρ < 2", worst_re, 1e-14));
    let t = [0.0, 0.5, 1.0];
    let at = |rho: f64| mode_propagate(Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.0), rho, None, None, &t);
    let mid = at(2.0)?;
    let mut lipschitz: f64 = 0.0;
    for k in 4..=9 {
        let delta = 10f64.powi(-k);
        let (lo, hi) = (at(2.0 - delta)?, at(2.0 + delta)?);
        for i in 1..3 {
            let jump = [&lo[i], &hi[i]]
                .iter()
                .map(|side| (side.0 - mid[i].0).norm().max((side.1 - mid[i].1).norm()))
                .fold(0.0, f64::max);
            lipschitz = lipschitz.max(jump / delta);
        }
    }
    r.check(Check::at_most(
        "defective_point_continuity",
        "e^{tM_ρ} continuous across ρ = 2",
        lipschitz,
        1.0,
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_id: f64 = 0.0;
    for _ in 0..cfg.knobs.samples {
        let rho: f64 = 10f64.powf(rng.gen_range(-2.0..1.5));
        let a = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let scale = (rho * rho).max(1.0) * (1.0 + rho * rho) * (a.norm_sqr() + v.norm_sqr());
        worst_id = worst_id.max((lyapunov_derivative(a, v, rho) - lyapunov_dissipation(a, v, rho)).abs() / scale);
    }
    r.check(Check::at_most("lyapunov_identity", "dL²/dt = -2ρ²|(A,V)|²", worst_id, 1e-9));
    let mut bound = true;
    let mut worst_ratio: f64 = 0.0;
    for rho in [0.05, 0.5, 1.0, 2.0, 4.0, 20.0] {
        let rep = lyapunov_decay_check(Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.5), rho, 10.0, 200)?;
        bound &= rep.bound_holds;
        worst_ratio = worst_ratio.max(rep.worst_bound_ratio);
    }
    r.check(Check::holds("lyapunov_decay_bound", "L²(t) ≤ e^{-cmin(1,ρ²)t}L²(0)", bound));
    r.constant("lyapunov_bound_ratio", worst_ratio, "L²(t) ≤ e^{-cmin(1,ρ²)t}L²(0)", &[cfg.seed]);
    Ok(())
}

/// Expected slope `-(d/4 + s/2)` and its tolerance.
pub fn decay_target(d: usize, s: f64) -> (f64, f64) {
    let want = -(d as f64 / 4.0 + s / 2.0);
    let tol = match (d, s) {
        (2, s) if s == 0.0 => 0.03,
        (3, s) if s == 0.0 => 0.04,
        _ => 0.05,
    };
    (want, tol)
}

fn linear_decay(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let d = cfg.grid.dim;
    let s_list = cfg.knobs.s_list.clone().unwrap_or_else(|| vec![0.0, 1.0]);
    let window = cfg.knobs.window.unwrap_or((10.0, 1e3));
    let times = log_times(window.0, window.1, 41);
    let data = RadialData::indicator(d, 1.0, 1.0, 0.0)?;
    let curves = linear_decay_profile(&data, &s_list, &times, cfg.knobs.k0)?;
    let mut cols = vec!["t".to_string()];
    cols.extend(s_list.iter().map(|s| format!("besov_s{s}_low")));
    let mut table = Table {
        name: "decay_profile".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for (n, t) in times.iter().enumerate() {
        let mut row = vec![*t];
        row.extend(curves.plain.iter().map(|c| c[n]));
        table.push(row);
    }
    r.tables.push(table);
    for (i, s) in s_list.iter().enumerate() {
        let fit = fit_decay_slope(&times, &curves.plain[i], window)?;
        let (want, tol) = decay_target(d, *s);
        let name = format!("slope_s{s}");
        r.slopes.push(SlopeRow::new(&name, &fit, window));
        r.check(Check::within(&name, "‖(a,u)^ℓ(t)‖_{Ḃ^s_{2,1}} ≲ ⟨t⟩^{-(d/4 + s/2)}", fit.slope, want - tol, want + tol));
    }
    r.check(Check::at_most("node_refinement", "radial quadrature converged", curves.refinement_change, 0.02));
    Ok(())
}

fn initial_state(cfg: &ExperimentConfig) -> Result<CnsState> {
    let grid = cfg.grid.build()?;
    make_state(&grid, &cfg.data.recipe, cfg.data.size, cfg.knobs.p, cfg.knobs.k0, cfg.seed)
}

fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        t_final: cfg.time.t_final,
        output_dt: cfg.time.output_dt,
        max_step: cfg.time.max_step,
        nonlinear: cfg.knobs.nonlinear,
        keep_trajectory: false,
        density_gate: None,
        monitors: crate::cns::MonitorOptions {
            p: cfg.knobs.p,
            k0: cfg.knobs.k0,
            decay: true,
            s_grid: Vec::new(),
        },
        ..RunOptions::default()
    }
}

/// Shared checks of a global run: bounded `X_p`, density floor and mass.
fn global_checks(r: &mut RunReport, samples: &[crate::cns::MonitorSample], stop: &StopReason) {
    let x0 = samples[0].xp;
    let growth = samples.iter().map(|s| s.xp / x0).fold(0.0, f64::max);
    let min_rho = samples.iter().map(|s| s.min_density).fold(f64::INFINITY, f64::min);
    let m0 = samples[0].mass_mean;
    let drift = samples.iter().map(|s| (s.mass_mean - m0).abs()).fold(0.0, f64::max);
    r.check(Check::holds("completed", "global existence for small data", *stop == StopReason::Completed));
    r.check(Check::at_most("xp_growth", "X_p(t) ≤ C X_{p,0}", growth, 3.0));
    r.check(Check::at_least("min_density", "1 + a stays bounded away from 0", min_rho, 0.9));
    r.check(Check::at_most("mass_drift", "∫a is conserved", drift, 1e-10));
}

fn cns(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let state = initial_state(cfg)?;
    let run = cns_run(&state, &cfg.params, &run_options(cfg))?;
    let samples = &run.monitors.samples;
    let mut table = Table::new("monitors", &["t", "Xp", "Xp_ratio", "min_density", "mass_mean", "l2"]);
    for s in samples {
        table.push(vec![s.t, s.xp, s.xp / run.x_p0, s.min_density, s.mass_mean, s.l2_norm]);
    }
    r.tables.push(table);
    global_checks(r, samples, &run.stop);
    r.notes.push(format!("{} accepted, {} rejected steps", run.accepted_steps, run.rejected_steps));
    Ok(())
}

fn local_scheme(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let state = initial_state(cfg)?;
    let opts = LocalSchemeOptions {
        t_final: cfg.time.t_final,
        intervals: (cfg.time.t_final / cfg.time.output_dt).round().max(1.0) as usize,
        p: cfg.knobs.p,
        ..LocalSchemeOptions::default()
    };
    let sol = local_iteration_scheme(&state.a, &state.u, &cfg.params, &opts)?;
    let rep = &sol.report;
    let mut table = Table::new("local_scheme", &["iteration", "increment", "velocity_integral"]);
    for (i, inc) in rep.increments.iter().enumerate() {
        table.push(vec![i as f64, *inc, rep.velocity_integrals.get(i).copied().unwrap_or(f64::NAN)]);
    }
    r.tables.push(table);
    let ratio = rep.asymptotic_ratio.unwrap_or(f64::INFINITY);
    r.check(Check::at_most("contraction_ratio", "increment(n+1) ≤ 5/8·increment(n) + small", ratio, 0.725));
    let reference = cns_run(
        &state,
        &cfg.params,
        &RunOptions {
            t_final: rep.t_final,
            output_dt: rep.t_final,
            max_step: cfg.time.max_step.min(rep.t_final / 8.0),
            keep_trajectory: false,
            density_gate: None,
            ..RunOptions::default()
        },
    )?;
    let fin = sol.final_state();
    let rel = fin.distance(&reference.final_state)? / reference.final_state.l2_norm();
    r.check(Check::at_most("cross_solver", "local iteration limit solves the system", rel, 1e-4));
    Ok(())
}

fn lagrangian(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let grid = cfg.grid.build()?;
    let d = grid.dim();
    let seeds = seeds(cfg);
    let amp = cfg.data.amplitude;
    let p = cfg.knobs.p;
    let steps = (cfg.time.t_final / cfg.time.output_dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=steps).map(|i| cfg.time.t_final * i as f64 / steps as f64).collect();
    let mut table = Table::new(
        "flow_constants",
        &["seed", "dv_l1", "c_adj", "c_inverse", "c_jacobian", "c_inverse_jacobian", "c_stability"],
    );
    let (mut piola, mut div_rel, mut round_trip) = (0.0f64, 0.0f64, 0.0f64);
    let mut constants: Vec<[f64; 5]> = Vec::new();
    for &s in &seeds {
        let v = smooth_random(&grid, d, amp, s)?;
        let series = vec![v.clone(); times.len()];
        let flow = flow_map(&series, &times, &FlowOptions { p, gate: f64::INFINITY })?;
        let last = flow.last();
        piola = piola.max(piola_defect(last)?);
        let h = smooth_random(&grid, d, 1.0, s + 1000)?;
        let (defect, c1) = div_identity_defect(&h, last)?;
        div_rel = div_rel.max(defect / c1);
        let f = smooth_random(&grid, 1, 1.0, s + 2000)?;
        let back = change_coords(&change_coords(&f, last, CoordChange::ToLagrangian)?, last, CoordChange::ToEulerian)?;
        round_trip = round_trip.max(back.sub(&f)?.l2_norm() / f.l2_norm());
        let b = flow_bounds(&flow, p)?;
        let w = smooth_random(&grid, d, 0.1 * amp, s + 3000)?;
        let series2 = vec![v.add(&w)?; times.len()];
        let flow2 = flow_map(&series2, &times, &FlowOptions { p, gate: f64::INFINITY })?;
        let stab = flow_stability(&flow, &flow2, &series, &series2, p)?;
        let row = [b.constants[0], b.constants[1], b.constants[2], b.constants[3], stab];
        table.push(vec![s as f64, b.dv_l1, row[0], row[1], row[2], row[3], row[4]]);
        constants.push(row);
    }
    r.tables.push(table);
    r.check(Check::at_most("piola", "div adj(DX) = 0", piola, 1e-6));
    r.check(Check::at_most("div_identity", "(div_x H)∘X = J⁻¹div_y(adj(DX)H̄)", div_rel, 1e-6));
    r.check(Check::at_most("coordinate_round_trip", "(f∘X)∘X⁻¹ = f", round_trip, 1e-8));
    let names = ["adj", "inverse", "jacobian", "inverse_jacobian", "stability"];
    let anchors = [
        "‖Id - adj(DX)‖_{Ḃ^{d/p}_{p,1}} ≤ C‖Dv̄‖_{L¹Ḃ^{d/p}_{p,1}}",
        "‖Id - A‖_{Ḃ^{d/p}_{p,1}} ≤ C‖Dv̄‖_{L¹Ḃ^{d/p}_{p,1}}",
        "‖J - 1‖_{Ḃ^{d/p}_{p,1}} ≤ C‖Dv̄‖_{L¹Ḃ^{d/p}_{p,1}}",
        "‖J⁻¹ - 1‖_{Ḃ^{d/p}_{p,1}} ≤ C‖Dv̄‖_{L¹Ḃ^{d/p}_{p,1}}",
        "‖A₂ - A₁‖_{Ḃ^{d/p}_{p,1}} ≤ C‖Dδv‖_{L¹Ḃ^{d/p}_{p,1}}",
    ];
    for k in 0..5 {
        let vals: Vec<f64> = constants.iter().map(|c| c[k]).collect();
        r.constant(&format!("flow_{}", names[k]), vals.iter().copied().fold(0.0, f64::max), anchors[k], &seeds);
        if seeds.len() > 1 {
            r.check(Check::at_most(&format!("flow_{}_spread", names[k]), anchors[k], spread(&vals), 1.3));
        }
    }
    let rho0 = SpectralField::from_fn(&grid, |_| 1.0).add(&smooth_random(&grid, 1, 0.05, cfg.seed + 4000)?)?;
    let u0 = smooth_random(&grid, d, amp, cfg.seed + 5000)?;
    let opts = LagrangianOptions {
        t_final: cfg.time.t_final,
        steps,
        p,
        ..LagrangianOptions::default()
    };
    let (state, rep) = lagrangian_fixed_point_solve(&rho0, &u0, &cfg.params, &opts)?;
    r.check(Check::holds("fixed_point_converged", "Φ has a fixed point in E_p(T)", rep.converged));
    r.check(Check::at_most("mass_invariant", "∂_t(Jρ̄) = 0", rep.mass_defect, MASS_TOLERANCE));
    let a0 = rho0.sub(&SpectralField::from_fn(&grid, |_| 1.0))?;
    let eul = cns_run(
        &CnsState::new(a0, u0, 0.0)?,
        &cfg.params,
        &RunOptions {
            t_final: rep.t_final,
            output_dt: rep.t_final / steps as f64,
            max_step: 1e-3,
            keep_trajectory: true,
            density_gate: None,
            ..RunOptions::default()
        },
    )?;
    let mut worst: f64 = 0.0;
    for i in [steps / 2, steps] {
        let (_, u) = state.eulerian(i)?;
        let s = &eul.trajectory[i];
        worst = worst.max(u.sub(&s.u)?.l2_norm() / s.u.l2_norm());
    }
    r.check(Check::at_most("eulerian_round_trip", "Lagrangian and Eulerian systems are equivalent", worst, 1e-4));
    let mut it = Table::new("fixed_point", &["iteration", "increment"]);
    for (i, inc) in rep.increments.iter().enumerate() {
        it.push(vec![(i + 1) as f64, *inc]);
    }
    r.tables.push(it);
    if rep.halvings > 0 {
        r.notes.push(format!("horizon halved {} times to T = {}", rep.halvings, rep.t_final));
    }
    Ok(())
}

/// Low Mach settings derived from a harness config.
pub fn low_mach_config(cfg: &ExperimentConfig) -> LowMachConfig {
    let mut lm = LowMachConfig {
        n: cfg.grid.n,
        params: cfg.params,
        p: cfg.knobs.p,
        t_final: cfg.time.t_final,
        output_dt: cfg.time.output_dt,
        ..LowMachConfig::default()
    };
    if let Some(eps) = &cfg.knobs.eps_list {
        lm.eps_list = eps.clone();
    }
    if let Some(f) = cfg.knobs.family {
        lm = lm.with_family(f);
    }
    lm
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn low_mach(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    if cfg.grid.box_scale != 1.0 {
        return Err(Error::Config("the low Mach sweep runs on the unit box (grid.box_scale = 1)".into()));
    }
    let lm = low_mach_config(cfg);
    let mut sorted = lm.clone();
    sorted.eps_list.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let rep = low_mach_experiment(&sorted)?;
    let mut table = Table::new("low_mach", &LOW_MACH_COLUMNS);
    for row in &rep.rows {
        table.push(vec![row.eps, row.sup_qu_l2, row.err_pu_vs_v_linf_l2, row.c0_eps_nu]);
    }
    r.tables.push(table);
    let qu: Vec<f64> = rep.rows.iter().map(|x| x.sup_qu_l2).collect();
    let err: Vec<f64> = rep.rows.iter().map(|x| x.err_pu_vs_v_linf_l2).collect();
    match sorted.family {
        crate::cns::LowMachFamily::Oscillating => {
            r.check(Check::holds("qu_decreasing", "Qu^ε → 0 as ε → 0", strictly_decreasing(&qu)));
            r.check(Check::holds("pu_error_decreasing", "Pu^ε → v as ε → 0", strictly_decreasing(&err)));
            if let Some(fit) = &rep.data_exponent {
                let want = rep.expected_exponent;
                r.slopes.push(SlopeRow::new("data_norm_vs_eps", fit, rep.data_window));
                r.check(Check::within(
                    "data_exponent",
                    "‖u₀^ε‖ ≤ Cε^{1-d/p} for p > d",
                    fit.slope,
                    want - 0.2 * want.abs(),
                    want + 0.2 * want.abs(),
                ));
            }
        }
        crate::cns::LowMachFamily::WellPrepared => {
            let worst = qu.iter().copied().fold(0.0, f64::max) / rep.reference_l2;
            r.check(Check::at_most("well_prepared_qu", "well-prepared data stay near div u = 0", worst, 1e-3));
        }
    }
    Ok(())
}

/// Largest increase of a series over consecutive samples with `t ≥ t_min`.
pub fn largest_increase(times: &[f64], values: &[f64], t_min: f64) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .filter(|(t, _)| t[0] >= t_min)
        .map(|(_, v)| v[1] - v[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn decay(cfg: &ExperimentConfig, r: &mut RunReport) -> Result<()> {
    let state = initial_state(cfg)?;
    let opts = DecayOptions {
        t_final: cfg.time.t_final,
        output_dt: cfg.time.output_dt,
        max_step: cfg.time.max_step,
        nonlinear: cfg.knobs.nonlinear,
        k0: cfg.knobs.k0,
        window: cfg.knobs.window,
    };
    let rep = decay_run(&state, &cfg.params, &opts)?;
    let mut table = Table::new("decay", &DECAY_COLUMNS);
    for s in &rep.samples {
        table.push(vec![s.t, s.besov_s0_low, s.besov_s1_low, s.d_high_alpha, s.d_tnablau_high, s.xp]);
    }
    r.tables.push(table);
    for sl in &rep.slopes {
        r.slopes.push(SlopeRow::new(&sl.quantity, &sl.fit, rep.window));
    }
    let l2 = rep.slope("l2").expect("fitted").slope;
    r.check(Check::within("l2_slope", "‖(a,u)(t)‖_{L²} decays like t^{-d/4}", l2, -0.75, -0.30));
    let times: Vec<f64> = rep.samples.iter().map(|s| s.t).collect();
    let tgrad: Vec<f64> = rep.samples.iter().map(|s| s.d_tnablau_high).collect();
    let floor = 1e-10 * rep.samples[0].xp;
    r.check(Check::at_most(
        "tgrad_high_monotone",
        "t‖∇u^h‖_{Ḃ^{d/2}_{2,1}} non-increasing after t = 5",
        largest_increase(&times, &tgrad, 5.0),
        floor,
    ));
    global_checks(r, &rep.samples, &rep.stop);
    if let Some(t) = rep.transition {
        r.notes.push(format!("exponential regime from t ≈ {t:.1} (T_gap = {:.1})", rep.t_gap));
    }
    for c in convolution_self_test(1e4)? {
        r.constant(
            &format!("convolution_{}_{}", c.sigma1, c.sigma2),
            c.constant,
            "∫₀ᵗ⟨t-τ⟩^{-σ₁}⟨τ⟩^{-σ₂}dτ ≤ C⟨t⟩^{-σ₁}",
            &[cfg.seed],
        );
    }
    r.constant("decay_d0", rep.d0, "D₀ = ‖(a₀,u₀)‖^ℓ_{Ḃ^{-d/2}_{2,∞}} + ‖(∇a₀,u₀)‖^h_{Ḃ^{d/2-1}_{2,1}}", &[cfg.seed]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heat_smoke_passes_quickly() {
        let cfg = ExperimentConfig::preset(Experiment::HeatSmoke, 1);
        let r = run_experiment(&cfg).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!(r.wall_clock_s < 1.0);
    }

    #[test]
    fn increase_ignores_early_samples() {
        let t = [0.0, 1.0, 6.0, 7.0];
        let v = [1.0, 2.0, 1.5, 1.4];
        assert!(largest_increase(&t, &v, 5.0) < 0.0);
        assert_eq!(largest_increase(&t, &v, 0.0), 1.0);
    }
}
