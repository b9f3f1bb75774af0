//! Picard iteration `v ↦ Φ(v)` for the Lagrangian system on `[0, T]`.

use serde::{Deserialize, Serialize};

use super::algebra::read_mat;
use super::coords::{change_coords, CoordChange};
use super::flow::{flow_map, jacobian_field, matrix_divergence, FlowMap, FlowOptions};
use super::rhs::{lagrangian_rhs_terms, DENSITY_FLOOR};
use crate::cns::CnsParams;
use crate::error::{Error, Result};
use crate::linear::{lame_solve, LameCoefficients, LameDiagnostics, LameOptions, VariableLame};
use crate::littlewood_paley::{besov_norm, NormSpec};
use crate::spectral::{dealiased_product, PaddedSamples, SpectralField};

/// Allowed `max|Jρ̄ - ρ₀| / max ρ₀`.
pub const MASS_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianOptions {
    pub t_final: f64,
    /// Uniform time steps on `[0, T]`.
    pub steps: usize,
    pub p: f64,
    /// Bound `c` on `∫₀ᵀ‖∇v‖_{Ḃ^{d/p}_{p,1}}`; `T` is halved until it holds.
    pub gate: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for LagrangianOptions {
    fn default() -> Self {
        Self {
            t_final: 0.5,
            steps: 64,
            p: 2.0,
            gate: 0.1,
            tol: 1e-8,
            max_iter: 30,
            max_halvings: 8,
        }
    }
}

/// `(ρ̄, ū)` on the reference grid with the flow of `ū`.
#[derive(Clone, Debug)]
pub struct LagState {
    pub times: Vec<f64>,
    pub rho_bar: Vec<SpectralField>,
    pub u_bar: Vec<SpectralField>,
    pub flow: FlowMap,
}

impl LagState {
    /// `(ρ, u)` at output `i` in Eulerian coordinates.
    pub fn eulerian(&self, i: usize) -> Result<(SpectralField, SpectralField)> {
        let snap = &self.flow.snapshots[i];
        Ok((
            change_coords(&self.rho_bar[i], snap, CoordChange::ToEulerian)?,
            change_coords(&self.u_bar[i], snap, CoordChange::ToEulerian)?,
        ))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LagrangianReport {
    /// Horizon actually solved, after halvings.
    pub t_final: f64,
    pub halvings: usize,
    pub iterations: usize,
    /// `E_p(T)` norms of successive differences.
    pub increments: Vec<f64>,
    pub converged: bool,
    pub gate_integral: f64,
    pub min_jacobian: f64,
    /// `max|Jρ̄ - ρ₀| / max ρ₀` over all outputs.
    pub mass_defect: f64,
    /// Measured sides of the variable Lamé positivity and smallness conditions.
    pub lame: Option<LameDiagnostics>,
}

/// `sup_t‖z‖_{Ḃ^{d/p-1}_{p,1}} + ∫₀ᵀ‖z‖_{Ḃ^{d/p+1}_{p,1}}`.
pub fn ep_norm(series: &[SpectralField], times: &[f64], p: f64) -> Result<f64> {
    let d = series[0].grid().dim() as f64;
    let lo = NormSpec::besov(d / p - 1.0, p, 1.0);
    let hi = NormSpec::besov(d / p + 1.0, p, 1.0);
    let mut sup: f64 = 0.0;
    let mut high = Vec::with_capacity(series.len());
    for z in series {
        sup = sup.max(besov_norm(z, &lo)?);
        high.push(besov_norm(z, &hi)?);
    }
    let integral: f64 = high
        .windows(2)
        .zip(times.windows(2))
        .map(|(n, t)| 0.5 * (t[1] - t[0]) * (n[0] + n[1]))
        .sum();
    Ok(sup + integral)
}

fn reciprocal(f: &SpectralField) -> Result<SpectralField> {
    let ps = PaddedSamples::new(&[f])?;
    let vals = ps.map(1, |x, o| o[0] = x[0].recip());
    Ok(ps.to_field(&vals))
}

/// `ρ₀⁻¹div(I₁ + I₂ + I₃ + I₄)(v)` at every output.
fn forcing(v: &[SpectralField], flow: &FlowMap, rho0: &SpectralField, inv_rho0: &SpectralField, params: &CnsParams) -> Result<Vec<SpectralField>> {
    v.iter()
        .zip(&flow.snapshots)
        .map(|(vi, snap)| {
            let terms = lagrangian_rhs_terms(snap, vi, rho0, params)?;
            dealiased_product(inv_rho0, &matrix_divergence(&terms.sum()?)?)
        })
        .collect()
}

/// `ρ̄ = ρ₀ exp(-∫₀ᵗ tr(Dū A))` by the trapezoid rule, independent of `J`.
fn density_history(u: &[SpectralField], flow: &FlowMap, rho0: &SpectralField) -> Result<Vec<SpectralField>> {
    let d = rho0.grid().dim();
    let n = d * d;
    let mut traces = Vec::with_capacity(u.len());
    for (ui, snap) in u.iter().zip(&flow.snapshots) {
        let du = jacobian_field(ui)?;
        let ps = PaddedSamples::new(&[&du, &snap.inverse])?;
        let vals = ps.map(1, |x, o| {
            let (dm, a) = (read_mat(x, 0, d), read_mat(x, n, d));
            o[0] = (0..d).map(|i| (0..d).map(|k| dm[i][k] * a[k][i]).sum::<f64>()).sum();
        });
        traces.push(ps.to_field(&vals));
    }
    let mut integral = SpectralField::zeros(rho0.grid(), 1);
    let mut out = vec![rho0.clone()];
    for i in 1..u.len() {
        let h = flow.times[i] - flow.times[i - 1];
        integral = integral.axpy(0.5 * h, &traces[i - 1])?.axpy(0.5 * h, &traces[i])?;
        let ps = PaddedSamples::new(&[rho0, &integral])?;
        let vals = ps.map(1, |x, o| o[0] = x[0] * (-x[1]).exp());
        out.push(ps.to_field(&vals));
    }
    Ok(out)
}

fn mass_defect(rho_bar: &[SpectralField], flow: &FlowMap, rho0: &SpectralField) -> Result<f64> {
    let scale = PaddedSamples::new(&[rho0])?.max(0).abs();
    let mut worst: f64 = 0.0;
    for (r, snap) in rho_bar.iter().zip(&flow.snapshots) {
        let ps = PaddedSamples::new(&[r, &snap.jacobian, rho0])?;
        let vals = ps.map(1, |x, o| o[0] = (x[0] * x[1] - x[2]).abs());
        worst = worst.max(vals[0].iter().copied().fold(0.0, f64::max));
    }
    Ok(worst / scale)
}

enum Attempt {
    Done(LagState, LagrangianReport),
    GateExceeded,
}

fn attempt(
    rho0: &SpectralField,
    u0: &SpectralField,
    params: &CnsParams,
    opts: &LagrangianOptions,
    t_final: f64,
) -> Result<Attempt> {
    let grid = u0.grid();
    let d = grid.dim();
    let times: Vec<f64> = (0..=opts.steps).map(|i| t_final * i as f64 / opts.steps as f64).collect();
    let flow_opts = FlowOptions { p: opts.p, gate: opts.gate };
    let inv_rho0 = reciprocal(rho0)?;
    let coeffs = LameCoefficients::Variable(VariableLame {
        a: inv_rho0.clone(),
        b: inv_rho0.clone(),
        mu: SpectralField::from_fn(grid, {
            let mu = params.mu;
            move |_| mu
        }),
        lambda: SpectralField::from_fn(grid, {
            let lambda = params.lambda;
            move |_| lambda
        }),
    });
    let lame_opts = LameOptions {
        s: d as f64 / opts.p - 1.0,
        p: opts.p,
        max_step: t_final / opts.steps as f64,
        diagnostic_m: None,
    };
    let constant = LameCoefficients::Constant {
        lambda: params.lambda,
        mu: params.mu,
    };
    let mut v = lame_solve(u0, None, &constant, &times, &lame_opts)?.series;
    let mut increments = Vec::new();
    let mut over = 0;
    let mut converged = false;
    let mut lame = None;
    for _ in 0..opts.max_iter {
        let flow = flow_map(&v, &times, &flow_opts)?;
        if flow.gate_integral() > opts.gate {
            return Ok(Attempt::GateExceeded);
        }
        let f = forcing(&v, &flow, rho0, &inv_rho0, params)?;
        let sol = lame_solve(u0, Some(&f), &coeffs, &times, &lame_opts)?;
        lame = sol.diagnostics;
        let diff: Vec<SpectralField> = sol.series.iter().zip(&v).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        let inc = ep_norm(&diff, &times, opts.p)?;
        if let Some(&prev) = increments.last() {
            if prev > 0.0 && inc / prev > 1.0 {
                over += 1;
                if over >= 2 {
                    return Err(Error::Divergence(format!(
                        "increment ratio above 1 twice in a row (last {inc:.3e} after {prev:.3e})"
                    )));
                }
            } else {
                over = 0;
            }
        }
        increments.push(inc);
        v = sol.series;
        if inc < opts.tol {
            converged = true;
            break;
        }
    }
    let flow = flow_map(&v, &times, &flow_opts)?;
    if flow.gate_integral() > opts.gate {
        return Ok(Attempt::GateExceeded);
    }
    let rho_bar = density_history(&v, &flow, rho0)?;
    let defect = mass_defect(&rho_bar, &flow, rho0)?;
    let report = LagrangianReport {
        t_final,
        halvings: 0,
        iterations: increments.len(),
        increments,
        converged,
        gate_integral: flow.gate_integral(),
        min_jacobian: flow.min_jacobian(),
        mass_defect: defect,
        lame,
    };
    Ok(Attempt::Done(
        LagState {
            times,
            rho_bar,
            u_bar: v,
            flow,
        },
        report,
    ))
}

/// Fixed point of `Φ`, where `Φ(v)` solves
/// `∂_t u - ρ₀⁻¹div(2μD(u) + λ div u Id) = ρ₀⁻¹div(I₁ + I₂ + I₃ + I₄)(v)`.
///
/// The horizon is halved until the gate holds along every iterate.
pub fn lagrangian_fixed_point_solve(
    rho0: &SpectralField,
    u0: &SpectralField,
    params: &CnsParams,
    opts: &LagrangianOptions,
) -> Result<(LagState, LagrangianReport)> {
    params.validate(false)?;
    let d = u0.grid().dim();
    if u0.components() != d || rho0.components() != 1 || rho0.grid() != u0.grid() {
        return Err(Error::InvalidArgument("need scalar ρ₀ and vector u₀ on one grid".into()));
    }
    if !(opts.t_final > 0.0 && opts.steps >= 1 && opts.gate > 0.0 && opts.tol > 0.0 && opts.max_iter >= 1) {
        return Err(Error::InvalidArgument(format!("invalid Lagrangian options {opts:?}")));
    }
    let floor = PaddedSamples::new(&[rho0])?.min(0);
    if !(floor > DENSITY_FLOOR) {
        return Err(Error::DensityPositivity(floor));
    }
    let mut t_final = opts.t_final;
    for halvings in 0..=opts.max_halvings {
        match attempt(rho0, u0, params, opts, t_final)? {
            Attempt::Done(state, mut report) => {
                report.halvings = halvings;
                return Ok((state, report));
            }
            Attempt::GateExceeded => t_final *= 0.5,
        }
    }
    Err(Error::Refused(format!(
        "gate {} still exceeded after {} halvings of T",
        opts.gate, opts.max_halvings
    )))
}
