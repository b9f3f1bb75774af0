//! Iterative local scheme: linear transport for `aⁿ⁺¹` and a constant
//! Lamé system for `uⁿ⁺¹`, both driven by the previous iterate.

use serde::{Deserialize, Serialize};

use super::params::CnsParams;
use super::rhs::nonlinear_rhs;
use super::state::{strip_nyquist, CnsState};
use crate::error::{Error, Result};
use crate::littlewood_paley::{besov_norm, NormSpec};
use crate::linear::{lame_solve, transport_solve, LameCoefficients, LameOptions, TransportOptions, Velocity};
use crate::spectral::{dealiased_product, divergence, gradient, partial, SpectralField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalSchemeOptions {
    pub t_final: f64,
    /// Number of time intervals of the sampling grid.
    pub intervals: usize,
    pub max_iterations: usize,
    /// Stop once the weighted increment falls below this level.
    pub tolerance: f64,
    pub p: f64,
    /// Gate on `‖a₀‖_{Ḃ^{d/p}_{p,1}}`.
    pub data_gate: f64,
    /// Gate on `Uⁿ(T) = ‖∇uⁿ‖_{L¹_T Ḃ^{d/p}_{p,1}}`; `T` is halved until it holds.
    pub velocity_gate: f64,
    /// `false` drops every right-hand side and the transport velocity.
    pub coupling: bool,
    pub transport_tol: f64,
}

impl Default for LocalSchemeOptions {
    fn default() -> Self {
        Self {
            t_final: 0.2,
            intervals: 40,
            max_iterations: 30,
            tolerance: 1e-11,
            p: 2.0,
            data_gate: 0.5,
            velocity_gate: 0.5,
            coupling: true,
            transport_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalSchemeReport {
    /// Horizon actually used.
    pub t_final: f64,
    pub iterations: usize,
    /// `‖δaⁿ‖_{L^∞_T Ḃ^{d/p-1}_{p,1}} + 4‖δuⁿ‖_{F_p(T)}` for `n = 0, 1, …`.
    pub increments: Vec<f64>,
    /// Successive increment ratios.
    pub ratios: Vec<f64>,
    /// Geometric mean of the last three ratios above the rounding floor.
    pub asymptotic_ratio: Option<f64>,
    /// `Uⁿ(T)` per iterate.
    pub velocity_integrals: Vec<f64>,
    pub data_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct LocalSchemeSolution {
    pub times: Vec<f64>,
    pub a: Vec<SpectralField>,
    pub u: Vec<SpectralField>,
    pub report: LocalSchemeReport,
}

impl LocalSchemeSolution {
    pub fn final_state(&self) -> CnsState {
        CnsState {
            a: self.a.last().expect("nonempty").clone(),
            u: self.u.last().expect("nonempty").clone(),
            t: *self.times.last().expect("nonempty"),
        }
    }
}

fn trapezoid(values: &[f64], times: &[f64]) -> f64 {
    values
        .windows(2)
        .zip(times.windows(2))
        .map(|(v, t)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

fn norm(f: &SpectralField, s: f64, p: f64) -> Result<f64> {
    besov_norm(f, &NormSpec::besov(s, p, 1.0))
}

/// `∫₀ᵀ‖∇u‖_{Ḃ^{d/p}_{p,1}}`.
fn velocity_integral(u: &[SpectralField], times: &[f64], p: f64) -> Result<f64> {
    let d = u[0].grid().dim();
    let vals = u
        .iter()
        .map(|x| {
            let g = SpectralField::stack(&(0..d).map(|j| partial(x, j)).collect::<Vec<_>>())?;
            norm(&g, d as f64 / p, p)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(trapezoid(&vals, times))
}

fn increment(
    a: (&[SpectralField], &[SpectralField]),
    u: (&[SpectralField], &[SpectralField]),
    times: &[f64],
    p: f64,
) -> Result<f64> {
    let d = a.0[0].grid().dim() as f64;
    let mut da: f64 = 0.0;
    let mut du_sup: f64 = 0.0;
    let mut du_int = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        da = da.max(norm(&a.1[i].sub(&a.0[i])?, d / p - 1.0, p)?);
        let du = u.1[i].sub(&u.0[i])?;
        du_sup = du_sup.max(norm(&du, d / p - 2.0, p)?);
        du_int.push(norm(&du, d / p, p)?);
    }
    Ok(da + 4.0 * (du_sup + trapezoid(&du_int, times)))
}

struct Iterate {
    a: Vec<SpectralField>,
    u: Vec<SpectralField>,
}

fn next_iterate(
    prev: &Iterate,
    a0: &SpectralField,
    u0: &SpectralField,
    params: &CnsParams,
    times: &[f64],
    opts: &LocalSchemeOptions,
) -> Result<Iterate> {
    let lame = LameCoefficients::Constant {
        lambda: params.lambda,
        mu: params.mu,
    };
    if !opts.coupling {
        let a = vec![a0.clone(); times.len()];
        let u = lame_solve(u0, None, &lame, times, &LameOptions::default())?.series;
        return Ok(Iterate { a, u });
    }
    let mut fa = Vec::with_capacity(times.len());
    let mut fu = Vec::with_capacity(times.len());
    for (an, un) in prev.a.iter().zip(&prev.u) {
        let div = divergence(un)?;
        fa.push(strip_nyquist(&div.add(&dealiased_product(an, &div)?)?.scaled(-1.0)));
        let state = CnsState {
            a: an.clone(),
            u: un.clone(),
            t: 0.0,
        };
        let g = nonlinear_rhs(&state, params)?.g;
        fu.push(g.axpy(-params.alpha(), &gradient(an)?)?);
    }
    let topts = TransportOptions {
        tol: opts.transport_tol,
        ..TransportOptions::default()
    };
    let velocity = Velocity::Series(prev.u.clone());
    let a = transport_solve(&velocity, a0, Some(&fa), 0.0, times, &topts)?
        .series
        .iter()
        .map(strip_nyquist)
        .collect();
    let u = lame_solve(u0, Some(&fu), &lame, times, &LameOptions::default())?.series;
    Ok(Iterate { a, u })
}

/// Runs the scheme; the horizon is halved while `Uⁿ(T)` exceeds the gate.
pub fn local_iteration_scheme(
    a0: &SpectralField,
    u0: &SpectralField,
    params: &CnsParams,
    opts: &LocalSchemeOptions,
) -> Result<LocalSchemeSolution> {
    params.validate(false)?;
    if opts.intervals == 0 || !(opts.t_final > 0.0) {
        return Err(Error::InvalidArgument("need a positive horizon and at least one interval".into()));
    }
    let s0 = CnsState::new(a0.clone(), u0.clone(), 0.0)?;
    let (a0, u0) = (&s0.a, &s0.u);
    let d = a0.grid().dim() as f64;
    let data_norm = norm(a0, d / opts.p, opts.p)?;
    if data_norm > opts.data_gate {
        return Err(Error::Refused(format!(
            "‖a₀‖_{{Ḃ^{{d/p}}_{{p,1}}}} = {data_norm:.3e} exceeds the gate {}",
            opts.data_gate
        )));
    }
    let mut t_final = opts.t_final;
    'horizon: for _ in 0..30 {
        let times: Vec<f64> = (0..=opts.intervals)
            .map(|i| t_final * i as f64 / opts.intervals as f64)
            .collect();
        let lame = LameCoefficients::Constant {
            lambda: params.lambda,
            mu: params.mu,
        };
        let mut cur = Iterate {
            a: vec![a0.clone(); times.len()],
            u: lame_solve(u0, None, &lame, &times, &LameOptions::default())?.series,
        };
        let mut increments = Vec::new();
        let mut integrals = vec![velocity_integral(&cur.u, &times, opts.p)?];
        let mut growth = 0;
        let mut converged = false;
        for _ in 0..opts.max_iterations {
            if *integrals.last().expect("nonempty") > opts.velocity_gate {
                t_final *= 0.5;
                continue 'horizon;
            }
            let next = next_iterate(&cur, a0, u0, params, &times, opts)?;
            let inc = increment((&cur.a, &next.a), (&cur.u, &next.u), &times, opts.p)?;
            if let Some(&prev) = increments.last() {
                if inc > prev {
                    growth += 1;
                    if growth >= 2 {
                        return Err(Error::Divergence(format!(
                            "increments grew twice in a row: {prev:.3e} -> {inc:.3e}"
                        )));
                    }
                } else {
                    growth = 0;
                }
            }
            increments.push(inc);
            integrals.push(velocity_integral(&next.u, &times, opts.p)?);
            cur = next;
            if inc <= opts.tolerance {
                converged = true;
                break;
            }
        }
        let ratios: Vec<f64> = increments
            .windows(2)
            .filter(|w| w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        let floor = 1e3 * opts.tolerance.max(1e-14);
        let usable: Vec<f64> = increments
            .windows(2)
            .filter(|w| w[1] > floor && w[0] > 0.0)
            .map(|w| w[1] / w[0])
            .collect();
        let asymptotic_ratio = if usable.is_empty() {
            None
        } else {
            let tail = &usable[usable.len().saturating_sub(3)..];
            Some(tail.iter().map(|r| r.ln()).sum::<f64>().exp().powf(1.0 / tail.len() as f64))
        };
        return Ok(LocalSchemeSolution {
            times,
            a: cur.a,
            u: cur.u,
            report: LocalSchemeReport {
                t_final,
                iterations: increments.len(),
                increments,
                ratios,
                asymptotic_ratio,
                velocity_integrals: integrals,
                data_norm,
                converged,
            },
        });
    }
    Err(Error::Refused("velocity gate not met after 30 horizon halvings".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn uncoupled_scheme_converges_at_once() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let a0 = SpectralField::from_fn(&g, |x| 0.05 * x[0].cos());
        let u0 = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = 0.05 * x[1].sin();
            o[1] = 0.05 * x[0].sin();
        });
        let opts = LocalSchemeOptions {
            coupling: false,
            intervals: 8,
            ..LocalSchemeOptions::default()
        };
        let sol = local_iteration_scheme(&a0, &u0, &CnsParams::default(), &opts).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert_eq!(sol.report.increments[0], 0.0);
        assert!(sol.report.converged);
    }
}
