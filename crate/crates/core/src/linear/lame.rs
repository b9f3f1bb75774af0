//! Lamé systems: `∂_t u - Au = f` with `A = μΔ + (λ+μ)∇div`, and the
//! variable-coefficient form `∂_t u - 2a·div(μD(u)) - b∇(λ div u) = f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::heat::{check_series, RegularityReport};
use super::modes::check_grid;
use super::phi::phi_scalar;
use crate::error::{Error, Result};
use crate::littlewood_paley::{besov_norm, block_norms, low_cut, tilde_from_blocks_at, weighted_lr, BlockNorms, NormSpec};
use crate::spectral::{dealiased_product, divergence, gradient, partial, PaddedSamples, SpectralField, TorusGrid};

/// Scalar coefficient fields of the variable Lamé operator.
#[derive(Clone, Debug)]
pub struct VariableLame {
    pub a: SpectralField,
    pub b: SpectralField,
    pub mu: SpectralField,
    pub lambda: SpectralField,
}

#[derive(Clone, Debug)]
pub enum LameCoefficients {
    Constant { lambda: f64, mu: f64 },
    Variable(VariableLame),
}

impl VariableLame {
    /// Constant coefficients written as fields (`a = b = 1`).
    pub fn from_constants(grid: &TorusGrid, lambda: f64, mu: f64) -> Self {
        Self {
            a: SpectralField::from_fn(grid, |_| 1.0),
            b: SpectralField::from_fn(grid, |_| 1.0),
            mu: SpectralField::from_fn(grid, move |_| mu),
            lambda: SpectralField::from_fn(grid, move |_| lambda),
        }
    }

    fn fields(&self) -> [&SpectralField; 4] {
        [&self.a, &self.b, &self.mu, &self.lambda]
    }

    /// `aμ` and `2aμ + bλ`.
    pub fn principal_parts(&self) -> Result<(SpectralField, SpectralField)> {
        let am = dealiased_product(&self.a, &self.mu)?;
        let bl = dealiased_product(&self.b, &self.lambda)?;
        let q = am.scaled(2.0).add(&bl)?;
        Ok((am, q))
    }

    /// `α = min(inf aμ, inf(2aμ + bλ))` over grid samples.
    pub fn ellipticity(&self) -> Result<f64> {
        let ps = PaddedSamples::new(&self.fields())?;
        let vals = ps.map(2, |x, o| {
            o[0] = x[0] * x[2];
            o[1] = 2.0 * x[0] * x[2] + x[1] * x[3];
        });
        let min = |v: &Vec<f64>| v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(min(&vals[0]).min(min(&vals[1])))
    }

    /// Mean diffusivities `(mean(aμ), mean(2aμ + bλ))` of the implicit part.
    pub fn mean_diffusivities(&self) -> Result<(f64, f64)> {
        let (p, q) = self.principal_parts()?;
        Ok((p.mean(0).re, q.mean(0).re))
    }

    /// `2a·div(μD(u)) + b∇(λ div u)`.
    pub fn apply(&self, u: &SpectralField) -> Result<SpectralField> {
        let grid = u.grid();
        let d = grid.dim();
        let du: Vec<SpectralField> = (0..d).map(|j| partial(u, j)).collect();
        let mut rows = Vec::with_capacity(d);
        for i in 0..d {
            let mut acc: Option<SpectralField> = None;
            for j in 0..d {
                // 2D_ij = ∂_j u_i + ∂_i u_j
                let sym = du[j].component(i).add(&du[i].component(j))?;
                let flux = partial(&dealiased_product(&self.mu, &sym)?, j);
                acc = Some(match acc {
                    Some(a) => a.add(&flux)?,
                    None => flux,
                });
            }
            rows.push(dealiased_product(&self.a, &acc.expect("d >= 1"))?);
        }
        let visc = SpectralField::stack(&rows)?;
        let bulk = gradient(&dealiased_product(&self.lambda, &divergence(u)?)?)?;
        visc.add(&dealiased_product(&self.b, &bulk)?)
    }
}

/// Measured sides of the smallness and positivity conditions for `Ṡ_m`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LameDiagnostics {
    pub ellipticity: f64,
    pub mean_p: f64,
    pub mean_q: f64,
    pub m: i32,
    /// `min(inf Ṡ_m(2aμ+bλ), inf Ṡ_m(aμ))`, to compare with `α/2`.
    pub positivity: f64,
    /// `‖(Id - Ṡ_m)(μ∇a, a∇μ, λ∇b, b∇λ)‖_{Ḃ^{d/2-1}_{2,1}}`, to compare with `ηα`.
    pub smallness: f64,
}

pub fn lame_diagnostics(c: &VariableLame, m: i32) -> Result<LameDiagnostics> {
    let grid = c.a.grid();
    let d = grid.dim();
    let alpha = c.ellipticity()?;
    let (mean_p, mean_q) = c.mean_diffusivities()?;
    let (pp, qq) = c.principal_parts()?;
    let sp = PaddedSamples::new(&[&low_cut(&pp, m)?, &low_cut(&qq, m)?])?;
    let positivity = sp.min(0).min(sp.min(1));
    let pairs = [(&c.mu, &c.a), (&c.a, &c.mu), (&c.lambda, &c.b), (&c.b, &c.lambda)];
    let mut parts = Vec::with_capacity(4);
    for (coef, f) in pairs {
        parts.push(dealiased_product(coef, &gradient(f)?)?);
    }
    let stacked = SpectralField::stack(&parts)?;
    let high = stacked.sub(&low_cut(&stacked, m)?)?;
    let smallness = besov_norm(&high, &NormSpec::besov(d as f64 / 2.0 - 1.0, 2.0, 1.0))?;
    Ok(LameDiagnostics {
        ellipticity: alpha,
        mean_p,
        mean_q,
        m,
        positivity,
        smallness,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LameOptions {
    pub s: f64,
    pub p: f64,
    /// Largest internal step of the variable-coefficient scheme.
    pub max_step: f64,
    /// Index `m` of the diagnostics; defaults to the lowest resolvable block.
    pub diagnostic_m: Option<i32>,
}

impl Default for LameOptions {
    fn default() -> Self {
        Self {
            s: 0.0,
            p: 2.0,
            max_step: f64::INFINITY,
            diagnostic_m: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LameSolution {
    pub times: Vec<f64>,
    pub series: Vec<SpectralField>,
    pub report: RegularityReport,
    pub diagnostics: Option<LameDiagnostics>,
}

/// Per-mode operator `φ(z_P)P + φ(z_Q)Q` with `z = -κ|ξ|²h`.
#[derive(Clone, Copy)]
pub(crate) struct SplitDiffusion {
    pub kp: f64,
    pub kq: f64,
}

impl SplitDiffusion {
    /// Applies the `which`-th φ-function (`0` is the exponential).
    pub(crate) fn apply(&self, u: &SpectralField, h: f64, which: usize) -> SpectralField {
        let grid = u.grid();
        let d = grid.dim();
        let mut out = SpectralField::zeros(grid, d);
        out.set_real(u.is_real());
        for flat in 0..grid.len() {
            if grid.is_nyquist(flat) {
                continue;
            }
            let r2 = grid.wave_norm_sq(flat);
            let fp = phi_scalar(-self.kp * r2 * h)[which];
            let fq = phi_scalar(-self.kq * r2 * h)[which];
            let xi = grid.wave_vector(flat);
            let dot: Complex64 = if r2 > 0.0 {
                (0..d).map(|c| u.coeffs(c)[flat] * xi[c]).sum::<Complex64>() / r2
            } else {
                Complex64::default()
            };
            for c in 0..d {
                let q = dot * xi[c];
                let p = u.coeffs(c)[flat] - q;
                out.coeffs_mut(c)[flat] = p * fp + q * fq;
            }
        }
        out
    }
}

fn strip_nyquist(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for c in 0..u.components() {
        for flat in 0..grid.len() {
            if grid.is_nyquist(flat) {
                out.coeffs_mut(c)[flat] = Complex64::default();
            }
        }
    }
    out
}

fn lerp2(f0: &SpectralField, f1: &SpectralField, w: f64) -> SpectralField {
    let mut out = f0.scaled(1.0 - w);
    out.axpy_in_place(w, f1);
    out.set_real(f0.is_real() && f1.is_real());
    out
}

/// Solves on `t_grid`; `f` is sampled on `t_grid` and linear in between.
pub fn lame_solve(
    u0: &SpectralField,
    f_series: Option<&[SpectralField]>,
    coeffs: &LameCoefficients,
    t_grid: &[f64],
    opts: &LameOptions,
) -> Result<LameSolution> {
    check_grid(t_grid)?;
    check_series(f_series, u0, t_grid.len())?;
    let grid = u0.grid();
    let d = grid.dim();
    if u0.components() != d {
        return Err(Error::InvalidArgument("Lamé data must be a vector field".into()));
    }
    let f_clean: Option<Vec<SpectralField>> = f_series.map(|f| f.iter().map(strip_nyquist).collect());
    let fs = f_clean.as_deref();
    let (split, variable, alpha) = match coeffs {
        LameCoefficients::Constant { lambda, mu } => {
            let nu = lambda + 2.0 * mu;
            if !(*mu > 0.0 && nu > 0.0) {
                return Err(Error::Ellipticity(format!("need μ > 0 and λ + 2μ > 0 (μ = {mu}, λ + 2μ = {nu})")));
            }
            (SplitDiffusion { kp: *mu, kq: nu }, None, mu.min(nu))
        }
        LameCoefficients::Variable(c) => {
            if c.fields().iter().any(|f| f.grid() != grid || f.components() != 1) {
                return Err(Error::InvalidArgument("coefficients must be scalar fields on the solution grid".into()));
            }
            let alpha = c.ellipticity()?;
            if !(alpha > 0.0) {
                return Err(Error::Ellipticity(format!("min(inf aμ, inf(2aμ + bλ)) = {alpha:.3e}")));
            }
            let (kp, kq) = c.mean_diffusivities()?;
            (SplitDiffusion { kp, kq }, Some(c), alpha)
        }
    };
    let mut series = vec![strip_nyquist(u0)];
    for i in 1..t_grid.len() {
        let h = t_grid[i] - t_grid[i - 1];
        let u = &series[i - 1];
        let next = match variable {
            None => {
                let mut next = split.apply(u, h, 0);
                if let Some(f) = fs {
                    let df = f[i].sub(&f[i - 1])?;
                    next.axpy_in_place(h, &split.apply(&f[i - 1], h, 1));
                    next.axpy_in_place(h, &split.apply(&df, h, 2));
                    next.set_real(u.is_real() && f[i].is_real() && f[i - 1].is_real());
                }
                next
            }
            Some(c) => {
                let n_sub = (h / opts.max_step).ceil().max(1.0) as usize;
                let dt = h / n_sub as f64;
                let mut v = u.clone();
                for k in 0..n_sub {
                    let w0 = k as f64 / n_sub as f64;
                    let src = |w: f64| fs.map(|f| lerp2(&f[i - 1], &f[i], w));
                    let before = v.l2_norm();
                    v = imex_step(c, &split, &v, src(w0), src(w0 + 0.5 / n_sub as f64), dt)?;
                    let after = v.l2_norm();
                    if before > 0.0 && after > 10.0 * before {
                        return Err(Error::Instability(format!(
                            "Lamé norm grew from {before:.3e} to {after:.3e} in one step"
                        )));
                    }
                }
                v
            }
        };
        series.push(next);
    }
    let report = lame_report(&series, fs, t_grid, alpha, opts)?;
    let diagnostics = match variable {
        Some(c) => {
            let m = opts.diagnostic_m.unwrap_or(crate::littlewood_paley::resolvable_range(grid).0);
            Some(lame_diagnostics(c, m)?)
        }
        None => None,
    };
    Ok(LameSolution {
        times: t_grid.to_vec(),
        series,
        report,
        diagnostics,
    })
}

/// ETD2 with the mean-coefficient operator exact and
/// `N(u) = (L - L̄)u + f` explicit.
fn imex_step(
    c: &VariableLame,
    split: &SplitDiffusion,
    u: &SpectralField,
    f0: Option<SpectralField>,
    f_half: Option<SpectralField>,
    h: f64,
) -> Result<SpectralField> {
    let deviation = |v: &SpectralField, f: &Option<SpectralField>| -> Result<SpectralField> {
        let full = c.apply(v)?;
        let mean = mean_operator(split, v);
        let mut n = full.sub(&mean)?;
        if let Some(f) = f {
            n.axpy_in_place(1.0, f);
            n.set_real(n.is_real() && f.is_real());
        }
        Ok(strip_nyquist(&n))
    };
    let n0 = deviation(u, &f0)?;
    let mut mid = split.apply(u, 0.5 * h, 0);
    mid.axpy_in_place(0.5 * h, &split.apply(&n0, 0.5 * h, 1));
    let n1 = deviation(&mid, &f_half)?;
    let mut out = split.apply(u, h, 0);
    let p1 = split.apply(&n0, h, 1);
    let p2 = split.apply(&n0, h, 2);
    let q2 = split.apply(&n1, h, 2);
    out.axpy_in_place(h, &p1);
    out.axpy_in_place(-2.0 * h, &p2);
    out.axpy_in_place(2.0 * h, &q2);
    out.set_real(u.is_real() && n0.is_real() && n1.is_real());
    Ok(out)
}

/// `κ_P ΔPu + κ_Q ΔQu`.
fn mean_operator(split: &SplitDiffusion, u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let d = grid.dim();
    let mut out = SpectralField::zeros(grid, d);
    out.set_real(u.is_real());
    for flat in 0..grid.len() {
        if grid.is_nyquist(flat) {
            continue;
        }
        let r2 = grid.wave_norm_sq(flat);
        if r2 == 0.0 {
            continue;
        }
        let xi = grid.wave_vector(flat);
        let dot: Complex64 = (0..d).map(|c| u.coeffs(c)[flat] * xi[c]).sum::<Complex64>() / r2;
        for c in 0..d {
            let q = dot * xi[c];
            let p = u.coeffs(c)[flat] - q;
            out.coeffs_mut(c)[flat] = -(p * split.kp + q * split.kq) * r2;
        }
    }
    out
}

fn lame_report(
    series: &[SpectralField],
    f_series: Option<&[SpectralField]>,
    times: &[f64],
    alpha: f64,
    opts: &LameOptions,
) -> Result<RegularityReport> {
    let bn: Vec<BlockNorms> = series.iter().map(|u| block_norms(u, opts.p)).collect::<Result<_>>()?;
    let base = weighted_lr(&bn[0], opts.s, 1.0);
    let (sup, integral, forcing) = if times.len() > 1 {
        let forcing = match f_series {
            Some(f) => {
                let fb: Vec<BlockNorms> = f.iter().map(|x| block_norms(x, opts.p)).collect::<Result<_>>()?;
                tilde_from_blocks_at(&fb, times, opts.s, 1.0, 1.0)
            }
            None => 0.0,
        };
        (
            tilde_from_blocks_at(&bn, times, opts.s, f64::INFINITY, 1.0),
            tilde_from_blocks_at(&bn, times, opts.s + 2.0, 1.0, 1.0),
            forcing,
        )
    } else {
        (base, 0.0, 0.0)
    };
    let lhs = sup + alpha * integral;
    let rhs = base + forcing;
    Ok(RegularityReport {
        s: opts.s,
        p: opts.p,
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TorusGrid {
        TorusGrid::new(2, 16, 1.0).unwrap()
    }

    #[test]
    fn solenoidal_and_gradient_data_diffuse_separately() {
        let g = grid();
        let (lambda, mu) = (0.5, 0.3);
        let sol = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = -x[1].sin() * x[0].sin();
            o[1] = -x[0].cos() * x[1].cos();
        });
        let grad = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = x[0].cos();
            o[1] = 0.0;
        });
        let t = [0.0, 0.4];
        let c = LameCoefficients::Constant { lambda, mu };
        let a = lame_solve(&sol, None, &c, &t, &LameOptions::default()).unwrap();
        let b = lame_solve(&grad, None, &c, &t, &LameOptions::default()).unwrap();
        let want_a = sol.scaled((-2.0 * mu * 0.4f64).exp());
        let want_b = grad.scaled((-(lambda + 2.0 * mu) * 0.4f64).exp());
        assert!(a.series[1].sub(&want_a).unwrap().max_coeff() < 1e-12);
        assert!(b.series[1].sub(&want_b).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn variable_operator_with_constant_fields_is_lame() {
        let g = grid();
        let u = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = (x[0] + 2.0 * x[1]).sin();
            o[1] = (3.0 * x[0]).cos() * x[1].sin();
        });
        let c = VariableLame::from_constants(&g, 0.4, 0.7);
        let lhs = c.apply(&u).unwrap();
        let rhs = crate::spectral::apply_symbol(
            &u,
            &crate::spectral::FourierSymbol::lame(2, 0.4, 0.7),
            crate::spectral::ZeroMode::Annihilate,
        )
        .unwrap();
        assert!(lhs.sub(&rhs).unwrap().max_coeff() < 1e-10);
    }

    #[test]
    fn ellipticity_violation_is_rejected() {
        let g = grid();
        let c = LameCoefficients::Constant { lambda: -1.0, mu: 0.3 };
        let u = SpectralField::zeros(&g, 2);
        assert!(lame_solve(&u, None, &c, &[0.0, 1.0], &LameOptions::default()).is_err());
    }
}
