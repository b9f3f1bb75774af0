//! Per-frequency eigenstructure of the linearized compressible system and its
//! Lyapunov functional.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::phi::{mat2_mul_vec, phi_matrix2, Mat2};
use crate::error::{Error, Result};

/// `M_ρ = [[0, -ρ], [ρ, -ρ²]]` acting on `(â, v̂)` with `v = |D|⁻¹div u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeMatrix {
    pub rho: f64,
    pub m: Mat2,
}

impl ModeMatrix {
    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

pub fn mode_matrix(rho: f64) -> ModeMatrix {
    ModeMatrix {
        rho,
        m: general_mode_matrix(rho, 1.0, 1.0),
    }
}

/// `[[0, -ρ], [αρ, -νρ²]]` for sound speed squared `α` and viscosity `ν`.
pub fn general_mode_matrix(rho: f64, alpha: f64, nu: f64) -> Mat2 {
    [[0.0, -rho], [alpha * rho, -nu * rho * rho]]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Oscillatory,
    Defective,
    Overdamped,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeSpectrum {
    pub lambda_plus: Complex64,
    pub lambda_minus: Complex64,
    pub regime: Regime,
    /// `sqrt(4/ρ² - 1)` for `ρ < 2`.
    pub s: Option<f64>,
    /// `sqrt(1 - 4/ρ²)` for `ρ > 2`.
    pub r: Option<f64>,
}

/// Closed-form eigenvalues `λ_± = -ρ²/2 (1 ± iS)` or `-ρ²/2 (1 ± R)`.
pub fn mode_spectrum(rho: f64) -> ModeSpectrum {
    let half = -0.5 * rho * rho;
    if rho == 2.0 {
        let l = Complex64::new(-2.0, 0.0);
        return ModeSpectrum {
            lambda_plus: l,
            lambda_minus: l,
            regime: Regime::Defective,
            s: Some(0.0),
            r: Some(0.0),
        };
    }
    if rho < 2.0 {
        let s = if rho == 0.0 { f64::INFINITY } else { (4.0 / (rho * rho) - 1.0).sqrt() };
        // -ρ²S/2, written to stay finite at ρ = 0
        let im = -0.5 * rho * (4.0 - rho * rho).sqrt();
        ModeSpectrum {
            lambda_plus: Complex64::new(half, im),
            lambda_minus: Complex64::new(half, -im),
            regime: Regime::Oscillatory,
            s: Some(s),
            r: None,
        }
    } else {
        let r = (1.0 - 4.0 / (rho * rho)).sqrt();
        ModeSpectrum {
            lambda_plus: Complex64::new(half * (1.0 + r), 0.0),
            lambda_minus: Complex64::new(half * (1.0 - r), 0.0),
            regime: Regime::Overdamped,
            s: None,
            r: Some(r),
        }
    }
}

/// `e^{tB}` for a real 2×2 matrix via `e^{tm}[C·I + S·(B - mI)]`, `m = tr/2`.
///
/// `C`, `S` are entire in `x = t²(m² - det)`; a power series is used for
/// `|x| < 1`, which covers the Jordan point and its neighbourhood.
pub fn expm2(b: &Mat2, t: f64) -> Mat2 {
    let m = 0.5 * (b[0][0] + b[1][1]);
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    let disc = m * m - det;
    let x = t * t * disc;
    let (c, s) = if x.abs() < 1.0 {
        // C = Σ x^k/(2k)!, S = t Σ x^k/(2k+1)!
        let mut c = 0.0;
        let mut s = 0.0;
        let mut term = 1.0;
        for k in 0..25 {
            c += term;
            s += term / (2 * k + 1) as f64;
            term *= x / ((2 * k + 1) * (2 * k + 2)) as f64;
        }
        let em = (m * t).exp();
        (em * c, em * s * t)
    } else if disc > 0.0 {
        let delta = disc.sqrt();
        let ep = ((m + delta) * t).exp();
        let en = ((m - delta) * t).exp();
        (0.5 * (ep + en), 0.5 * (ep - en) / delta)
    } else {
        let w = (-disc).sqrt();
        let em = (m * t).exp();
        (em * (w * t).cos(), em * (w * t).sin() / w)
    };
    [
        [c + s * (b[0][0] - m), s * b[0][1]],
        [s * b[1][0], c + s * (b[1][1] - m)],
    ]
}

/// Evolves `(A, V)` under `M_ρ` with piecewise-linear sources `(f, h)`
/// sampled on `t_grid`; Duhamel integrals are exact for the interpolant.
pub fn mode_propagate(
    a0: Complex64,
    v0: Complex64,
    rho: f64,
    f_series: Option<&[Complex64]>,
    h_series: Option<&[Complex64]>,
    t_grid: &[f64],
) -> Result<Vec<(Complex64, Complex64)>> {
    if rho < 0.0 {
        return Err(Error::InvalidArgument(format!("ρ = {rho} < 0")));
    }
    check_grid(t_grid)?;
    for s in [f_series, h_series].into_iter().flatten() {
        if s.len() != t_grid.len() {
            return Err(Error::SizeMismatch {
                expected: t_grid.len(),
                got: s.len(),
            });
        }
    }
    let mm = mode_matrix(rho).m;
    let zero = Complex64::default();
    let src = |i: usize| {
        [
            f_series.map_or(zero, |f| f[i]),
            h_series.map_or(zero, |h| h[i]),
        ]
    };
    let mut out = Vec::with_capacity(t_grid.len());
    let mut y = [a0, v0];
    out.push((y[0], y[1]));
    for i in 1..t_grid.len() {
        let dt = t_grid[i] - t_grid[i - 1];
        let mut next = mat2_mul_vec(&expm2(&mm, dt), y);
        if f_series.is_some() || h_series.is_some() {
            let scaled = [[mm[0][0] * dt, mm[0][1] * dt], [mm[1][0] * dt, mm[1][1] * dt]];
            let [_, p1, p2] = phi_matrix2(&scaled);
            let (g0, g1) = (src(i - 1), src(i));
            let dg = [g1[0] - g0[0], g1[1] - g0[1]];
            let a = mat2_mul_vec(&p1, g0);
            let b = mat2_mul_vec(&p2, dg);
            next[0] += (a[0] + b[0]) * dt;
            next[1] += (a[1] + b[1]) * dt;
        }
        y = next;
        out.push((y[0], y[1]));
    }
    Ok(out)
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InsufficientData("empty time grid".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `L² = 2|(A,V)|² + |ρA|² - 2ρ Re(A V̄)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovState {
    pub a: Complex64,
    pub v: Complex64,
    pub rho: f64,
    pub l2: f64,
}

pub fn lyapunov(a: Complex64, v: Complex64, rho: f64) -> LyapunovState {
    let l2 = 2.0 * (a.norm_sqr() + v.norm_sqr()) + rho * rho * a.norm_sqr() - 2.0 * rho * (a * v.conj()).re;
    LyapunovState { a, v, rho, l2 }
}

/// Equivalence constant: `C₀⁻¹L² ≤ |(A, ρA, V)|² ≤ C₀L²` with `C₀ = 3`.
pub const LYAPUNOV_EQUIVALENCE: f64 = 3.0;

/// Frozen decay rate `c` in `L²(t) ≤ e^{-c·min(1,ρ²)t} L²(0)`; the exact
/// infimum is `4/(5+√5) ≈ 0.5528`.
pub const LYAPUNOV_RATE: f64 = 0.55;

/// Exact infimum over `(A, V)` of `2ρ²|(A,V)|² / (min(1,ρ²) L²)` at one `ρ`.
pub fn admissible_rate(rho: f64) -> f64 {
    if rho == 0.0 {
        return 1.0;
    }
    let r2 = rho * rho;
    let lmax = 0.5 * (4.0 + r2 + (r2 * r2 + 4.0 * r2).sqrt());
    2.0 * r2 / (lmax * r2.min(1.0))
}

/// `dL²/dt` by the chain rule along `A' = -ρV`, `V' = ρA - ρ²V`.
pub fn lyapunov_derivative(a: Complex64, v: Complex64, rho: f64) -> f64 {
    let da = -v * rho;
    let dv = a * rho - v * (rho * rho);
    4.0 * (da * a.conj()).re + 4.0 * (dv * v.conj()).re + 2.0 * rho * rho * (da * a.conj()).re
        - 2.0 * rho * (da * v.conj() + a * dv.conj()).re
}

/// Right-hand side of the dissipation identity, `-2ρ²|(A,V)|²`.
pub fn lyapunov_dissipation(a: Complex64, v: Complex64, rho: f64) -> f64 {
    -2.0 * rho * rho * (a.norm_sqr() + v.norm_sqr())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LyapunovReport {
    pub rho: f64,
    pub rate: f64,
    /// Largest relative residual of the dissipation identity over the samples.
    pub identity_residual: f64,
    /// Largest `L²(t) / (e^{-c·min(1,ρ²)t} L²(0))` over the samples.
    pub worst_bound_ratio: f64,
    pub bound_holds: bool,
}

/// Propagates without sources and checks the identity and the decay bound.
pub fn lyapunov_decay_check(a0: Complex64, v0: Complex64, rho: f64, t_final: f64, samples: usize) -> Result<LyapunovReport> {
    let n = samples.max(2);
    let t_grid: Vec<f64> = (0..n).map(|i| t_final * i as f64 / (n - 1) as f64).collect();
    let traj = mode_propagate(a0, v0, rho, None, None, &t_grid)?;
    let l0 = lyapunov(a0, v0, rho).l2;
    let mut residual: f64 = 0.0;
    let mut worst: f64 = 0.0;
    for (t, (a, v)) in t_grid.iter().zip(&traj) {
        let lhs = lyapunov_derivative(*a, *v, rho);
        let rhs = lyapunov_dissipation(*a, *v, rho);
        let scale = (rho * rho).max(1.0) * lyapunov(*a, *v, rho).l2.max(1e-300);
        residual = residual.max((lhs - rhs).abs() / scale);
        let bound = (-LYAPUNOV_RATE * rho.powi(2).min(1.0) * t).exp() * l0;
        if l0 > 0.0 {
            worst = worst.max(lyapunov(*a, *v, rho).l2 / bound);
        }
    }
    Ok(LyapunovReport {
        rho,
        rate: LYAPUNOV_RATE,
        identity_residual: residual,
        worst_bound_ratio: worst,
        bound_holds: worst <= 1.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use super::super::phi::expm2_reference;

    #[test]
    fn spectrum_examples() {
        let s = mode_spectrum(1.0);
        assert!((s.lambda_plus - Complex64::new(-0.5, -0.5 * 3f64.sqrt())).norm() < 1e-15);
        assert_eq!(s.regime, Regime::Oscillatory);
        let s = mode_spectrum(2.0);
        assert_eq!(s.regime, Regime::Defective);
        assert_eq!(s.lambda_plus, Complex64::new(-2.0, 0.0));
        let s = mode_spectrum(8f64.sqrt());
        assert!((s.lambda_plus.re - (-4.0 - 2.0 * 2f64.sqrt())).abs() < 1e-13);
        assert!((s.lambda_minus.re - (-4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-13);
    }

    #[test]
    fn matrix_invariants() {
        for rho in [0.0, 0.3, 2.0, 7.0] {
            let m = mode_matrix(rho);
            assert_eq!(m.trace(), -rho * rho);
            assert_eq!(m.det(), rho * rho);
        }
    }

    #[test]
    fn closed_form_matches_reference_exponential() {
        for rho in [0.1, 0.9, 1.7, 1.99995, 2.0, 2.00005, 3.0, 9.0] {
            for t in [0.01, 0.8, 3.0] {
                let m = mode_matrix(rho).m;
                let a = expm2(&m, t);
                let tm = [[m[0][0] * t, m[0][1] * t], [m[1][0] * t, m[1][1] * t]];
                let b = expm2_reference(&tm);
                for i in 0..2 {
                    for j in 0..2 {
                        assert!((a[i][j] - b[i][j]).abs() < 1e-12, "rho {rho} t {t}");
                    }
                }
            }
        }
    }

    #[test]
    fn lyapunov_examples() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::default();
        assert_eq!(lyapunov(one, zero, 1.0).l2, 3.0);
        assert_eq!(lyapunov(zero, one, 5.0).l2, 2.0);
        assert!((admissible_rate(1.0) - 4.0 / (5.0 + 5f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn zero_frequency_sources_integrate() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let f: Vec<Complex64> = t.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        let out = mode_propagate(Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), 0.0, Some(&f), None, &t).unwrap();
        let (a, v) = out[10];
        assert!((a - Complex64::new(1.5, 0.0)).norm() < 1e-14);
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }
}
