use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

type ScalarRule = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
type MatrixRule = Arc<dyn Fn(&[f64], &mut [Complex64]) + Send + Sync>;

#[derive(Clone)]
enum Rule {
    Scalar(ScalarRule),
    Matrix { rows: usize, cols: usize, rule: MatrixRule },
}

/// Fourier multiplier `F(D)`: a scalar applied to every component, or a
/// `rows × cols` matrix mapping `cols` components to `rows`.
///
/// On modes carrying a Nyquist component the symbol is averaged over the
/// `±N/(2M)` representatives, so real-operator symbols keep real fields real.
#[derive(Clone)]
pub struct FourierSymbol {
    rule: Rule,
    degree: Option<f64>,
    real_preserving: bool,
}

impl fmt::Debug for FourierSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = match &self.rule {
            Rule::Scalar(_) => "scalar".to_string(),
            Rule::Matrix { rows, cols, .. } => format!("{rows}x{cols}"),
        };
        f.debug_struct("FourierSymbol")
            .field("shape", &shape)
            .field("degree", &self.degree)
            .finish()
    }
}

/// Treatment of the `ξ = 0` mode.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum ZeroMode {
    /// Zero the mean.
    #[default]
    Annihilate,
    /// Evaluate the symbol at `ξ = 0`; it must be finite there.
    Evaluate,
    /// Multiply the mean by a constant (identity-shaped symbols only).
    Scale(Complex64),
}

impl FourierSymbol {
    pub fn scalar<F>(rule: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            rule: Rule::Scalar(Arc::new(rule)),
            degree: None,
            real_preserving: true,
        }
    }

    /// Matrix symbol; `rule(ξ, out)` fills `out` row-major.
    pub fn matrix<F>(rows: usize, cols: usize, rule: F) -> Self
    where
        F: Fn(&[f64], &mut [Complex64]) + Send + Sync + 'static,
    {
        Self {
            rule: Rule::Matrix {
                rows,
                cols,
                rule: Arc::new(rule),
            },
            degree: None,
            real_preserving: true,
        }
    }

    /// Marks the symbol homogeneous of degree `m`.
    pub fn homogeneous(mut self, m: f64) -> Self {
        self.degree = Some(m);
        self
    }

    /// Marks the symbol as not mapping real fields to real fields.
    pub fn complex_valued(mut self) -> Self {
        self.real_preserving = false;
        self
    }

    pub fn degree(&self) -> Option<f64> {
        self.degree
    }

    /// `(rows, cols)`; scalars report `(1, 1)`.
    pub fn shape(&self) -> (usize, usize) {
        match &self.rule {
            Rule::Scalar(_) => (1, 1),
            Rule::Matrix { rows, cols, .. } => (*rows, *cols),
        }
    }

    fn is_scalar(&self) -> bool {
        matches!(self.rule, Rule::Scalar(_))
    }

    /// Evaluates at a wave vector of length `d`.
    pub fn eval(&self, xi: &[f64], out: &mut [Complex64]) {
        match &self.rule {
            Rule::Scalar(f) => out[0] = f(xi),
            Rule::Matrix { rule, .. } => rule(xi, out),
        }
    }

    /// Evaluates at grid mode `flat`, averaging over Nyquist representatives.
    pub fn eval_mode(&self, grid: &TorusGrid, flat: usize, out: &mut [Complex64]) {
        let d = grid.dim();
        let xi = grid.wave_vector(flat);
        if !grid.is_nyquist(flat) {
            self.eval(&xi[..d], out);
            return;
        }
        let nyq_axes: Vec<usize> = (0..d)
            .filter(|&a| grid.wave_index(flat)[a] == -(grid.n() as i32 / 2))
            .collect();
        let reps = 1usize << nyq_axes.len();
        let mut acc = vec![Complex64::default(); out.len()];
        let mut tmp = vec![Complex64::default(); out.len()];
        for mask in 0..reps {
            let mut x = xi;
            for (b, &a) in nyq_axes.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    x[a] = -x[a];
                }
            }
            self.eval(&x[..d], &mut tmp);
            acc.iter_mut().zip(&tmp).for_each(|(s, v)| *s += v);
        }
        for (o, s) in out.iter_mut().zip(acc) {
            *o = s / reps as f64;
        }
    }

    /// Largest relative deviation from `symbol(tξ) = t^m symbol(ξ)` on random rays.
    pub fn homogeneity_defect(&self, d: usize, rays: usize, seed: u64) -> Option<f64> {
        let m = self.degree?;
        let (rows, cols) = self.shape();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = vec![Complex64::default(); rows * cols];
        let mut b = a.clone();
        let mut worst: f64 = 0.0;
        for _ in 0..rays {
            let xi: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let t: f64 = rng.gen_range(0.1..10.0);
            let txi: Vec<f64> = xi.iter().map(|x| t * x).collect();
            self.eval(&xi, &mut a);
            self.eval(&txi, &mut b);
            for (x, y) in a.iter().zip(&b) {
                let want = x * t.powf(m);
                let scale = want.norm().max(1e-300);
                worst = worst.max((y - want).norm() / scale);
            }
        }
        Some(worst)
    }

    /// `∂_i`, symbol `iξ_i`.
    pub fn partial(i: usize) -> Self {
        Self::scalar(move |xi| Complex64::new(0.0, xi[i])).homogeneous(1.0)
    }

    /// `|D|^s`.
    pub fn abs_pow(s: f64) -> Self {
        Self::scalar(move |xi| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            Complex64::new(r2.powf(s / 2.0), 0.0)
        })
        .homogeneous(s)
    }

    /// `Δ`, symbol `-|ξ|²`.
    pub fn laplacian() -> Self {
        Self::scalar(|xi| Complex64::new(-xi.iter().map(|x| x * x).sum::<f64>(), 0.0)).homogeneous(2.0)
    }

    /// `∇` on scalars (`d × 1`).
    pub fn gradient(d: usize) -> Self {
        Self::matrix(d, 1, |xi, out| {
            for (o, x) in out.iter_mut().zip(xi) {
                *o = Complex64::new(0.0, *x);
            }
        })
        .homogeneous(1.0)
    }

    /// `div` on vectors (`1 × d`).
    pub fn divergence(d: usize) -> Self {
        Self::matrix(1, d, |xi, out| {
            for (o, x) in out.iter_mut().zip(xi) {
                *o = Complex64::new(0.0, *x);
            }
        })
        .homogeneous(1.0)
    }

    /// `∇(-Δ)^{-1}` on scalars (`d × 1`), symbol `iξ/|ξ|²`.
    pub fn grad_inverse_laplacian(d: usize) -> Self {
        Self::matrix(d, 1, |xi, out| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            for (o, x) in out.iter_mut().zip(xi) {
                *o = Complex64::new(0.0, x / r2);
            }
        })
        .homogeneous(-1.0)
    }

    /// Lamé operator `μΔ + (λ+μ)∇div` (`d × d`).
    pub fn lame(d: usize, lambda: f64, mu: f64) -> Self {
        Self::matrix(d, d, move |xi, out| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            for i in 0..d {
                for j in 0..d {
                    let diag = if i == j { -mu * r2 } else { 0.0 };
                    out[i * d + j] = Complex64::new(diag - (lambda + mu) * xi[i] * xi[j], 0.0);
                }
            }
        })
        .homogeneous(2.0)
    }
}

/// Multiplies coefficients by a Fourier symbol.
pub fn apply_symbol(field: &SpectralField, symbol: &FourierSymbol, zero: ZeroMode) -> Result<SpectralField> {
    let grid = field.grid();
    let (rows, cols) = symbol.shape();
    let scalar = symbol.is_scalar();
    let n_in = field.components();
    if !scalar && n_in != cols {
        return Err(Error::SizeMismatch {
            expected: cols,
            got: n_in,
        });
    }
    if let ZeroMode::Scale(_) = zero {
        if !scalar && rows != cols {
            return Err(Error::InvalidArgument(
                "mean scaling needs a square symbol".into(),
            ));
        }
    }
    let n_out = if scalar { n_in } else { rows };
    let mut out = vec![vec![Complex64::default(); grid.len()]; n_out];
    let mut s = vec![Complex64::default(); rows * cols];
    let d = grid.dim();
    for flat in 0..grid.len() {
        if flat == 0 {
            match zero {
                ZeroMode::Annihilate => continue,
                ZeroMode::Scale(c) => {
                    for k in 0..n_out {
                        out[k][0] = field.coeffs(k)[0] * c;
                    }
                    continue;
                }
                ZeroMode::Evaluate => {}
            }
        }
        symbol.eval_mode(grid, flat, &mut s);
        if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteSymbol(grid.wave_vector(flat)[..d].to_vec()));
        }
        if scalar {
            for k in 0..n_out {
                out[k][flat] = s[0] * field.coeffs(k)[flat];
            }
        } else {
            for r in 0..rows {
                let mut acc = Complex64::default();
                for c in 0..cols {
                    acc += s[r * cols + c] * field.coeffs(c)[flat];
                }
                out[r][flat] = acc;
            }
        }
    }
    SpectralField::from_coeffs(grid, out, field.is_real() && symbol.real_preserving)
}

/// Multiplies every component by a real per-mode weight.
pub(crate) fn apply_weights(field: &SpectralField, weights: &[f64]) -> SpectralField {
    let coeffs = field
        .all_coeffs()
        .iter()
        .map(|c| c.iter().zip(weights).map(|(z, w)| z * w).collect())
        .collect();
    SpectralField::from_coeffs(field.grid(), coeffs, field.is_real()).expect("same layout")
}

/// Helmholtz split `u = Pu + Qu` with `Qû = ξ(ξ·û)/|ξ|²`.
///
/// The mean stays in `Pu`. Nyquist components of `ξ` are dropped, which
/// keeps `P` and `Q` orthogonal projectors and real.
pub fn helmholtz_project(u: &SpectralField) -> Result<(SpectralField, SpectralField)> {
    let grid = u.grid();
    let d = grid.dim();
    if d < 2 || u.components() != d {
        return Err(Error::InvalidArgument(format!(
            "Helmholtz projection needs a {d}-component vector field with d >= 2"
        )));
    }
    let mut p = vec![vec![Complex64::default(); grid.len()]; d];
    let mut q = vec![vec![Complex64::default(); grid.len()]; d];
    for flat in 0..grid.len() {
        let xi = grid.wave_vector_sym(flat);
        let r2: f64 = xi[..d].iter().map(|x| x * x).sum();
        if r2 == 0.0 {
            for c in 0..d {
                p[c][flat] = u.coeffs(c)[flat];
            }
            continue;
        }
        let dot: Complex64 = (0..d).map(|c| u.coeffs(c)[flat] * xi[c]).sum();
        for c in 0..d {
            let qc = dot * (xi[c] / r2);
            q[c][flat] = qc;
            p[c][flat] = u.coeffs(c)[flat] - qc;
        }
    }
    Ok((
        SpectralField::from_coeffs(grid, p, u.is_real())?,
        SpectralField::from_coeffs(grid, q, u.is_real())?,
    ))
}

/// Divergence of a vector field, using the Nyquist-free wave vector.
pub fn divergence(u: &SpectralField) -> Result<SpectralField> {
    apply_symbol(u, &FourierSymbol::divergence(u.grid().dim()), ZeroMode::Annihilate)
}

/// Gradient of a scalar field.
pub fn gradient(a: &SpectralField) -> Result<SpectralField> {
    apply_symbol(a, &FourierSymbol::gradient(a.grid().dim()), ZeroMode::Annihilate)
}

/// Partial derivative `∂_i` of every component.
pub fn partial(f: &SpectralField, i: usize) -> SpectralField {
    apply_symbol(f, &FourierSymbol::partial(i), ZeroMode::Annihilate).expect("finite symbol")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abs_d_on_single_mode() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let f = SpectralField::from_complex_fn(&g, |x| Complex64::from_polar(1.0, 3.0 * x[0]));
        let out = apply_symbol(&f, &FourierSymbol::abs_pow(1.0), ZeroMode::Annihilate).unwrap();
        let diff = out.axpy(-3.0, &f).unwrap();
        assert!(diff.max_coeff() < 1e-12);
    }

    #[test]
    fn grad_inverse_laplacian_single_mode() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let a = SpectralField::from_complex_fn(&g, |x| Complex64::from_polar(1.0, 2.0 * x[0] - x[1]));
        let w = apply_symbol(&a, &FourierSymbol::grad_inverse_laplacian(2), ZeroMode::Annihilate).unwrap();
        let k = g.flat_index(&[2, -1]).unwrap();
        let c = a.coeffs(0)[k];
        assert!((w.coeffs(0)[k] - c * Complex64::new(0.0, 2.0 / 5.0)).norm() < 1e-12);
        assert!((w.coeffs(1)[k] - c * Complex64::new(0.0, -1.0 / 5.0)).norm() < 1e-12);
    }

    #[test]
    fn singular_symbol_at_nonzero_mode_is_error() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let f = SpectralField::from_fn(&g, |x| x[0].sin());
        let bad = FourierSymbol::scalar(|xi| Complex64::new(1.0 / (xi[0] - 1.0), 0.0));
        assert!(apply_symbol(&f, &bad, ZeroMode::Annihilate).is_err());
    }

    #[test]
    fn homogeneity_metadata() {
        assert!(FourierSymbol::abs_pow(1.5).homogeneity_defect(3, 50, 1).unwrap() < 1e-12);
        assert!(FourierSymbol::lame(2, 1.0, 0.5).homogeneity_defect(2, 50, 2).unwrap() < 1e-12);
    }

    #[test]
    fn helmholtz_examples() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let grad = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = x[0].cos();
            o[1] = 0.0;
        });
        let (p, q) = helmholtz_project(&grad).unwrap();
        assert!(p.max_coeff() < 1e-12);
        assert!(q.sub(&grad).unwrap().max_coeff() < 1e-12);
        // ψ = sin x₁ sin x₂, u = (-∂₂ψ, ∂₁ψ)
        let rot = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = -x[0].sin() * x[1].cos();
            o[1] = x[0].cos() * x[1].sin();
        });
        let (p, q) = helmholtz_project(&rot).unwrap();
        assert!(q.max_coeff() < 1e-12);
        assert!(p.sub(&rot).unwrap().max_coeff() < 1e-12);
        assert!(helmholtz_project(&grad.component(0)).is_err());
    }
}
