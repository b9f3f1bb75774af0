use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::fft_nd;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Direction of a discrete Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Physical samples to coefficients.
    Forward,
    /// Coefficients to physical samples.
    Inverse,
}

/// Transforms raw data on `grid`.
///
/// Forward: `coeff(ξ) = (2πM/N)^d Σ_x f(x) e^{-iξ·x}`.
/// Inverse: `f(x) = (2πM)^{-d} Σ_ξ coeff(ξ) e^{iξ·x}`.
pub fn transform(grid: &TorusGrid, data: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    if data.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: data.len(),
        });
    }
    let mut out = data.to_vec();
    match direction {
        Direction::Forward => forward_in_place(grid, &mut out),
        Direction::Inverse => inverse_in_place(grid, &mut out),
    }
    Ok(out)
}

pub(crate) fn forward_in_place(grid: &TorusGrid, data: &mut [Complex64]) {
    fft_nd(data, grid.dim(), grid.n(), false);
    scale(data, grid.cell_volume());
}

pub(crate) fn inverse_in_place(grid: &TorusGrid, data: &mut [Complex64]) {
    fft_nd(data, grid.dim(), grid.n(), true);
    scale(data, 1.0 / grid.volume());
}

pub(crate) fn scale(data: &mut [Complex64], s: f64) {
    if data.len() >= 1 << 14 {
        data.par_iter_mut().for_each(|v| *v *= s);
    } else {
        data.iter_mut().for_each(|v| *v *= s);
    }
}

/// Scalar or vector field stored as Fourier coefficients.
///
/// Any number of components is allowed; vector fields have `d` components
/// and matrix fields `d²` (row-major).
#[derive(Clone, Debug)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Vec<Complex64>>,
    real: bool,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![vec![Complex64::default(); grid.len()]; components],
            real: true,
        }
    }

    /// Wraps coefficient arrays; `real` flags Hermitian symmetry.
    pub fn from_coeffs(grid: &TorusGrid, coeffs: Vec<Vec<Complex64>>, real: bool) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("field needs at least one component".into()));
        }
        for c in &coeffs {
            if c.len() != grid.len() {
                return Err(Error::SizeMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
            real,
        })
    }

    pub fn from_real_samples(grid: &TorusGrid, samples: &[Vec<f64>]) -> Result<Self> {
        let coeffs = samples
            .iter()
            .map(|s| {
                let c: Vec<Complex64> = s.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                transform(grid, &c, Direction::Forward)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(grid, coeffs, true)
    }

    pub fn from_complex_samples(grid: &TorusGrid, samples: &[Vec<Complex64>]) -> Result<Self> {
        let coeffs = samples
            .iter()
            .map(|s| transform(grid, s, Direction::Forward))
            .collect::<Result<Vec<_>>>()?;
        Self::from_coeffs(grid, coeffs, false)
    }

    /// Samples a real scalar function of position.
    pub fn from_fn<F>(grid: &TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> f64 + Sync,
    {
        let s: Vec<f64> = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        Self::from_real_samples(grid, &[s]).expect("sizes match by construction")
    }

    /// Samples a real vector function with `components` outputs.
    pub fn from_vector_fn<F>(grid: &TorusGrid, components: usize, f: F) -> Self
    where
        F: Fn(&[f64; 3], &mut [f64]) + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let mut out = vec![0.0; components];
                f(&grid.point(i), &mut out);
                out
            })
            .collect();
        let samples: Vec<Vec<f64>> = (0..components)
            .map(|c| rows.iter().map(|r| r[c]).collect())
            .collect();
        Self::from_real_samples(grid, &samples).expect("sizes match by construction")
    }

    /// Samples a complex scalar function of position.
    pub fn from_complex_fn<F>(grid: &TorusGrid, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> Complex64 + Sync,
    {
        let s: Vec<Complex64> = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        Self::from_complex_samples(grid, &[s]).expect("sizes match by construction")
    }

    /// Stacks scalar fields into one multi-component field.
    pub fn stack(parts: &[SpectralField]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to stack".into()))?;
        let mut coeffs = Vec::new();
        let mut real = true;
        for p in parts {
            if p.grid != first.grid {
                return Err(Error::GridMismatch);
            }
            real &= p.real;
            coeffs.extend(p.coeffs.iter().cloned());
        }
        Self::from_coeffs(&first.grid, coeffs, real)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    pub fn coeffs(&self, c: usize) -> &[Complex64] {
        &self.coeffs[c]
    }

    pub fn coeffs_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.coeffs[c]
    }

    pub fn all_coeffs(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Vec<Complex64>> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> SpectralField {
        Self {
            grid: self.grid.clone(),
            coeffs: vec![self.coeffs[c].clone()],
            real: self.real,
        }
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> Vec<Vec<Complex64>> {
        self.coeffs
            .iter()
            .map(|c| {
                let mut s = c.clone();
                inverse_in_place(&self.grid, &mut s);
                s
            })
            .collect()
    }

    /// Real parts of the physical samples.
    pub fn real_samples(&self) -> Vec<Vec<f64>> {
        self.to_physical()
            .into_iter()
            .map(|s| s.into_iter().map(|z| z.re).collect())
            .collect()
    }

    /// Largest imaginary part over all physical samples.
    pub fn imaginary_residue(&self) -> f64 {
        self.to_physical()
            .iter()
            .flat_map(|s| s.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Largest `|coeff(-ξ) - conj(coeff(ξ))|` over modes with a grid partner.
    pub fn hermitian_residual(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for c in &self.coeffs {
            for flat in 0..g.len() {
                if g.is_nyquist(flat) {
                    continue;
                }
                let j = g.conj_index(flat);
                worst = worst.max((c[j] - c[flat].conj()).norm());
            }
        }
        worst
    }

    /// Spatial mean of component `c`.
    pub fn mean(&self, c: usize) -> Complex64 {
        self.coeffs[c][0] / self.grid.volume()
    }

    pub fn without_mean(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c[0] = Complex64::default();
        }
        out
    }

    /// `L²` norm (Euclidean over components) by Plancherel.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum();
        (s / self.grid.volume()).sqrt()
    }

    /// Largest absolute coefficient.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|c| c.iter().map(|z| z.norm()))
            .fold(0.0, f64::max)
    }

    /// Largest pointwise magnitude (Euclidean over components).
    pub fn sup_norm(&self) -> f64 {
        magnitudes(&self.to_physical()).into_iter().fold(0.0, f64::max)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.components() != other.components() {
            return Err(Error::SizeMismatch {
                expected: self.components(),
                got: other.components(),
            });
        }
        Ok(())
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.axpy_in_place(s, other);
        out.real = self.real && other.real;
        Ok(out)
    }

    pub(crate) fn axpy_in_place(&mut self, s: f64, other: &Self) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            scale(c, s);
        }
        out
    }

    /// Multiplies by a complex constant; clears the real flag unless `s` is real.
    pub fn scaled_complex(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.iter_mut().for_each(|z| *z *= s);
        }
        out.real = self.real && s.im == 0.0;
        out
    }

    /// Same coefficients on a grid with equal `N` but a different box scale.
    pub(crate) fn regrid(&self, grid: &TorusGrid, coeff_scale: f64) -> Self {
        let mut out = self.scaled(coeff_scale);
        out.grid = grid.clone();
        out
    }
}

/// Pointwise Euclidean magnitude across components.
pub(crate) fn magnitudes(samples: &[Vec<Complex64>]) -> Vec<f64> {
    let len = samples[0].len();
    (0..len)
        .map(|i| samples.iter().map(|s| s[i].norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

/// Quadrature `L^p` norm on the unnormalized box measure; `p = ∞` is the max.
pub fn lebesgue_norm(field: &SpectralField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent p = {p} < 1")));
    }
    let mags = magnitudes(&field.to_physical());
    Ok(lp_of_samples(&mags, field.grid().cell_volume(), p))
}

pub(crate) fn lp_of_samples(mags: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return mags.iter().copied().fold(0.0, f64::max);
    }
    if p == 2.0 {
        return (mags.iter().map(|x| x * x).sum::<f64>() * cell).sqrt();
    }
    (mags.iter().map(|x| x.powf(p)).sum::<f64>() * cell).powf(1.0 / p)
}
