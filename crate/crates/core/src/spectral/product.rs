//! Dealiased pointwise evaluation on the 3N/2 zero-padded grid.

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::fft_nd;
use super::field::{scale, SpectralField};
use super::grid::{PaddedLayout, TorusGrid};
use crate::error::{Error, Result};

/// Real physical samples of band-limited fields on the padded grid.
pub struct PaddedSamples {
    grid: TorusGrid,
    /// One sample vector per scalar component, in input order.
    pub values: Vec<Vec<f64>>,
}

fn embed(layout: &PaddedLayout, coeffs: &[Complex64], out: &mut [Complex64]) {
    out.iter_mut().for_each(|z| *z = Complex64::default());
    for (flat, &slot) in layout.base_to_padded.iter().enumerate() {
        out[slot] = coeffs[flat];
    }
    for (flat, slots) in &layout.nyquist_split {
        out[layout.base_to_padded[*flat]] = Complex64::default();
        let share = coeffs[*flat] / slots.len() as f64;
        for &s in slots {
            out[s] = share;
        }
    }
}

fn padded_inverse(grid: &TorusGrid, layout: &PaddedLayout, buf: &mut [Complex64]) {
    fft_nd(buf, grid.dim(), layout.l, true);
    scale(buf, 1.0 / grid.volume());
}

fn padded_forward(grid: &TorusGrid, layout: &PaddedLayout, buf: &mut [Complex64]) {
    fft_nd(buf, grid.dim(), layout.l, false);
    let h = 2.0 * std::f64::consts::PI * grid.box_scale() / layout.l as f64;
    scale(buf, h.powi(grid.dim() as i32));
}

/// Padded samples of real coefficient arrays, two per complex transform.
pub(crate) fn padded_real(grid: &TorusGrid, coeffs: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let layout = grid.padded_layout();
    let mut out = Vec::with_capacity(coeffs.len());
    let mut buf = vec![Complex64::default(); layout.len];
    let mut tmp = vec![Complex64::default(); layout.len];
    for pair in coeffs.chunks(2) {
        embed(&layout, pair[0], &mut buf);
        if pair.len() == 2 {
            embed(&layout, pair[1], &mut tmp);
            buf.iter_mut()
                .zip(&tmp)
                .for_each(|(a, b)| *a += Complex64::new(-b.im, b.re));
        }
        padded_inverse(grid, &layout, &mut buf);
        out.push(buf.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(buf.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Coefficients on the base grid of real padded samples; Nyquist modes are zeroed.
pub(crate) fn from_padded_real(grid: &TorusGrid, samples: &[Vec<f64>]) -> Vec<Vec<Complex64>> {
    let layout = grid.padded_layout();
    let mut out = Vec::with_capacity(samples.len());
    let mut buf = vec![Complex64::default(); layout.len];
    for pair in samples.chunks(2) {
        if pair.len() == 2 {
            buf.iter_mut()
                .zip(pair[0].iter().zip(&pair[1]))
                .for_each(|(z, (&x, &y))| *z = Complex64::new(x, y));
        } else {
            buf.iter_mut()
                .zip(&pair[0])
                .for_each(|(z, &x)| *z = Complex64::new(x, 0.0));
        }
        padded_forward(grid, &layout, &mut buf);
        let mut first = vec![Complex64::default(); grid.len()];
        let mut second = vec![Complex64::default(); grid.len()];
        for (flat, &slot) in layout.base_to_padded.iter().enumerate() {
            if grid.is_nyquist(flat) {
                continue;
            }
            let z = buf[slot];
            let zc = buf[layout.padded_conj[slot]].conj();
            if pair.len() == 2 {
                first[flat] = (z + zc) * 0.5;
                second[flat] = (z - zc) * Complex64::new(0.0, -0.5);
            } else {
                first[flat] = z;
            }
        }
        out.push(first);
        if pair.len() == 2 {
            out.push(second);
        }
    }
    out
}

fn padded_complex(grid: &TorusGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let layout = grid.padded_layout();
    let mut buf = vec![Complex64::default(); layout.len];
    embed(&layout, coeffs, &mut buf);
    padded_inverse(grid, &layout, &mut buf);
    buf
}

fn from_padded_complex(grid: &TorusGrid, mut buf: Vec<Complex64>) -> Vec<Complex64> {
    let layout = grid.padded_layout();
    padded_forward(grid, &layout, &mut buf);
    (0..grid.len())
        .map(|flat| {
            if grid.is_nyquist(flat) {
                Complex64::default()
            } else {
                buf[layout.base_to_padded[flat]]
            }
        })
        .collect()
}

impl PaddedSamples {
    /// Samples every component of every (real) input field.
    pub fn new(fields: &[&SpectralField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("no fields to sample".into()))?;
        let grid = first.grid().clone();
        let mut coeffs: Vec<&[Complex64]> = Vec::new();
        for f in fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if !f.is_real() {
                return Err(Error::InvalidArgument(
                    "padded real sampling needs real-flagged fields".into(),
                ));
            }
            for c in 0..f.components() {
                coeffs.push(f.coeffs(c));
            }
        }
        let values = padded_real(&grid, &coeffs);
        Ok(Self { grid, values })
    }

    /// Samples raw coefficient arrays of real fields on `grid`.
    pub(crate) fn from_arrays(grid: &TorusGrid, coeffs: &[&[Complex64]]) -> Self {
        Self {
            grid: grid.clone(),
            values: padded_real(grid, coeffs),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest sample of component `c`.
    pub fn min(&self, c: usize) -> f64 {
        self.values[c].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest sample of component `c`.
    pub fn max(&self, c: usize) -> f64 {
        self.values[c].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies `f(inputs, outputs)` at every padded point.
    pub fn map<F>(&self, n_out: usize, f: F) -> Vec<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        let n_in = self.values.len();
        let len = self.len();
        let chunk = 1024;
        let rows: Vec<Vec<f64>> = (0..len.div_ceil(chunk))
            .into_par_iter()
            .map(|b| {
                let lo = b * chunk;
                let hi = (lo + chunk).min(len);
                let mut inp = vec![0.0; n_in];
                let mut outp = vec![0.0; n_out];
                let mut block = vec![0.0; (hi - lo) * n_out];
                for i in lo..hi {
                    for (c, v) in inp.iter_mut().enumerate() {
                        *v = self.values[c][i];
                    }
                    f(&inp, &mut outp);
                    block[(i - lo) * n_out..(i - lo + 1) * n_out].copy_from_slice(&outp);
                }
                block
            })
            .collect();
        let mut out = vec![vec![0.0; len]; n_out];
        for (b, block) in rows.iter().enumerate() {
            let lo = b * chunk;
            for (r, vals) in block.chunks(n_out).enumerate() {
                for (c, v) in vals.iter().enumerate() {
                    out[c][lo + r] = *v;
                }
            }
        }
        out
    }

    /// Projects padded samples back to a field on the base grid.
    pub fn to_field(&self, samples: &[Vec<f64>]) -> SpectralField {
        SpectralField::from_coeffs(&self.grid, from_padded_real(&self.grid, samples), true)
            .expect("layout matches grid")
    }
}

/// Dealiased product `uv` with component broadcasting (scalar × vector).
///
/// Exact for all output modes except Nyquist modes, which are zeroed.
pub fn dealiased_product(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    let (nu, nv) = (u.components(), v.components());
    let n_out = nu.max(nv);
    if !(nu == nv || nu == 1 || nv == 1) {
        return Err(Error::SizeMismatch {
            expected: nu,
            got: nv,
        });
    }
    let grid = u.grid();
    if u.is_real() && v.is_real() {
        let ps = PaddedSamples::new(&[u, v])?;
        let vals = ps.map(n_out, |x, out| {
            for (k, o) in out.iter_mut().enumerate() {
                let a = if nu == 1 { x[0] } else { x[k] };
                let b = if nv == 1 { x[nu] } else { x[nu + k] };
                *o = a * b;
            }
        });
        return Ok(ps.to_field(&vals));
    }
    let us: Vec<Vec<Complex64>> = (0..nu).map(|c| padded_complex(grid, u.coeffs(c))).collect();
    let vs: Vec<Vec<Complex64>> = (0..nv).map(|c| padded_complex(grid, v.coeffs(c))).collect();
    let coeffs = (0..n_out)
        .map(|k| {
            let a = &us[if nu == 1 { 0 } else { k }];
            let b = &vs[if nv == 1 { 0 } else { k }];
            from_padded_complex(grid, a.iter().zip(b).map(|(x, y)| x * y).collect())
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs, false)
}

/// Dealiased `Σ_i u_i v_i` for two vector fields.
pub fn dealiased_dot(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let p = dealiased_product(u, v)?;
    let mut out = p.component(0);
    for c in 1..p.components() {
        out.axpy_in_place(1.0, &p.component(c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_trigonometric_polynomials_is_exact() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| (2.0 * x[0]).sin() + x[1].cos());
        let v = SpectralField::from_fn(&g, |x| (3.0 * x[1]).cos() - 0.5 * (x[0] + x[1]).sin());
        let uv = dealiased_product(&u, &v).unwrap();
        let want = SpectralField::from_fn(&g, |x| {
            ((2.0 * x[0]).sin() + x[1].cos()) * ((3.0 * x[1]).cos() - 0.5 * (x[0] + x[1]).sin())
        });
        assert!(uv.sub(&want).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn complex_and_real_paths_agree() {
        let g = TorusGrid::new(1, 16, 2.0).unwrap();
        let u = SpectralField::from_fn(&g, |x| (0.5 * x[0]).sin() + 0.2 * (3.0 * x[0]).cos());
        let v = SpectralField::from_fn(&g, |x| (1.5 * x[0]).cos());
        let real = dealiased_product(&u, &v).unwrap();
        let mut uc = u.clone();
        uc.set_real(false);
        let cplx = dealiased_product(&uc, &v).unwrap();
        assert!(real.sub(&cplx).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn odd_component_counts_round_trip() {
        let g = TorusGrid::new(2, 8, 1.0).unwrap();
        let f = SpectralField::from_vector_fn(&g, 3, |x, o| {
            o[0] = x[0].sin();
            o[1] = x[1].cos();
            o[2] = (x[0] - x[1]).sin();
        });
        let ps = PaddedSamples::new(&[&f]).unwrap();
        let back = ps.to_field(&ps.values);
        assert!(back.sub(&f).unwrap().max_coeff() < 1e-12);
    }
}
