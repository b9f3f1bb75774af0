//! Perturbation state `(a, u) = (ρ - 1, u)` and trajectory snapshots.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::params::CnsParams;
use crate::error::{Error, Result};
use crate::spectral::{PaddedSamples, SpectralField, TorusGrid};

#[derive(Clone, Debug)]
pub struct CnsState {
    pub a: SpectralField,
    pub u: SpectralField,
    pub t: f64,
}

impl CnsState {
    /// Real scalar `a` and real `d`-vector `u` on one grid; Nyquist modes are dropped.
    pub fn new(a: SpectralField, u: SpectralField, t: f64) -> Result<Self> {
        if a.grid() != u.grid() {
            return Err(Error::GridMismatch);
        }
        let d = a.grid().dim();
        if a.components() != 1 || u.components() != d {
            return Err(Error::SizeMismatch {
                expected: 1 + d,
                got: a.components() + u.components(),
            });
        }
        if !(a.is_real() && u.is_real()) {
            return Err(Error::InvalidArgument("state fields must be real".into()));
        }
        Ok(Self {
            a: strip_nyquist(&a),
            u: strip_nyquist(&u),
            t,
        })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        Self {
            a: SpectralField::zeros(grid, 1),
            u: SpectralField::zeros(grid, grid.dim()),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.a.grid()
    }

    /// `(a, u)` as one `(1+d)`-component field.
    pub fn stacked(&self) -> SpectralField {
        SpectralField::stack(&[self.a.clone(), self.u.clone()]).expect("state fields share a grid")
    }

    /// `‖(a, u)‖_{L²}`.
    pub fn l2_norm(&self) -> f64 {
        (self.a.l2_norm().powi(2) + self.u.l2_norm().powi(2)).sqrt()
    }

    /// Smallest and largest padded sample of `a`.
    pub fn density_range(&self) -> (f64, f64) {
        let ps = PaddedSamples::new(&[&self.a]).expect("real scalar field");
        (ps.min(0), ps.max(0))
    }

    pub fn mass_mean(&self) -> f64 {
        self.a.mean(0).re
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        let da = self.a.sub(&other.a)?.l2_norm();
        let du = self.u.sub(&other.u)?.l2_norm();
        Ok((da * da + du * du).sqrt())
    }
}

pub(crate) fn strip_nyquist(u: &SpectralField) -> SpectralField {
    let grid = u.grid();
    let mut out = u.clone();
    for c in 0..u.components() {
        let cs = out.coeffs_mut(c);
        for (flat, z) in cs.iter_mut().enumerate() {
            if grid.is_nyquist(flat) {
                *z = Complex64::default();
            }
        }
    }
    out
}

/// Metadata written next to a binary trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotMeta {
    pub dim: usize,
    pub n: usize,
    pub box_scale: f64,
    pub params: CnsParams,
    pub times: Vec<f64>,
    /// Storage order of the binary file.
    pub layout: String,
}

const LAYOUT: &str = "per time: a then u_1..u_d; per component: Fourier coefficients in FFT order, (re, im) f64 little-endian";

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Saves states as `path` (binary) plus `path.json` (metadata).
pub fn write_trajectory(path: &Path, states: &[CnsState], params: &CnsParams) -> Result<()> {
    let first = states
        .first()
        .ok_or_else(|| Error::InsufficientData("empty trajectory".into()))?;
    let grid = first.grid().clone();
    let mut bytes = Vec::with_capacity(states.len() * (1 + grid.dim()) * grid.len() * 16);
    for s in states {
        if *s.grid() != grid {
            return Err(Error::GridMismatch);
        }
        for field in [&s.a, &s.u] {
            for cs in field.all_coeffs() {
                for z in cs {
                    bytes.extend_from_slice(&z.re.to_le_bytes());
                    bytes.extend_from_slice(&z.im.to_le_bytes());
                }
            }
        }
    }
    let meta = SnapshotMeta {
        dim: grid.dim(),
        n: grid.n(),
        box_scale: grid.box_scale(),
        params: *params,
        times: states.iter().map(|s| s.t).collect(),
        layout: LAYOUT.to_string(),
    };
    write_atomic(path, &bytes)?;
    write_atomic(&sidecar(path), &serde_json::to_vec_pretty(&meta)?)
}

pub fn read_trajectory(path: &Path) -> Result<(Vec<CnsState>, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_slice(&fs::read(sidecar(path))?)?;
    let grid = TorusGrid::new(meta.dim, meta.n, meta.box_scale)?;
    let bytes = fs::read(path)?;
    let per_comp = grid.len() * 16;
    let per_state = (1 + grid.dim()) * per_comp;
    if bytes.len() != per_state * meta.times.len() {
        return Err(Error::SizeMismatch {
            expected: per_state * meta.times.len(),
            got: bytes.len(),
        });
    }
    let read = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
    let mut states = Vec::with_capacity(meta.times.len());
    for (i, &t) in meta.times.iter().enumerate() {
        let comps: Vec<Vec<Complex64>> = (0..1 + grid.dim())
            .map(|c| {
                let base = i * per_state + c * per_comp;
                (0..grid.len())
                    .map(|k| Complex64::new(read(base + 16 * k), read(base + 16 * k + 8)))
                    .collect()
            })
            .collect();
        let a = SpectralField::from_coeffs(&grid, comps[..1].to_vec(), true)?;
        let u = SpectralField::from_coeffs(&grid, comps[1..].to_vec(), true)?;
        states.push(CnsState { a, u, t });
    }
    Ok((states, meta))
}
