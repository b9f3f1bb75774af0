//! Smooth dyadic cutoffs, Littlewood-Paley blocks, and homogeneous Besov,
//! hybrid and time-space norms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{lp_of_samples, magnitudes, transform, Direction, SpectralField, TorusGrid};

fn theta(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

fn glue(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = theta(x);
        a / (a + theta(1.0 - x))
    }
}

/// Radial cutoffs: `χ = 1` on `[0, 3/4]`, `χ = 0` on `[4/3, ∞)`, and
/// `φ(ρ) = χ(ρ/2) - χ(ρ)`.
#[derive(Clone, Copy, Debug, Default)]
pub struct CutoffPair;

impl CutoffPair {
    pub fn chi(&self, rho: f64) -> f64 {
        glue((4.0 / 3.0 - rho) / (4.0 / 3.0 - 3.0 / 4.0))
    }

    pub fn phi(&self, rho: f64) -> f64 {
        self.chi(0.5 * rho) - self.chi(rho)
    }
}

pub fn build_cutoffs() -> CutoffPair {
    CutoffPair
}

/// Smallest `j` with `8/3·2^j ≥ 1/M`.
fn j_min_for(grid: &TorusGrid) -> i32 {
    let low = grid.lowest_frequency();
    let mut j = (3.0 / (8.0 * grid.box_scale())).log2().floor() as i32 - 2;
    while 8.0 / 3.0 * 2f64.powi(j) < low {
        j += 1;
    }
    j
}

/// Largest `j` with `3/4·2^j` below the largest grid frequency.
fn j_max_for(grid: &TorusGrid) -> i32 {
    let top = grid.max_wave_norm();
    let mut j = (4.0 * top / 3.0).log2().ceil() as i32 + 2;
    while 0.75 * 2f64.powi(j) >= top {
        j -= 1;
    }
    j
}

/// Per-mode dyadic weights of a grid; each mode meets at most two blocks.
pub(crate) struct BlockTable {
    pub j_min: i32,
    pub j_max: i32,
    pub entries: Vec<Vec<(i32, f64)>>,
}

impl BlockTable {
    pub(crate) fn build(grid: &TorusGrid) -> Self {
        let cut = CutoffPair;
        let j_min = j_min_for(grid);
        let j_max = j_max_for(grid);
        let entries = (0..grid.len())
            .map(|flat| {
                if flat == 0 {
                    return Vec::new();
                }
                let rho = grid.wave_norm(flat);
                let lo = ((3.0 * rho / 8.0).log2().floor() as i32).max(j_min);
                let hi = ((4.0 * rho / 3.0).log2().ceil() as i32).min(j_max);
                (lo..=hi)
                    .filter_map(|j| {
                        let w = cut.phi(rho * 2f64.powi(-j));
                        (w != 0.0).then_some((j, w))
                    })
                    .collect()
            })
            .collect();
        Self {
            j_min,
            j_max,
            entries,
        }
    }
}

/// Resolvable block range `[j_min, j_max]` of a grid.
pub fn resolvable_range(grid: &TorusGrid) -> (i32, i32) {
    let t = grid.block_table();
    (t.j_min, t.j_max)
}

fn check_j(grid: &TorusGrid, j: i32) -> Result<()> {
    let (min, max) = resolvable_range(grid);
    if j < min || j > max {
        return Err(Error::BlockOutOfRange { j, min, max });
    }
    Ok(())
}

/// Per-mode weights `φ(2^{-j}|ξ|)`.
pub(crate) fn block_weights(grid: &TorusGrid, j: i32) -> Vec<f64> {
    let t = grid.block_table();
    t.entries
        .iter()
        .map(|e| e.iter().find(|(jj, _)| *jj == j).map_or(0.0, |(_, w)| *w))
        .collect()
}

/// Per-mode weights `χ(2^{-j}|ξ|)`, including `χ(0) = 1` on the mean.
pub(crate) fn cut_weights(grid: &TorusGrid, j: i32) -> Vec<f64> {
    let cut = CutoffPair;
    let s = 2f64.powi(-j);
    (0..grid.len()).map(|f| cut.chi(s * grid.wave_norm(f))).collect()
}

fn weighted(u: &SpectralField, w: &[f64]) -> SpectralField {
    crate::spectral::apply_weights(u, w)
}

/// `Δ̇_j u = φ(2^{-j}D)u`; the mean is always removed.
pub fn dyadic_block(u: &SpectralField, j: i32) -> Result<SpectralField> {
    check_j(u.grid(), j)?;
    Ok(weighted(u, &block_weights(u.grid(), j)))
}

/// `Ṡ_j u = χ(2^{-j}D)u`; the mean passes through.
///
/// Indices below `j_min` are allowed and return the mean alone.
pub fn low_cut(u: &SpectralField, j: i32) -> Result<SpectralField> {
    let (_, max) = resolvable_range(u.grid());
    if j > max + 1 {
        return Err(Error::BlockOutOfRange {
            j,
            min: i32::MIN,
            max: max + 1,
        });
    }
    Ok(weighted(u, &cut_weights(u.grid(), j)))
}

/// All resolvable blocks of one field.
#[derive(Clone, Debug)]
pub struct DyadicBlocks {
    pub j_min: i32,
    pub j_max: i32,
    pub blocks: Vec<SpectralField>,
    mean: SpectralField,
}

impl DyadicBlocks {
    pub fn new(u: &SpectralField) -> Self {
        let (j_min, j_max) = resolvable_range(u.grid());
        let blocks = (j_min..=j_max)
            .into_par_iter()
            .map(|j| weighted(u, &block_weights(u.grid(), j)))
            .collect();
        let mut mean = SpectralField::zeros(u.grid(), u.components());
        for c in 0..u.components() {
            mean.coeffs_mut(c)[0] = u.coeffs(c)[0];
        }
        mean.set_real(u.is_real());
        Self {
            j_min,
            j_max,
            blocks,
            mean,
        }
    }

    pub fn block(&self, j: i32) -> Option<&SpectralField> {
        if j < self.j_min || j > self.j_max {
            None
        } else {
            Some(&self.blocks[(j - self.j_min) as usize])
        }
    }

    /// `Ṡ_j u` as mean plus the blocks below `j`, which equals `χ(2^{-j}D)u`
    /// on the grid.
    pub fn cut(&self, j: i32) -> SpectralField {
        let mut out = self.mean.clone();
        for jj in self.j_min..j.min(self.j_max + 1) {
            out.axpy_in_place(1.0, &self.blocks[(jj - self.j_min) as usize]);
        }
        out
    }

    pub fn mean(&self) -> &SpectralField {
        &self.mean
    }

    /// `mean + Σ_j Δ̇_j u`.
    pub fn reconstruct(&self) -> SpectralField {
        self.cut(self.j_max + 1)
    }
}

/// `‖Δ̇_j u‖_{L^p}` for every resolvable `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNorms {
    pub j_min: i32,
    pub values: Vec<f64>,
}

impl BlockNorms {
    pub fn j_max(&self) -> i32 {
        self.j_min + self.values.len() as i32 - 1
    }

    pub fn get(&self, j: i32) -> f64 {
        if j < self.j_min || j > self.j_max() {
            0.0
        } else {
            self.values[(j - self.j_min) as usize]
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.j_min + i as i32, *v))
    }
}

/// Block `L^p` norms; Euclidean magnitude across components.
pub fn block_norms(u: &SpectralField, p: f64) -> Result<BlockNorms> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent p = {p} < 1")));
    }
    let grid = u.grid();
    let table = grid.block_table();
    let nb = (table.j_max - table.j_min + 1).max(0) as usize;
    if p == 2.0 {
        let mut sums = vec![0.0; nb];
        for (flat, e) in table.entries.iter().enumerate() {
            if e.is_empty() {
                continue;
            }
            let energy: f64 = (0..u.components()).map(|c| u.coeffs(c)[flat].norm_sqr()).sum();
            for &(j, w) in e {
                sums[(j - table.j_min) as usize] += w * w * energy;
            }
        }
        let vol = grid.volume();
        return Ok(BlockNorms {
            j_min: table.j_min,
            values: sums.into_iter().map(|s| (s / vol).sqrt()).collect(),
        });
    }
    let values = (table.j_min..=table.j_max)
        .into_par_iter()
        .map(|j| {
            let w = block_weights(grid, j);
            let samples: Vec<Vec<Complex64>> = (0..u.components())
                .map(|c| {
                    let coeffs: Vec<Complex64> = u.coeffs(c).iter().zip(&w).map(|(z, x)| z * x).collect();
                    transform(grid, &coeffs, Direction::Inverse).expect("sizes match")
                })
                .collect();
            lp_of_samples(&magnitudes(&samples), grid.cell_volume(), p)
        })
        .collect();
    Ok(BlockNorms {
        j_min: table.j_min,
        values,
    })
}

/// Besov-type norm request.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub p: f64,
    pub r: f64,
    /// Split index for hybrid norms.
    pub k0: Option<i32>,
    /// Time Lebesgue exponent for tilde norms.
    pub time_exponent: Option<f64>,
}

impl NormSpec {
    pub fn besov(s: f64, p: f64, r: f64) -> Self {
        Self {
            s,
            p,
            r,
            k0: None,
            time_exponent: None,
        }
    }

    pub fn with_split(mut self, k0: i32) -> Self {
        self.k0 = Some(k0);
        self
    }

    pub fn with_time_exponent(mut self, a: f64) -> Self {
        self.time_exponent = Some(a);
        self
    }

    /// Warning text when the indices leave the complete-space range.
    pub fn banach_warning(&self, d: usize) -> Option<String> {
        let crit = d as f64 / self.p;
        if self.s < crit || (self.s == crit && self.r == 1.0) {
            None
        } else {
            Some(format!(
                "Ḃ^{}_{{{},{}}} in dimension {d} is outside the range s < d/p or (s = d/p, r = 1)",
                self.s, self.p, self.r
            ))
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.r >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need p, r >= 1 (got p = {}, r = {})",
                self.p, self.r
            )));
        }
        if let Some(a) = self.time_exponent {
            if !(a >= 1.0) {
                return Err(Error::InvalidArgument(format!("time exponent {a} < 1")));
            }
        }
        Ok(())
    }
}

/// `ℓ^r` sum of `2^{js} x_j`.
pub fn weighted_lr(norms: &BlockNorms, s: f64, r: f64) -> f64 {
    let terms = norms.iter().map(|(j, v)| 2f64.powf(j as f64 * s) * v);
    lr_sum(terms, r)
}

fn lr_sum(terms: impl Iterator<Item = f64>, r: f64) -> f64 {
    if r.is_infinite() {
        terms.fold(0.0, f64::max)
    } else if r == 1.0 {
        terms.sum()
    } else {
        terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Homogeneous Besov norm over the resolvable blocks (the mean is ignored).
pub fn besov_norm(u: &SpectralField, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let bn = block_norms(u, spec.p)?;
    if bn.values.is_empty() {
        return Err(Error::InsufficientData("no resolvable blocks".into()));
    }
    Ok(weighted_lr(&bn, spec.s, spec.r))
}

/// Where a hybrid norm splits low from high frequencies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HybridSplit {
    /// Low sums `k ≤ k₀`, high sums `k ≥ k₀`; the `k₀` block counts twice.
    #[default]
    SharedIndex,
    /// `z^ℓ = Ṡ_{k₀+1}z`, `z^h = z - z^ℓ`, each measured in full `Ḃ^s_{p,1}`.
    LowCut,
}

/// `(low, high)` parts of the `r = 1` hybrid norm with split `k₀`.
pub fn hybrid_norm(u: &SpectralField, spec: &NormSpec) -> Result<(f64, f64)> {
    hybrid_norm_with(u, spec, HybridSplit::SharedIndex)
}

pub fn hybrid_norm_with(u: &SpectralField, spec: &NormSpec, split: HybridSplit) -> Result<(f64, f64)> {
    spec.validate()?;
    let k0 = spec
        .k0
        .ok_or_else(|| Error::InvalidArgument("hybrid norm needs a split index k0".into()))?;
    check_j(u.grid(), k0)?;
    match split {
        HybridSplit::SharedIndex => {
            let bn = block_norms(u, spec.p)?;
            Ok(split_sums(&bn, spec.s, spec.s, k0))
        }
        HybridSplit::LowCut => {
            let low = low_cut(u, k0 + 1)?;
            let high = u.sub(&low)?;
            let one = NormSpec::besov(spec.s, spec.p, 1.0);
            Ok((besov_norm(&low, &one)?, besov_norm(&high, &one)?))
        }
    }
}

/// Shared-index split sums with separate low and high regularities.
pub fn split_sums(bn: &BlockNorms, s_low: f64, s_high: f64, k0: i32) -> (f64, f64) {
    let mut low = 0.0;
    let mut high = 0.0;
    for (j, v) in bn.iter() {
        if j <= k0 {
            low += 2f64.powf(j as f64 * s_low) * v;
        }
        if j >= k0 {
            high += 2f64.powf(j as f64 * s_high) * v;
        }
    }
    (low, high)
}

/// Time-space norm `‖2^{js}‖Δ̇_j u‖_{L^a_t(L^p)}‖_{ℓ^r}` on uniform samples.
pub fn tilde_norm(series: &[SpectralField], dt: f64, spec: &NormSpec) -> Result<f64> {
    spec.validate()?;
    let a = spec
        .time_exponent
        .ok_or_else(|| Error::InvalidArgument("tilde norm needs a time exponent".into()))?;
    if series.is_empty() || (a.is_finite() && series.len() < 2) {
        return Err(Error::InsufficientData(
            "tilde norms with finite time exponent need at least two samples".into(),
        ));
    }
    let per_time: Vec<BlockNorms> = series
        .iter()
        .map(|u| block_norms(u, spec.p))
        .collect::<Result<_>>()?;
    Ok(tilde_from_blocks(&per_time, dt, spec.s, a, spec.r))
}

/// Tilde norm from precomputed block norms at uniform times.
pub fn tilde_from_blocks(per_time: &[BlockNorms], dt: f64, s: f64, a: f64, r: f64) -> f64 {
    let times: Vec<f64> = (0..per_time.len()).map(|i| i as f64 * dt).collect();
    tilde_from_blocks_at(per_time, &times, s, a, r)
}

/// Tilde norm from block norms sampled at arbitrary increasing times.
pub fn tilde_from_blocks_at(per_time: &[BlockNorms], times: &[f64], s: f64, a: f64, r: f64) -> f64 {
    let first = &per_time[0];
    let terms = first.iter().map(|(j, _)| {
        let g: Vec<f64> = per_time.iter().map(|b| b.get(j)).collect();
        2f64.powf(j as f64 * s) * time_lebesgue(&g, times, a)
    });
    lr_sum(terms, r)
}

/// Trapezoid `(∫|g|^a dt)^{1/a}`; `a = ∞` is the sample maximum.
pub fn time_lebesgue(g: &[f64], times: &[f64], a: f64) -> f64 {
    if a.is_infinite() {
        return g.iter().copied().fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for i in 1..g.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (g[i - 1].abs().powf(a) + g[i].abs().powf(a));
    }
    acc.powf(1.0 / a)
}
