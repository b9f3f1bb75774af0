use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::littlewood_paley::BlockTable;

/// Periodic grid on `[0, 2πM)^d` with `N` points per axis.
///
/// Wave vectors are `k/M` with integer `k` in `{-N/2, …, N/2-1}` per axis.
/// Storage is row-major with axis 0 slowest, each axis in FFT order
/// `0, 1, …, N/2-1, -N/2, …, -1`.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    m: f64,
    len: usize,
    index: Vec<[i32; 3]>,
    blocks: OnceLock<Arc<BlockTable>>,
    padded: OnceLock<Arc<PaddedLayout>>,
}

/// Index bookkeeping for the 3N/2 zero-padded grid used by dealiased products.
pub(crate) struct PaddedLayout {
    pub l: usize,
    pub len: usize,
    /// Position of every base-grid mode inside the padded coefficient array.
    pub base_to_padded: Vec<usize>,
    /// `-k` partner of every padded mode.
    pub padded_conj: Vec<usize>,
    /// Base modes with Nyquist components and the padded slots sharing them.
    pub nyquist_split: Vec<(usize, Vec<usize>)>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("m", &self.inner.m)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.m == other.inner.m)
    }
}

fn fft_freq(i: usize, n: usize) -> i32 {
    if i < n / 2 {
        i as i32
    } else {
        i as i32 - n as i32
    }
}

fn fft_slot(k: i32, n: usize) -> usize {
    k.rem_euclid(n as i32) as usize
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, m: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1,2,3}}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!("N = {n} must be even and at least 8")));
        }
        if !(m.is_finite() && m >= 1.0) {
            return Err(Error::InvalidGrid(format!("box scale M = {m} must be at least 1")));
        }
        let len = n.pow(dim as u32);
        let mut index = Vec::with_capacity(len);
        for flat in 0..len {
            let mut k = [0i32; 3];
            let mut rem = flat;
            for axis in (0..dim).rev() {
                k[axis] = fft_freq(rem % n, n);
                rem /= n;
            }
            index.push(k);
        }
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                m,
                len,
                index,
                blocks: OnceLock::new(),
                padded: OnceLock::new(),
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn box_scale(&self) -> f64 {
        self.inner.m
    }

    /// Number of grid points (and of Fourier modes).
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        self.inner.len == 0
    }

    /// Lebesgue measure of the box, `(2πM)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI * self.inner.m).powi(self.inner.dim as i32)
    }

    /// Quadrature weight of one sample, `(2πM/N)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.inner.m / self.inner.n as f64
    }

    /// Sorted integer frequency indices of one axis.
    pub fn axis_frequencies(&self) -> Vec<i64> {
        let h = (self.inner.n / 2) as i64;
        (-h..h).collect()
    }

    pub fn nyquist(&self) -> f64 {
        self.inner.n as f64 / (2.0 * self.inner.m)
    }

    pub fn lowest_frequency(&self) -> f64 {
        1.0 / self.inner.m
    }

    /// Largest |ξ| on the grid (the corner of the frequency cube).
    pub fn max_wave_norm(&self) -> f64 {
        self.nyquist() * (self.inner.dim as f64).sqrt()
    }

    /// Integer wave index of mode `flat`; unused axes are zero.
    #[inline]
    pub fn wave_index(&self, flat: usize) -> [i32; 3] {
        self.inner.index[flat]
    }

    /// Wave vector `k/M` of mode `flat`.
    #[inline]
    pub fn wave_vector(&self, flat: usize) -> [f64; 3] {
        let k = self.inner.index[flat];
        let m = self.inner.m;
        [k[0] as f64 / m, k[1] as f64 / m, k[2] as f64 / m]
    }

    #[inline]
    pub fn wave_norm_sq(&self, flat: usize) -> f64 {
        let k = self.inner.index[flat];
        let s = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        s / (self.inner.m * self.inner.m)
    }

    #[inline]
    pub fn wave_norm(&self, flat: usize) -> f64 {
        self.wave_norm_sq(flat).sqrt()
    }

    /// Wave vector with Nyquist components replaced by zero.
    ///
    /// Odd symbols use this representative so that real fields stay real.
    #[inline]
    pub fn wave_vector_sym(&self, flat: usize) -> [f64; 3] {
        let k = self.inner.index[flat];
        let nyq = -(self.inner.n as i32 / 2);
        let m = self.inner.m;
        let mut out = [0.0; 3];
        for a in 0..3 {
            out[a] = if k[a] == nyq { 0.0 } else { k[a] as f64 / m };
        }
        out
    }

    /// True if any component of the wave index equals `-N/2`.
    #[inline]
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let nyq = -(self.inner.n as i32 / 2);
        let k = self.inner.index[flat];
        k[..self.inner.dim].iter().any(|&c| c == nyq)
    }

    /// Flat position of integer wave index `k`, if representable.
    pub fn flat_index(&self, k: &[i32]) -> Option<usize> {
        let n = self.inner.n;
        let h = (n / 2) as i32;
        if k.len() != self.inner.dim {
            return None;
        }
        let mut flat = 0usize;
        for &c in k {
            if c < -h || c >= h {
                return None;
            }
            flat = flat * n + fft_slot(c, n);
        }
        Some(flat)
    }

    /// Flat position of `-k` (modulo `N`).
    pub fn conj_index(&self, flat: usize) -> usize {
        let n = self.inner.n;
        let k = self.inner.index[flat];
        let mut out = 0usize;
        for &c in &k[..self.inner.dim] {
            out = out * n + fft_slot(-c, n);
        }
        out
    }

    /// Physical coordinates of sample `flat`.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let n = self.inner.n;
        let h = self.spacing();
        let mut x = [0.0; 3];
        let mut rem = flat;
        for axis in (0..self.inner.dim).rev() {
            x[axis] = (rem % n) as f64 * h;
            rem /= n;
        }
        x
    }

    pub fn points(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Grid with the same `N` and box scale `M'`.
    pub fn with_box_scale(&self, m: f64) -> Result<Self> {
        Self::new(self.inner.dim, self.inner.n, m)
    }

    pub(crate) fn block_table(&self) -> Arc<BlockTable> {
        self.inner
            .blocks
            .get_or_init(|| Arc::new(BlockTable::build(self)))
            .clone()
    }

    pub(crate) fn padded_layout(&self) -> Arc<PaddedLayout> {
        self.inner
            .padded
            .get_or_init(|| Arc::new(PaddedLayout::build(self)))
            .clone()
    }
}

impl PaddedLayout {
    fn build(grid: &TorusGrid) -> Self {
        let d = grid.dim();
        let n = grid.n();
        let l = 3 * n / 2;
        let len = l.pow(d as u32);
        let base_to_padded = (0..grid.len())
            .map(|flat| {
                let k = grid.wave_index(flat);
                k[..d].iter().fold(0usize, |acc, &c| acc * l + fft_slot(c, l))
            })
            .collect();
        let padded_conj = (0..len)
            .map(|flat| {
                let mut rem = flat;
                let mut slots = [0usize; 3];
                for axis in (0..d).rev() {
                    slots[axis] = rem % l;
                    rem /= l;
                }
                slots[..d]
                    .iter()
                    .fold(0usize, |acc, &s| acc * l + (l - s) % l)
            })
            .collect();
        let half = (n / 2) as i32;
        let nyquist_split = (0..grid.len())
            .filter(|&flat| grid.is_nyquist(flat))
            .map(|flat| {
                let k = grid.wave_index(flat);
                let axes: Vec<usize> = (0..d).filter(|&a| k[a] == -half).collect();
                let slots = (0..1usize << axes.len())
                    .map(|mask| {
                        let mut kk = k;
                        for (b, &a) in axes.iter().enumerate() {
                            if mask & (1 << b) != 0 {
                                kk[a] = half;
                            }
                        }
                        kk[..d].iter().fold(0usize, |acc, &c| acc * l + fft_slot(c, l))
                    })
                    .collect();
                (flat, slots)
            })
            .collect();
        Self {
            l,
            len,
            base_to_padded,
            padded_conj,
            nyquist_split,
        }
    }
}
