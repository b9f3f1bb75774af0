//! Periodic grids, Fourier transforms, multipliers, Helmholtz projection and
//! Lebesgue norms.

mod fft;
mod field;
mod grid;
mod product;
mod symbol;

pub use fft::fft_nd;
pub use field::{lebesgue_norm, transform, Direction, SpectralField};
pub(crate) use field::{lp_of_samples, magnitudes};
pub use grid::TorusGrid;
pub use product::{dealiased_dot, dealiased_product, PaddedSamples};
#[allow(unused_imports)]
pub(crate) use product::{from_padded_real, padded_real};
pub use symbol::{apply_symbol, divergence, gradient, helmholtz_project, partial, FourierSymbol, ZeroMode};
pub(crate) use symbol::apply_weights;

/// Convenience constructor matching `TorusGrid::new`.
pub fn make_grid(dim: usize, n: usize, m: f64) -> crate::Result<TorusGrid> {
    TorusGrid::new(dim, n, m)
}
