//! Exponential integrator: exact linear semigroup per mode, ETD2 midpoint
//! for the nonlinear terms.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::params::CnsParams;
use super::rhs::nonlinear_rhs;
use super::state::CnsState;
use crate::error::{Error, Result};
use crate::linear::general_mode_matrix;
use crate::linear::phi::{phi_matrix2, phi_scalar, Mat2};
use crate::spectral::{SpectralField, TorusGrid};

/// Per-mode values `(â, û₁..û_d)`.
pub(crate) type Packed = Vec<[Complex64; 4]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Op {
    Exp,
    Phi1,
    Phi2,
    ExpHalf,
    Phi1Half,
}

impl Op {
    fn index(self) -> usize {
        self as usize
    }
}

/// Coefficients for one value of `|k|²`: the acoustic 2×2 block acting on
/// `(â, v̂)` and the scalar heat factor for `Pû`.
#[derive(Clone, Copy, Debug)]
struct ModeCoeffs {
    acoustic: [Mat2; 5],
    heat: [f64; 5],
}

fn scaled(m: &Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

impl ModeCoeffs {
    fn build(rho2: f64, params: &CnsParams, h: f64) -> Self {
        let b = general_mode_matrix(rho2.sqrt(), params.alpha(), params.nu());
        let [e, p1, p2] = phi_matrix2(&scaled(&b, h));
        let [eh, p1h, _] = phi_matrix2(&scaled(&b, 0.5 * h));
        let z = -params.mu * rho2;
        let [se, s1, s2] = phi_scalar(z * h);
        let [seh, s1h, _] = phi_scalar(z * 0.5 * h);
        Self {
            acoustic: [e, p1, p2, eh, p1h],
            heat: [se, s1, s2, seh, s1h],
        }
    }
}

/// Linear propagator on one grid for one step size.
pub struct Propagator {
    grid: TorusGrid,
    h: f64,
    class_of: Vec<u32>,
    coeffs: Vec<ModeCoeffs>,
}

impl std::fmt::Debug for Propagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Propagator")
            .field("h", &self.h)
            .field("classes", &self.coeffs.len())
            .finish()
    }
}

fn index_norm_sq(grid: &TorusGrid, flat: usize) -> i64 {
    let k = grid.wave_index(flat);
    k.iter().map(|&c| c as i64 * c as i64).sum()
}

impl Propagator {
    pub fn new(grid: &TorusGrid, params: &CnsParams, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
        }
        params.validate(false)?;
        let mut classes: HashMap<i64, u32> = HashMap::new();
        let mut keys = Vec::new();
        let class_of = (0..grid.len())
            .map(|flat| {
                let k2 = index_norm_sq(grid, flat);
                *classes.entry(k2).or_insert_with(|| {
                    keys.push(k2);
                    (keys.len() - 1) as u32
                })
            })
            .collect();
        let m2 = grid.box_scale() * grid.box_scale();
        let coeffs = keys
            .par_iter()
            .map(|&k2| ModeCoeffs::build(k2 as f64 / m2, params, h))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            h,
            class_of,
            coeffs,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// `op(hL)` applied to packed values; Nyquist modes map to zero.
    pub(crate) fn apply(&self, op: Op, y: &Packed) -> Packed {
        let grid = &self.grid;
        let d = grid.dim();
        let k = op.index();
        (0..grid.len())
            .into_par_iter()
            .map(|flat| {
                let zero = [Complex64::default(); 4];
                if grid.is_nyquist(flat) {
                    return zero;
                }
                let c = &self.coeffs[self.class_of[flat] as usize];
                let (m, s) = (&c.acoustic[k], c.heat[k]);
                let v = &y[flat];
                let mut out = zero;
                let r2 = grid.wave_norm_sq(flat);
                if r2 == 0.0 {
                    out[0] = v[0] * m[0][0];
                    for i in 0..d {
                        out[1 + i] = v[1 + i] * s;
                    }
                    return out;
                }
                let rho = r2.sqrt();
                let xi = grid.wave_vector(flat);
                let dot: Complex64 = (0..d).map(|i| v[1 + i] * xi[i]).sum();
                // v̂ = iξ·û/ρ and Qû = ξ(ξ·û)/ρ² = -iξv̂/ρ
                let vq = Complex64::new(0.0, 1.0) * dot / rho;
                let a1 = v[0] * m[0][0] + vq * m[0][1];
                let v1 = v[0] * m[1][0] + vq * m[1][1];
                out[0] = a1;
                for i in 0..d {
                    let q = dot * (xi[i] / r2);
                    let p = v[1 + i] - q;
                    out[1 + i] = p * s + Complex64::new(0.0, -xi[i] / rho) * v1;
                }
                out
            })
            .collect()
    }
}

pub(crate) fn pack(a: &SpectralField, u: &SpectralField) -> Packed {
    let d = u.components();
    (0..a.grid().len())
        .map(|flat| {
            let mut v = [Complex64::default(); 4];
            v[0] = a.coeffs(0)[flat];
            for i in 0..d {
                v[1 + i] = u.coeffs(i)[flat];
            }
            v
        })
        .collect()
}

pub(crate) fn unpack(grid: &TorusGrid, y: &Packed) -> (SpectralField, SpectralField) {
    let d = grid.dim();
    let a = vec![y.iter().map(|v| v[0]).collect()];
    let u = (0..d).map(|i| y.iter().map(|v| v[1 + i]).collect()).collect();
    (
        SpectralField::from_coeffs(grid, a, true).expect("layout matches"),
        SpectralField::from_coeffs(grid, u, true).expect("layout matches"),
    )
}

pub(crate) fn packed_norm(grid: &TorusGrid, y: &Packed) -> f64 {
    let s: f64 = y.iter().map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (s / grid.volume()).sqrt()
}

fn combine(terms: &[(f64, &Packed)]) -> Packed {
    let len = terms[0].1.len();
    (0..len)
        .map(|i| {
            let mut v = [Complex64::default(); 4];
            for (w, y) in terms {
                for (o, z) in v.iter_mut().zip(&y[i]) {
                    *o += z * *w;
                }
            }
            v
        })
        .collect()
}

/// Small cache of propagators keyed by step size.
#[derive(Debug)]
pub struct PropagatorCache {
    grid: TorusGrid,
    params: CnsParams,
    entries: Vec<(u64, Arc<Propagator>)>,
    capacity: usize,
}

impl PropagatorCache {
    pub fn new(grid: &TorusGrid, params: &CnsParams) -> Self {
        Self {
            grid: grid.clone(),
            params: *params,
            entries: Vec::new(),
            capacity: 6,
        }
    }

    pub fn get(&mut self, h: f64) -> Result<Arc<Propagator>> {
        let key = h.to_bits();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            let hit = self.entries.remove(pos);
            let p = hit.1.clone();
            self.entries.push(hit);
            return Ok(p);
        }
        let p = Arc::new(Propagator::new(&self.grid, &self.params, h)?);
        if self.entries.len() == self.capacity {
            self.entries.remove(0);
        }
        self.entries.push((key, p.clone()));
        Ok(p)
    }
}

/// Result of one accepted step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: CnsState,
    /// `min(1 + a)` and `max |u|` at the start of the step.
    pub min_density: f64,
    pub max_speed: f64,
    /// `‖nonlinear increment‖ / ‖linear part‖`.
    pub nonlinear_ratio: f64,
}

/// Largest admissible nonlinear-to-linear increment ratio.
pub const REJECTION_RATIO: f64 = 0.5;

/// One ETD2 step with a prebuilt propagator. `nonlinear = false` gives the
/// exact linear flow.
pub fn cns_step_with(state: &CnsState, params: &CnsParams, prop: &Propagator, nonlinear: bool) -> Result<StepOutcome> {
    let grid = state.grid();
    if *grid != prop.grid {
        return Err(Error::GridMismatch);
    }
    let h = prop.h;
    let y = pack(&state.a, &state.u);
    let lin = prop.apply(Op::Exp, &y);
    if !nonlinear {
        let (a, u) = unpack(grid, &lin);
        let (lo, _) = state.density_range();
        return Ok(StepOutcome {
            state: CnsState { a, u, t: state.t + h },
            min_density: 1.0 + lo,
            max_speed: 0.0,
            nonlinear_ratio: 0.0,
        });
    }
    let r0 = nonlinear_rhs(state, params)?;
    let n0 = pack(&r0.f, &r0.g);
    let half_lin = prop.apply(Op::ExpHalf, &y);
    let half_src = prop.apply(Op::Phi1Half, &n0);
    let (ah, uh) = unpack(grid, &combine(&[(1.0, &half_lin), (0.5 * h, &half_src)]));
    let mid = CnsState {
        a: ah,
        u: uh,
        t: state.t + 0.5 * h,
    };
    let r1 = nonlinear_rhs(&mid, params)?;
    let n1 = pack(&r1.f, &r1.g);
    let p1n0 = prop.apply(Op::Phi1, &n0);
    let p2n0 = prop.apply(Op::Phi2, &n0);
    let p2n1 = prop.apply(Op::Phi2, &n1);
    let inc = combine(&[(h, &p1n0), (-2.0 * h, &p2n0), (2.0 * h, &p2n1)]);
    let (ln, inn) = (packed_norm(grid, &lin), packed_norm(grid, &inc));
    let ratio = if ln > 0.0 { inn / ln } else if inn > 0.0 { f64::INFINITY } else { 0.0 };
    if ratio > REJECTION_RATIO {
        return Err(Error::StepRejected { suggested: 0.5 * h });
    }
    let (a, u) = unpack(grid, &combine(&[(1.0, &lin), (1.0, &inc)]));
    let next = CnsState { a, u, t: state.t + h };
    let (lo, _) = next.density_range();
    if 1.0 + lo <= 0.0 {
        return Err(Error::DensityPositivity(1.0 + lo));
    }
    Ok(StepOutcome {
        state: next,
        min_density: r0.min_density,
        max_speed: r0.max_speed,
        nonlinear_ratio: ratio,
    })
}

/// One step of size `h` (builds the propagator).
pub fn cns_step(state: &CnsState, params: &CnsParams, h: f64) -> Result<CnsState> {
    let prop = Propagator::new(state.grid(), params, h)?;
    Ok(cns_step_with(state, params, &prop, true)?.state)
}

/// Exact linear flow over `t` (one propagator application).
pub fn linear_propagate(state: &CnsState, params: &CnsParams, t: f64) -> Result<CnsState> {
    let prop = Propagator::new(state.grid(), params, t)?;
    Ok(cns_step_with(state, params, &prop, false)?.state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::mode_propagate;

    fn grid() -> TorusGrid {
        TorusGrid::new(2, 16, 1.0).unwrap()
    }

    fn smooth_state(g: &TorusGrid, amp: f64) -> CnsState {
        let a = SpectralField::from_fn(g, move |x| amp * (x[0].sin() + 0.5 * (x[0] + 2.0 * x[1]).cos()));
        let u = SpectralField::from_vector_fn(g, 2, move |x, o| {
            o[0] = amp * (x[1].sin() + 0.3 * x[0].cos());
            o[1] = amp * (0.7 * (x[0] - x[1]).sin());
        });
        CnsState::new(a, u, 0.0).unwrap()
    }

    #[test]
    fn zero_state_is_fixed() {
        let g = grid();
        let s = CnsState::zeros(&g);
        let next = cns_step(&s, &CnsParams::default(), 0.1).unwrap();
        assert_eq!(next.a.max_coeff(), 0.0);
        assert_eq!(next.u.max_coeff(), 0.0);
    }

    #[test]
    fn linear_path_matches_mode_propagation() {
        let g = grid();
        let s = smooth_state(&g, 1.0);
        let t = 0.37;
        let out = linear_propagate(&s, &CnsParams::default(), t).unwrap();
        // mode (1, 2): ξ = (1, 2)
        let flat = g.flat_index(&[1, 2]).unwrap();
        let xi = g.wave_vector(flat);
        let rho = g.wave_norm(flat);
        let dot = s.u.coeffs(0)[flat] * xi[0] + s.u.coeffs(1)[flat] * xi[1];
        let v0 = Complex64::new(0.0, 1.0) * dot / rho;
        let traj = mode_propagate(s.a.coeffs(0)[flat], v0, rho, None, None, &[0.0, t]).unwrap();
        let (a1, v1) = traj[1];
        assert!((out.a.coeffs(0)[flat] - a1).norm() < 1e-12 * (1.0 + a1.norm()));
        let dot1 = out.u.coeffs(0)[flat] * xi[0] + out.u.coeffs(1)[flat] * xi[1];
        assert!((Complex64::new(0.0, 1.0) * dot1 / rho - v1).norm() < 1e-12 * (1.0 + v1.norm()));
    }

    #[test]
    fn divergence_free_part_diffuses_with_mu() {
        let g = grid();
        let u = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = x[1].sin();
            o[1] = 0.0;
        });
        let s = CnsState::new(SpectralField::zeros(&g, 1), u.clone(), 0.0).unwrap();
        let p = CnsParams::default();
        let out = linear_propagate(&s, &p, 0.8).unwrap();
        let want = u.scaled((-p.mu * 0.8f64).exp());
        assert!(out.u.sub(&want).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn small_amplitude_step_is_nearly_linear() {
        let g = grid();
        let p = CnsParams::default();
        let s = smooth_state(&g, 1e-6);
        let nl = cns_step(&s, &p, 0.1).unwrap();
        let lin = linear_propagate(&s, &p, 0.1).unwrap();
        assert!(nl.distance(&lin).unwrap() <= 1e-9);
    }

    #[test]
    fn mean_density_is_conserved() {
        let g = grid();
        let p = CnsParams::default();
        let mut s = smooth_state(&g, 0.1);
        s.a.coeffs_mut(0)[0] = Complex64::new(0.05 * g.volume(), 0.0);
        let m0 = s.mass_mean();
        for _ in 0..5 {
            s = cns_step(&s, &p, 0.05).unwrap();
        }
        assert!((s.mass_mean() - m0).abs() < 1e-12);
    }

    #[test]
    fn large_step_is_rejected() {
        let g = grid();
        let p = CnsParams::default();
        let s = smooth_state(&g, 0.4);
        match cns_step(&s, &p, 5.0) {
            Err(Error::StepRejected { suggested }) => assert_eq!(suggested, 2.5),
            other => panic!("expected rejection, got {other:?}"),
        }
    }
}
