//! Flow maps `X(t, y) = y + ∫₀ᵗ v̄(τ, y) dτ` with their Jacobians.

use serde::{Deserialize, Serialize};

use super::algebra::{det_adj, read_mat, write_mat, SINGULAR_JACOBIAN};
use crate::error::{Error, Result};
use crate::littlewood_paley::{besov_norm, NormSpec};
use crate::spectral::{partial, PaddedSamples, SpectralField};

/// Index of entry `(i, j)` in a row-major `d×d` matrix field.
pub fn mat_index(i: usize, j: usize, d: usize) -> usize {
    i * d + j
}

/// `Dz` with `(Dz)_{ij} = ∂_j z_i`, as a `d²`-component field.
pub fn jacobian_field(z: &SpectralField) -> Result<SpectralField> {
    let d = z.grid().dim();
    let dz: Vec<SpectralField> = (0..d).map(|j| partial(z, j)).collect();
    let mut parts = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            parts.push(dz[j].component(i));
        }
    }
    SpectralField::stack(&parts)
}

/// `(div M)_j = Σ_i ∂_i M_{ij}` for a row-major matrix field.
pub fn matrix_divergence(m: &SpectralField) -> Result<SpectralField> {
    let d = m.grid().dim();
    if m.components() != d * d {
        return Err(Error::SizeMismatch {
            expected: d * d,
            got: m.components(),
        });
    }
    let mut cols = Vec::with_capacity(d);
    for j in 0..d {
        let mut acc = partial(&m.component(mat_index(0, j, d)), 0);
        for i in 1..d {
            acc = acc.add(&partial(&m.component(mat_index(i, j, d)), i))?;
        }
        cols.push(acc);
    }
    SpectralField::stack(&cols)
}

/// `M - Id` (or `M + s·Id` in general) for a matrix field.
pub fn shift_identity(m: &SpectralField, s: f64) -> SpectralField {
    let d = m.grid().dim();
    let vol = m.grid().volume();
    let mut out = m.clone();
    for i in 0..d {
        out.coeffs_mut(mat_index(i, i, d))[0] += s * vol;
    }
    out
}

/// Flow quantities at one time.
#[derive(Clone, Debug)]
pub struct FlowSnapshot {
    pub t: f64,
    /// `X(t, y) - y`.
    pub displacement: SpectralField,
    pub dx: SpectralField,
    pub jacobian: SpectralField,
    /// `A = (DX)^{-1}`.
    pub inverse: SpectralField,
    pub adjugate: SpectralField,
    pub min_jacobian: f64,
}

impl FlowSnapshot {
    /// Builds `DX`, `J`, `A` and `adj(DX)` from a displacement field.
    pub fn from_displacement(displacement: SpectralField, t: f64) -> Result<Self> {
        let d = displacement.grid().dim();
        if displacement.components() != d {
            return Err(Error::InvalidArgument("displacement must be a vector field".into()));
        }
        let dx = shift_identity(&jacobian_field(&displacement)?, 1.0);
        let ps = PaddedSamples::new(&[&dx])?;
        let n = d * d;
        let vals = ps.map(1 + 2 * n, |x, o| {
            let (j, adj) = det_adj(&read_mat(x, 0, d), d);
            o[0] = j;
            write_mat(&adj, o, 1, d);
            let inv = j.recip();
            for k in 0..n {
                o[1 + n + k] = o[1 + k] * inv;
            }
        });
        let min_jacobian = vals[0].iter().copied().fold(f64::INFINITY, f64::min);
        if !(min_jacobian > SINGULAR_JACOBIAN) {
            return Err(Error::NonPositiveJacobian(min_jacobian));
        }
        let jacobian = ps.to_field(&vals[..1]);
        let adjugate = ps.to_field(&vals[1..1 + n]);
        let inverse = ps.to_field(&vals[1 + n..]);
        Ok(Self {
            t,
            displacement,
            dx,
            jacobian,
            inverse,
            adjugate,
            min_jacobian,
        })
    }

    /// Identity flow on the grid of `like`.
    pub fn identity(like: &SpectralField) -> Result<Self> {
        let d = like.grid().dim();
        Self::from_displacement(SpectralField::zeros(like.grid(), d), 0.0)
    }

    /// Largest `|Σ_i ∂_i adj_{ij}|` over the padded samples.
    pub fn piola_residual(&self) -> Result<f64> {
        let div = matrix_divergence(&self.adjugate)?;
        let ps = PaddedSamples::new(&[&div])?;
        Ok((0..div.components()).map(|c| ps.min(c).abs().max(ps.max(c).abs())).fold(0.0, f64::max))
    }

    /// Largest entry of `DX` over the padded samples.
    pub fn dx_sup(&self) -> Result<f64> {
        let ps = PaddedSamples::new(&[&self.dx])?;
        Ok((0..self.dx.components()).map(|c| ps.min(c).abs().max(ps.max(c).abs())).fold(0.0, f64::max))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowOptions {
    pub p: f64,
    /// Warning level for `∫₀ᵀ‖∇v̄‖_{Ḃ^{d/p}_{p,1}}`.
    pub gate: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { p: 2.0, gate: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct FlowMap {
    pub times: Vec<f64>,
    pub snapshots: Vec<FlowSnapshot>,
    /// `∫₀ᵗ‖∇v̄‖_{Ḃ^{d/p}_{p,1}}` at every time.
    pub gate_integrals: Vec<f64>,
    pub warning: Option<String>,
}

impl FlowMap {
    pub fn last(&self) -> &FlowSnapshot {
        self.snapshots.last().expect("nonempty")
    }

    pub fn gate_integral(&self) -> f64 {
        *self.gate_integrals.last().expect("nonempty")
    }

    pub fn min_jacobian(&self) -> f64 {
        self.snapshots.iter().map(|s| s.min_jacobian).fold(f64::INFINITY, f64::min)
    }
}

/// `‖Dv‖_{Ḃ^{s}_{p,1}}` with `Dv` the full `d²`-component Jacobian.
pub fn gradient_norm(v: &SpectralField, s: f64, p: f64) -> Result<f64> {
    besov_norm(&jacobian_field(v)?, &NormSpec::besov(s, p, 1.0))
}

/// Trapezoid flow map of the Lagrangian velocity series `v̄` on `times`.
pub fn flow_map(v: &[SpectralField], times: &[f64], opts: &FlowOptions) -> Result<FlowMap> {
    if v.len() != times.len() || v.is_empty() {
        return Err(Error::SizeMismatch {
            expected: times.len(),
            got: v.len(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    let grid = v[0].grid();
    let d = grid.dim();
    if v.iter().any(|f| f.components() != d || f.grid() != grid) {
        return Err(Error::InvalidArgument("velocities must be vector fields on one grid".into()));
    }
    let s = d as f64 / opts.p;
    let norms = v.iter().map(|f| gradient_norm(f, s, opts.p)).collect::<Result<Vec<f64>>>()?;
    let mut disp = SpectralField::zeros(grid, d);
    let mut integral = 0.0;
    let mut gate_integrals = vec![0.0];
    let mut snapshots = vec![FlowSnapshot::from_displacement(disp.clone(), times[0])?];
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        disp.axpy_in_place(0.5 * h, &v[i - 1]);
        disp.axpy_in_place(0.5 * h, &v[i]);
        integral += 0.5 * h * (norms[i - 1] + norms[i]);
        gate_integrals.push(integral);
        snapshots.push(FlowSnapshot::from_displacement(disp.clone(), times[i])?);
    }
    let warning = (integral > opts.gate).then(|| {
        format!(
            "∫‖∇v̄‖_{{Ḃ^{{d/p}}_{{p,1}}}} = {integral:.3e} exceeds the gate {}",
            opts.gate
        )
    });
    Ok(FlowMap {
        times: times.to_vec(),
        snapshots,
        gate_integrals,
        warning,
    })
}

/// Measured sides of the flow bounds, each divided by `∫₀ᵗ‖Dv̄‖`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowBounds {
    pub dv_l1: f64,
    /// `sup_t ‖Id - adj(DX)‖`, `‖Id - A‖`, `‖J - 1‖`, `‖J^{-1} - 1‖` in `Ḃ^{d/p}_{p,1}`.
    pub deviations: [f64; 4],
    /// Largest ratio deviation(t)/∫₀ᵗ‖Dv̄‖ over `t > 0`.
    pub constants: [f64; 4],
}

/// Evaluates the four flow bounds along `flow`.
pub fn flow_bounds(flow: &FlowMap, p: f64) -> Result<FlowBounds> {
    let d = flow.last().dx.grid().dim() as f64;
    let spec = NormSpec::besov(d / p, p, 1.0);
    let mut deviations = [0.0f64; 4];
    let mut constants = [0.0f64; 4];
    for (snap, &l1) in flow.snapshots.iter().zip(&flow.gate_integrals).skip(1) {
        let jinv = {
            let ps = PaddedSamples::new(&[&snap.jacobian])?;
            let vals = ps.map(1, |x, o| o[0] = x[0].recip() - 1.0);
            ps.to_field(&vals)
        };
        // The homogeneous norm ignores the mean, so the shifts only matter for clarity.
        let devs = [
            besov_norm(&shift_identity(&snap.adjugate, -1.0), &spec)?,
            besov_norm(&shift_identity(&snap.inverse, -1.0), &spec)?,
            besov_norm(&snap.jacobian, &spec)?,
            besov_norm(&jinv, &spec)?,
        ];
        for k in 0..4 {
            deviations[k] = deviations[k].max(devs[k]);
            if l1 > 0.0 {
                constants[k] = constants[k].max(devs[k] / l1);
            }
        }
    }
    Ok(FlowBounds {
        dv_l1: flow.gate_integral(),
        deviations,
        constants,
    })
}

/// `sup_t‖A_{v²} - A_{v¹}‖_{Ḃ^{d/p}_{p,1}} / ‖Dδv‖_{L¹_T Ḃ^{d/p}_{p,1}}`.
pub fn flow_stability(f1: &FlowMap, f2: &FlowMap, v1: &[SpectralField], v2: &[SpectralField], p: f64) -> Result<f64> {
    let d = f1.last().dx.grid().dim() as f64;
    let spec = NormSpec::besov(d / p, p, 1.0);
    let mut worst: f64 = 0.0;
    for (a, b) in f1.snapshots.iter().zip(&f2.snapshots) {
        worst = worst.max(besov_norm(&b.inverse.sub(&a.inverse)?, &spec)?);
    }
    let norms = v1
        .iter()
        .zip(v2)
        .map(|(a, b)| gradient_norm(&b.sub(a)?, d / p, p))
        .collect::<Result<Vec<f64>>>()?;
    let l1: f64 = norms
        .windows(2)
        .zip(f1.times.windows(2))
        .map(|(n, t)| 0.5 * (t[1] - t[0]) * (n[0] + n[1]))
        .sum();
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("velocity fields coincide".into()));
    }
    Ok(worst / l1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn frozen(v: &SpectralField, n: usize, t: f64) -> (Vec<SpectralField>, Vec<f64>) {
        let times: Vec<f64> = (0..=n).map(|i| t * i as f64 / n as f64).collect();
        (vec![v.clone(); n + 1], times)
    }

    #[test]
    fn constant_velocity_translates() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let v = SpectralField::from_vector_fn(&g, 2, |_, o| {
            o[0] = 0.3;
            o[1] = -0.2;
        });
        let (vs, ts) = frozen(&v, 4, 1.0);
        let f = flow_map(&vs, &ts, &FlowOptions::default()).unwrap();
        let s = f.last();
        assert!((s.displacement.mean(0).re - 0.3).abs() < 1e-14);
        assert!((s.jacobian.mean(0).re - 1.0).abs() < 1e-14);
        assert!(shift_identity(&s.dx, -1.0).max_coeff() < 1e-14);
        assert!(f.warning.is_none());
    }

    #[test]
    fn shear_flow_is_volume_preserving() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        let v = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = 0.5 * x[1].sin();
            o[1] = 0.0;
        });
        let (vs, ts) = frozen(&v, 8, 1.0);
        let f = flow_map(&vs, &ts, &FlowOptions::default()).unwrap();
        let s = f.last();
        let ps = PaddedSamples::new(&[&s.jacobian]).unwrap();
        assert!((ps.min(0) - 1.0).abs() < 1e-8 && (ps.max(0) - 1.0).abs() < 1e-8);
        assert!(s.piola_residual().unwrap() < 1e-10);
        assert!(f.warning.is_some());
    }

    #[test]
    fn matrix_divergence_sums_over_first_index() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let m = SpectralField::from_vector_fn(&g, 4, |x, o| {
            o[0] = x[0].sin();
            o[1] = 0.0;
            o[2] = x[1].cos();
            o[3] = 0.0;
        });
        let div = matrix_divergence(&m).unwrap();
        let want = SpectralField::from_vector_fn(&g, 2, |x, o| {
            o[0] = x[0].cos() - x[1].sin();
            o[1] = 0.0;
        });
        assert!(div.sub(&want).unwrap().max_coeff() < 1e-12);
    }
}
