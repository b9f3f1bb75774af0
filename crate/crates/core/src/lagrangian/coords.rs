//! Eulerian ↔ Lagrangian coordinate changes by spectral interpolation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algebra::{jacobian_adjugate, read_mat};
use super::flow::{jacobian_field, matrix_divergence, FlowSnapshot};
use crate::error::{Error, Result};
use crate::spectral::{divergence, PaddedSamples, SpectralField, TorusGrid};

pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordChange {
    /// `f ↦ f∘X`.
    ToLagrangian,
    /// `f̄ ↦ f̄∘X⁻¹`.
    ToEulerian,
}

/// Evaluates the trigonometric interpolants of real fields at arbitrary points.
pub struct PointEvaluator {
    grid: TorusGrid,
    coeffs: Vec<Vec<Complex64>>,
    slots: Vec<[usize; 3]>,
}

impl PointEvaluator {
    pub fn new(fields: &[&SpectralField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidArgument("no fields to evaluate".into()))?;
        let grid = first.grid().clone();
        let mut coeffs = Vec::new();
        for f in fields {
            if *f.grid() != grid {
                return Err(Error::GridMismatch);
            }
            if !f.is_real() {
                return Err(Error::InvalidArgument("point evaluation needs real-flagged fields".into()));
            }
            let scale = grid.volume().recip();
            for c in 0..f.components() {
                coeffs.push(f.coeffs(c).iter().map(|z| z * scale).collect());
            }
        }
        let (n, d) = (grid.n(), grid.dim());
        let slots = (0..grid.len())
            .map(|flat| {
                let mut s = [0usize; 3];
                let mut rem = flat;
                for axis in (0..d).rev() {
                    s[axis] = rem % n;
                    rem /= n;
                }
                s
            })
            .collect();
        Ok(Self { grid, coeffs, slots })
    }

    pub fn outputs(&self) -> usize {
        self.coeffs.len()
    }

    /// Writes every component at `x` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let (n, d, m) = (self.grid.n(), self.grid.dim(), self.grid.box_scale());
        let h = n / 2;
        let tables: Vec<Vec<Complex64>> = (0..d)
            .map(|axis| {
                (0..n)
                    .map(|slot| {
                        if slot == h {
                            // Nyquist mode: real part of the interpolant only.
                            Complex64::new((h as f64 / m * x[axis]).cos(), 0.0)
                        } else {
                            let k = if slot < h { slot as f64 } else { slot as f64 - n as f64 };
                            Complex64::from_polar(1.0, k / m * x[axis])
                        }
                    })
                    .collect()
            })
            .collect();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (flat, s) in self.slots.iter().enumerate() {
            let mut e = tables[0][s[0]];
            for axis in 1..d {
                e *= tables[axis][s[axis]];
            }
            for (o, c) in out.iter_mut().zip(&self.coeffs) {
                let z = c[flat];
                *o += z.re * e.re - z.im * e.im;
            }
        }
    }
}

/// Checks `min J > 0` and `|X - id| < πM` (half the periodic cell).
pub fn check_diffeomorphism(flow: &FlowSnapshot) -> Result<()> {
    if !(flow.min_jacobian > 0.0) {
        return Err(Error::NonPositiveJacobian(flow.min_jacobian));
    }
    let limit = std::f64::consts::PI * flow.displacement.grid().box_scale();
    let ps = PaddedSamples::new(&[&flow.displacement])?;
    let largest = (0..flow.displacement.components())
        .map(|c| ps.min(c).abs().max(ps.max(c).abs()))
        .fold(0.0, f64::max);
    if largest >= limit {
        return Err(Error::NotDiffeomorphic(format!(
            "displacement {largest:.3e} reaches half the cell ({limit:.3e})"
        )));
    }
    Ok(())
}

/// Reference points `y` with `X(y) = x` at every grid point `x`.
pub fn inverse_points(flow: &FlowSnapshot) -> Result<Vec<[f64; 3]>> {
    check_diffeomorphism(flow)?;
    let grid = flow.displacement.grid().clone();
    let d = grid.dim();
    let dxi = jacobian_field(&flow.displacement)?;
    let eval = PointEvaluator::new(&[&flow.displacement, &dxi])?;
    let tol = NEWTON_TOL * grid.box_scale().max(1.0);
    (0..grid.len())
        .into_par_iter()
        .map(|flat| {
            let x = grid.point(flat);
            let mut vals = vec![0.0; eval.outputs()];
            eval.eval(&x, &mut vals);
            let mut y = x;
            for a in 0..d {
                y[a] -= vals[a];
            }
            let mut residual = f64::INFINITY;
            for _ in 0..=NEWTON_MAX_ITER {
                eval.eval(&y, &mut vals);
                let mut r = [0.0; 3];
                for a in 0..d {
                    r[a] = y[a] + vals[a] - x[a];
                }
                residual = r[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
                if residual <= tol {
                    return Ok(y);
                }
                let mut dx = read_mat(&vals, d, d);
                for a in 0..d {
                    dx[a][a] += 1.0;
                }
                let (_, _, inv) = jacobian_adjugate(&dx, d)?;
                for a in 0..d {
                    y[a] -= (0..d).map(|b| inv[a][b] * r[b]).sum::<f64>();
                }
            }
            Err(Error::NewtonFailure { point: flat, residual })
        })
        .collect()
}

/// Samples `field` at `points` and projects back onto its grid.
pub fn resample(field: &SpectralField, points: &[[f64; 3]]) -> Result<SpectralField> {
    let grid = field.grid();
    if points.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            got: points.len(),
        });
    }
    let eval = PointEvaluator::new(&[field])?;
    let k = eval.outputs();
    let rows: Vec<Vec<f64>> = points
        .par_iter()
        .map(|x| {
            let mut out = vec![0.0; k];
            eval.eval(x, &mut out);
            out
        })
        .collect();
    let samples: Vec<Vec<f64>> = (0..k).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    SpectralField::from_real_samples(grid, &samples)
}

/// Grid points pushed forward by the flow, `y + ξ(y)`.
pub fn forward_points(flow: &FlowSnapshot) -> Vec<[f64; 3]> {
    let grid = flow.displacement.grid();
    let d = grid.dim();
    let disp = flow.displacement.real_samples();
    (0..grid.len())
        .map(|flat| {
            let mut y = grid.point(flat);
            for a in 0..d {
                y[a] += disp[a][flat];
            }
            y
        })
        .collect()
}

/// Composes `field` with `X` or with `X⁻¹`.
pub fn change_coords(field: &SpectralField, flow: &FlowSnapshot, direction: CoordChange) -> Result<SpectralField> {
    if field.grid() != flow.displacement.grid() {
        return Err(Error::GridMismatch);
    }
    let points = match direction {
        CoordChange::ToLagrangian => forward_points(flow),
        CoordChange::ToEulerian => inverse_points(flow)?,
    };
    resample(field, &points)
}

/// Sup-norm gap between `(div_x H)∘X` and `J⁻¹div_y(adj(DX)H̄)`, with `‖H‖_{C¹}`.
pub fn div_identity_defect(h: &SpectralField, flow: &FlowSnapshot) -> Result<(f64, f64)> {
    let grid = h.grid();
    let d = grid.dim();
    if h.components() != d {
        return Err(Error::InvalidArgument("H must be a vector field".into()));
    }
    let lhs = change_coords(&divergence(h)?, flow, CoordChange::ToLagrangian)?;
    let hbar = change_coords(h, flow, CoordChange::ToLagrangian)?;
    let ps = PaddedSamples::new(&[&flow.adjugate, &hbar])?;
    let n2 = d * d;
    let vals = ps.map(d, |x, o| {
        for j in 0..d {
            o[j] = (0..d).map(|i| x[j * d + i] * x[n2 + i]).sum();
        }
    });
    let div_y = divergence(&ps.to_field(&vals))?;
    let ps = PaddedSamples::new(&[&lhs, &div_y, &flow.jacobian])?;
    let gap = ps.map(1, |x, o| o[0] = (x[0] - x[1] / x[2]).abs());
    let defect = gap[0].iter().copied().fold(0.0, f64::max);
    let c1 = h.sup_norm() + jacobian_field(h)?.sup_norm();
    Ok((defect, c1))
}

/// `max |Σ_i ∂_i adj_{ij}|` relative to `sup|DX|`.
pub fn piola_defect(flow: &FlowSnapshot) -> Result<f64> {
    let div = matrix_divergence(&flow.adjugate)?;
    Ok(div.sup_norm() / flow.dx.sup_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn smooth(g: &TorusGrid) -> SpectralField {
        SpectralField::from_vector_fn(g, 2, |x, o| {
            o[0] = (x[0] + 0.3).sin() * (2.0 * x[1]).cos();
            o[1] = 0.5 * (x[0] - x[1]).cos();
        })
    }

    fn sheared(g: &TorusGrid, amp: f64) -> FlowSnapshot {
        let disp = SpectralField::from_vector_fn(g, 2, move |x, o| {
            o[0] = amp * x[1].sin();
            o[1] = amp * (x[0] + x[1]).cos();
        });
        FlowSnapshot::from_displacement(disp, 1.0).unwrap()
    }

    #[test]
    fn point_evaluation_matches_grid_samples() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let f = smooth(&g);
        let eval = PointEvaluator::new(&[&f]).unwrap();
        let s = f.real_samples();
        let mut out = [0.0; 2];
        for flat in [0, 17, 100, 255] {
            eval.eval(&g.point(flat), &mut out);
            assert!((out[0] - s[0][flat]).abs() < 1e-13);
            assert!((out[1] - s[1][flat]).abs() < 1e-13);
        }
        eval.eval(&[0.123, 4.5, 0.0], &mut out);
        assert!((out[1] - 0.5 * (0.123f64 - 4.5).cos()).abs() < 1e-13);
    }

    #[test]
    fn identity_flow_is_identity() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let f = smooth(&g);
        let id = FlowSnapshot::identity(&f).unwrap();
        for dir in [CoordChange::ToLagrangian, CoordChange::ToEulerian] {
            let out = change_coords(&f, &id, dir).unwrap();
            assert!(out.sub(&f).unwrap().max_coeff() < 1e-10);
        }
    }

    #[test]
    fn round_trip_recovers_field() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        let f = smooth(&g);
        let flow = sheared(&g, 0.05);
        let back = change_coords(&change_coords(&f, &flow, CoordChange::ToLagrangian).unwrap(), &flow, CoordChange::ToEulerian).unwrap();
        let rel = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
        assert!(rel < 1e-8, "{rel}");
    }

    #[test]
    fn div_identity_holds() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        let (defect, c1) = div_identity_defect(&smooth(&g), &sheared(&g, 0.05)).unwrap();
        assert!(defect <= 1e-6 * c1, "{defect} vs {c1}");
    }

    #[test]
    fn large_displacement_is_refused() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let disp = SpectralField::from_vector_fn(&g, 2, |_, o| {
            o[0] = 3.5;
            o[1] = 0.0;
        });
        let flow = FlowSnapshot::from_displacement(disp, 1.0).unwrap();
        let err = change_coords(&smooth(&g), &flow, CoordChange::ToEulerian);
        assert!(matches!(err, Err(Error::NotDiffeomorphic(_))));
    }
}
