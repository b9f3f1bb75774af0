//! Lagrangian source terms `I₁ … I₄` as row-major `d×d` fields.

use super::algebra::{read_mat, Mat};
use super::flow::{jacobian_field, FlowSnapshot};
use crate::cns::CnsParams;
use crate::error::{Error, Result};
use crate::spectral::{PaddedSamples, SpectralField};

/// Smallest admissible `ρ₀/J`.
pub const DENSITY_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct LagrangianTerms {
    /// `(adj - Id)·S(Dw̄ A)`.
    pub i1: SpectralField,
    /// Viscosity variation; zero for constant `λ, μ`.
    pub i2: SpectralField,
    /// `S(Dw̄(A - Id))`.
    pub i3: SpectralField,
    /// `-adj·P(ρ₀/J)`.
    pub i4: SpectralField,
}

impl LagrangianTerms {
    pub fn sum(&self) -> Result<SpectralField> {
        self.i1.add(&self.i2)?.add(&self.i3)?.add(&self.i4)
    }
}

/// `S(M) = μ(M + Mᵀ) + λ tr(M) Id`.
fn stress(m: &Mat, d: usize, lambda: f64, mu: f64) -> Mat {
    let tr: f64 = (0..d).map(|i| m[i][i]).sum();
    let mut s = [[0.0; 3]; 3];
    for i in 0..d {
        for j in 0..d {
            s[i][j] = mu * (m[i][j] + m[j][i]);
        }
        s[i][i] += lambda * tr;
    }
    s
}

/// Builds `I₁ … I₄` for the flow of `v̄` acting on `w̄`.
pub fn lagrangian_rhs_terms(
    flow: &FlowSnapshot,
    w: &SpectralField,
    rho0: &SpectralField,
    params: &CnsParams,
) -> Result<LagrangianTerms> {
    let grid = w.grid();
    let d = grid.dim();
    if w.components() != d || rho0.components() != 1 {
        return Err(Error::InvalidArgument("w̄ must be a vector field and ρ₀ a scalar".into()));
    }
    let dw = jacobian_field(w)?;
    let ps = PaddedSamples::new(&[&flow.adjugate, &flow.inverse, &flow.jacobian, &dw, rho0])?;
    let n = d * d;
    let (lambda, mu) = (params.lambda, params.mu);
    let pressure = params.pressure;
    let vals = ps.map(3 * n + 1, |x, o| {
        let adj = read_mat(x, 0, d);
        let a = read_mat(x, n, d);
        let j = x[2 * n];
        let dw = read_mat(x, 2 * n + 1, d);
        let rho_bar = x[3 * n + 1] / j;
        let mut dwa = [[0.0; 3]; 3];
        let mut dwa_dev = [[0.0; 3]; 3];
        for r in 0..d {
            for c in 0..d {
                dwa[r][c] = (0..d).map(|k| dw[r][k] * a[k][c]).sum();
                dwa_dev[r][c] = dwa[r][c] - dw[r][c];
            }
        }
        let s = stress(&dwa, d, lambda, mu);
        let s3 = stress(&dwa_dev, d, lambda, mu);
        let p = pressure.pressure(rho_bar);
        for r in 0..d {
            for c in 0..d {
                let shifted = |k: usize| adj[r][k] - if r == k { 1.0 } else { 0.0 };
                o[r * d + c] = (0..d).map(|k| shifted(k) * s[k][c]).sum();
                o[n + r * d + c] = s3[r][c];
                o[2 * n + r * d + c] = -adj[r][c] * p;
            }
        }
        o[3 * n] = rho_bar;
    });
    let floor = vals[3 * n].iter().copied().fold(f64::INFINITY, f64::min);
    if !(floor > DENSITY_FLOOR) {
        return Err(Error::DensityPositivity(floor));
    }
    Ok(LagrangianTerms {
        i1: ps.to_field(&vals[..n]),
        i2: SpectralField::zeros(grid, n),
        i3: ps.to_field(&vals[n..2 * n]),
        i4: ps.to_field(&vals[2 * n..3 * n]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lagrangian::flow::shift_identity;
    use crate::spectral::TorusGrid;

    fn constant(g: &TorusGrid, v: f64) -> SpectralField {
        SpectralField::from_fn(g, move |_| v)
    }

    #[test]
    fn zero_velocity_leaves_pressure_only() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let w = SpectralField::zeros(&g, 2);
        let flow = FlowSnapshot::identity(&w).unwrap();
        let p = CnsParams::default();
        let t = lagrangian_rhs_terms(&flow, &w, &constant(&g, 1.3), &p).unwrap();
        assert!(t.i1.max_coeff() < 1e-14 && t.i2.max_coeff() < 1e-14 && t.i3.max_coeff() < 1e-14);
        let want = shift_identity(&SpectralField::zeros(&g, 4), -p.pressure.pressure(1.3));
        assert!(t.i4.sub(&want).unwrap().max_coeff() < 1e-12);
    }

    #[test]
    fn quadratic_terms_scale_quadratically() {
        let g = TorusGrid::new(2, 32, 1.0).unwrap();
        let rho0 = constant(&g, 1.0);
        let p = CnsParams::default();
        let norms: Vec<(f64, f64)> = [1e-3, 2e-3, 4e-3]
            .iter()
            .map(|&amp| {
                let v = SpectralField::from_vector_fn(&g, 2, move |x, o| {
                    o[0] = amp * x[1].sin();
                    o[1] = amp * (x[0] + x[1]).cos();
                });
                let flow = FlowSnapshot::from_displacement(v.clone(), 1.0).unwrap();
                let t = lagrangian_rhs_terms(&flow, &v, &rho0, &p).unwrap();
                (t.i1.l2_norm(), t.i3.l2_norm())
            })
            .collect();
        for k in 1..3 {
            let s1 = (norms[k].0 / norms[k - 1].0).log2();
            let s3 = (norms[k].1 / norms[k - 1].1).log2();
            assert!(s1 >= 1.95 && s3 >= 1.95, "{s1} {s3}");
        }
    }

    #[test]
    fn vacuum_is_refused() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let w = SpectralField::zeros(&g, 2);
        let flow = FlowSnapshot::identity(&w).unwrap();
        let err = lagrangian_rhs_terms(&flow, &w, &constant(&g, 0.0), &CnsParams::default());
        assert!(matches!(err, Err(Error::DensityPositivity(_))));
    }
}
