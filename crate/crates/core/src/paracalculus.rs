//! Bony decomposition, composition by smooth functions, and transport
//! commutators.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::littlewood_paley::{dyadic_block, DyadicBlocks};
use crate::spectral::{dealiased_product, partial, PaddedSamples, SpectralField};

/// `T_u v`, `T_v u` and `R(u, v)`.
#[derive(Clone, Debug)]
pub struct BonyTriple {
    pub t_uv: SpectralField,
    pub t_vu: SpectralField,
    pub r_uv: SpectralField,
}

impl BonyTriple {
    pub fn sum(&self) -> SpectralField {
        self.t_uv
            .add(&self.t_vu)
            .and_then(|s| s.add(&self.r_uv))
            .expect("compatible parts")
    }
}

fn check_pair(u: &SpectralField, v: &SpectralField) -> Result<()> {
    if u.grid() != v.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn accumulate(acc: &mut Option<SpectralField>, term: SpectralField) {
    match acc {
        Some(a) => {
            let real = a.is_real() && term.is_real();
            a.axpy_in_place(1.0, &term);
            a.set_real(real);
        }
        None => *acc = Some(term),
    }
}

fn zero_like(u: &SpectralField, v: &SpectralField) -> SpectralField {
    let mut z = SpectralField::zeros(u.grid(), u.components().max(v.components()));
    z.set_real(u.is_real() && v.is_real());
    z
}

fn paraproduct_blocks(bu: &DyadicBlocks, bv: &DyadicBlocks, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let mut acc = None;
    for j in bv.j_min..=bv.j_max {
        let low = bu.cut(j - 1);
        let block = bv.block(j).expect("in range");
        if low.max_coeff() == 0.0 || block.max_coeff() == 0.0 {
            continue;
        }
        accumulate(&mut acc, dealiased_product(&low, block)?);
    }
    Ok(acc.unwrap_or_else(|| zero_like(u, v)))
}

/// `T_u v = Σ_j Ṡ_{j-1}u Δ̇_j v`, each product dealiased.
pub fn paraproduct(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    check_pair(u, v)?;
    paraproduct_blocks(&DyadicBlocks::new(u), &DyadicBlocks::new(v), u, v)
}

fn remainder_blocks(bu: &DyadicBlocks, bv: &DyadicBlocks, u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let mut acc = None;
    for j in bu.j_min..=bu.j_max {
        let a = bu.block(j).expect("in range");
        if a.max_coeff() == 0.0 {
            continue;
        }
        let mut near: Option<SpectralField> = None;
        for jj in j - 1..=j + 1 {
            if let Some(b) = bv.block(jj) {
                accumulate(&mut near, b.clone());
            }
        }
        let near = near.expect("block j itself is in range");
        if near.max_coeff() == 0.0 {
            continue;
        }
        accumulate(&mut acc, dealiased_product(a, &near)?);
    }
    Ok(acc.unwrap_or_else(|| zero_like(u, v)))
}

/// `R(u, v) = Σ_{|j-j'|≤1} Δ̇_j u Δ̇_{j'} v`.
pub fn remainder(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    check_pair(u, v)?;
    remainder_blocks(&DyadicBlocks::new(u), &DyadicBlocks::new(v), u, v)
}

/// `(T_u v, T_v u, R(u, v))`. Their sum is `uv - ū v̄` (means `ū`, `v̄`).
pub fn bony(u: &SpectralField, v: &SpectralField) -> Result<BonyTriple> {
    check_pair(u, v)?;
    let bu = DyadicBlocks::new(u);
    let bv = DyadicBlocks::new(v);
    Ok(BonyTriple {
        t_uv: paraproduct_blocks(&bu, &bv, u, v)?,
        t_vu: paraproduct_blocks(&bv, &bu, v, u)?,
        r_uv: remainder_blocks(&bu, &bv, u, v)?,
    })
}

/// Smooth real function with an open domain, e.g. `a ↦ a/(1+a)` on `(-1, ∞)`.
#[derive(Clone)]
pub struct ScalarMap {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    domain: (f64, f64),
}

impl fmt::Debug for ScalarMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarMap")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl ScalarMap {
    pub fn new<F>(name: &str, domain: (f64, f64), f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            f: Arc::new(f),
            domain,
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", (f64::NEG_INFINITY, f64::INFINITY), |x| x)
    }

    /// `I(a) = a/(1+a)`.
    pub fn inverse_density() -> Self {
        Self::new("I", (-1.0, f64::INFINITY), |a| a / (1.0 + a))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// `F(u)` by evaluation on the padded grid and truncation.
pub fn compose(map: &ScalarMap, u: &SpectralField) -> Result<SpectralField> {
    let f0 = map.eval(0.0);
    if f0.abs() > 1e-12 {
        return Err(Error::CompositionDomain(format!(
            "{}(0) = {f0:.3e}, expected 0",
            map.name
        )));
    }
    let ps = PaddedSamples::new(&[u])?;
    let (lo, hi) = map.domain;
    for c in 0..u.components() {
        let (mn, mx) = (ps.min(c), ps.max(c));
        if mn <= lo || mx >= hi {
            return Err(Error::CompositionDomain(format!(
                "samples in [{mn:.4}, {mx:.4}] leave the domain ({lo}, {hi}) of {}",
                map.name
            )));
        }
    }
    let n = u.components();
    let vals = ps.map(n, |x, out| {
        for (o, v) in out.iter_mut().zip(x) {
            *o = map.eval(*v);
        }
    });
    Ok(ps.to_field(&vals))
}

/// Which transport commutator to form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommutatorVariant {
    /// `Δ̇_j(v·∇b) - v·∇Δ̇_j b`.
    Plain,
    /// `∂_iΔ̇_j(v·∇b) - v·∇∂_iΔ̇_j b` for each `i` (scalar `b`).
    Tilde,
}

/// `v·∇b` componentwise in `b`, dealiased.
pub fn advect(v: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    check_pair(v, b)?;
    let d = v.grid().dim();
    if v.components() != d {
        return Err(Error::InvalidArgument("advecting field must be a vector".into()));
    }
    let mut acc: Option<SpectralField> = None;
    for i in 0..d {
        let term = dealiased_product(&v.component(i), &partial(b, i))?;
        accumulate(&mut acc, term);
    }
    Ok(acc.expect("d >= 1"))
}

/// Transport commutator of `v·∇` with a dyadic block.
pub fn transport_commutator(
    v: &SpectralField,
    b: &SpectralField,
    j: i32,
    variant: CommutatorVariant,
) -> Result<SpectralField> {
    check_pair(v, b)?;
    let vb = advect(v, b)?;
    match variant {
        CommutatorVariant::Plain => {
            let lhs = dyadic_block(&vb, j)?;
            let rhs = advect(v, &dyadic_block(b, j)?)?;
            lhs.sub(&rhs)
        }
        CommutatorVariant::Tilde => {
            if b.components() != 1 {
                return Err(Error::InvalidArgument("tilde commutator takes a scalar b".into()));
            }
            let block_vb = dyadic_block(&vb, j)?;
            let block_b = dyadic_block(b, j)?;
            let parts = (0..v.grid().dim())
                .map(|i| partial(&block_vb, i).sub(&advect(v, &partial(&block_b, i))?))
                .collect::<Result<Vec<_>>>()?;
            SpectralField::stack(&parts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use num_complex::Complex64;

    fn mode(g: &TorusGrid, k: [f64; 2]) -> SpectralField {
        SpectralField::from_complex_fn(g, move |x| Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]))
    }

    #[test]
    fn separated_blocks() {
        let g = TorusGrid::new(2, 64, 1.0).unwrap();
        let u = mode(&g, [1.0, 1.0]);
        let v = mode(&g, [22.0, 0.0]);
        let t = bony(&u, &v).unwrap();
        let want = mode(&g, [23.0, 1.0]);
        assert!(t.t_uv.sub(&want).unwrap().max_coeff() < 1e-10);
        assert!(t.t_vu.max_coeff() < 1e-12);
        assert!(t.r_uv.max_coeff() < 1e-12);
    }

    #[test]
    fn diagonal_remainder() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let u = mode(&g, [1.0, 1.0]);
        let r = remainder(&u, &u).unwrap();
        assert!(r.sub(&mode(&g, [2.0, 2.0])).unwrap().max_coeff() < 1e-10);
    }

    #[test]
    fn compose_identity_and_domain() {
        let g = TorusGrid::new(1, 16, 1.0).unwrap();
        let a = SpectralField::from_fn(&g, |x| 0.3 * x[0].sin());
        let id = compose(&ScalarMap::identity(), &a).unwrap();
        assert!(id.sub(&a).unwrap().max_coeff() < 1e-12);
        let big = a.scaled(10.0);
        assert!(compose(&ScalarMap::inverse_density(), &big).is_err());
        let shifted = ScalarMap::new("cos", (f64::NEG_INFINITY, f64::INFINITY), f64::cos);
        assert!(compose(&shifted, &a).is_err());
    }

    #[test]
    fn constant_velocity_commutes() {
        let g = TorusGrid::new(2, 16, 1.0).unwrap();
        let v = SpectralField::from_vector_fn(&g, 2, |_, o| {
            o[0] = 0.7;
            o[1] = -0.2;
        });
        let b = SpectralField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos());
        for j in -1..3 {
            let c = transport_commutator(&v, &b, j, CommutatorVariant::Plain).unwrap();
            assert!(c.max_coeff() < 1e-12);
            let c = transport_commutator(&v, &b, j, CommutatorVariant::Tilde).unwrap();
            assert!(c.max_coeff() < 1e-12);
        }
    }
}
