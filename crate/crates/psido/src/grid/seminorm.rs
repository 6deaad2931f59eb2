//! Weighted suprema of derivatives: rapid-decay seminorms for grid
//! functions and growth-class seminorms for symbols. Suprema exclude a
//! boundary band where the clamped stencils are one-sided.

use super::data::{GridFn, SymbolGrid};
use super::spec::GridSpec;
use super::stencil::{grid_partial, symbol_partial};
use crate::geometry::MultiIndex;
use crate::Result;
use num_complex::Complex64;

/// Width (in lattice points) of the boundary band excluded from suprema.
pub const BOUNDARY_BAND: usize = 2;

fn bracket(p: &[f64]) -> f64 {
    (1.0 + p.iter().map(|c| c * c).sum::<f64>()).sqrt()
}

/// `sup <x>^p |d^alpha f|` over the interior of the lattice.
pub fn schwartz_seminorm(f: &GridFn, alpha: &MultiIndex, p: f64) -> Result<f64> {
    let d = grid_partial(&f.data, &f.spec, alpha)?;
    let mut sup: f64 = 0.0;
    for flat in 0..f.spec.len() {
        let idx = f.spec.unravel(flat);
        if f.spec.border_depth(&idx) < BOUNDARY_BAND {
            continue;
        }
        let x = f.spec.point(flat);
        sup = sup.max(bracket(&x).powf(p) * d[flat].norm());
    }
    Ok(sup)
}

/// Same quantity evaluated from a caller-supplied exact derivative, sampled
/// on the lattice of `spec` (no finite differences involved).
pub fn schwartz_seminorm_exact<F>(df: F, spec: &GridSpec, p: f64) -> f64
where
    F: Fn(&[f64]) -> Complex64,
{
    let mut sup: f64 = 0.0;
    for flat in 0..spec.len() {
        let x = spec.point(flat);
        sup = sup.max(bracket(&x).powf(p) * df(&x).norm());
    }
    sup
}

/// Growth-class seminorm
/// `sup <x>^{sigma(|alpha|-l)} <theta>^{|beta|-m} |d^{alpha,beta} a|`
/// using the class annotation carried by the symbol.
pub fn symbol_seminorm(a: &SymbolGrid, alpha: &MultiIndex, beta: &MultiIndex) -> Result<f64> {
    let d = symbol_partial(a, alpha, beta)?;
    let xw = a.class.sigma * (alpha.order() as f64 - a.class.l);
    let tw = beta.order() as f64 - a.class.m;
    let nc = a.cov.len();
    let mut sup: f64 = 0.0;
    for ix in 0..a.base.len() {
        let bi = a.base.unravel(ix);
        if a.base.border_depth(&bi) < BOUNDARY_BAND {
            continue;
        }
        let x = a.base.point(ix);
        let wx = bracket(&x).powf(xw);
        for it in 0..nc {
            let ci = a.cov.unravel(it);
            if a.cov.border_depth(&ci) < BOUNDARY_BAND {
                continue;
            }
            let t = a.cov.point(it);
            sup = sup.max(wx * bracket(&t).powf(tw) * d.data[ix * nc + it].norm());
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ClassMeta;
    use std::f64::consts::PI;

    #[test]
    fn schwartz_seminorm_of_gaussian() {
        let spec = GridSpec::new(1, 8.0, 256).unwrap();
        let f = GridFn::from_fn(spec.clone(), |p| {
            Complex64::new((-PI * p[0] * p[0]).exp(), 0.0)
        });
        // sup <x>^0 |f| = 1 at x = 0
        let s0 = schwartz_seminorm(&f, &MultiIndex(vec![0]), 0.0).unwrap();
        assert!((s0 - 1.0).abs() < 1e-12);
        // sup <x>^4 |f| stays bounded: the weight loses to the decay
        let s4 = schwartz_seminorm(&f, &MultiIndex(vec![0]), 4.0).unwrap();
        assert!(s4 < 2.0, "got {s4}");
        // sup |f'| over the lattice: compare against the exact derivative
        // sampled at the same points (the continuum argmax sits between
        // lattice points, so the continuum sup is not the right target)
        let s1 = schwartz_seminorm(&f, &MultiIndex(vec![1]), 0.0).unwrap();
        let expect = (0..spec.n)
            .map(|i| {
                let x = spec.coord(i);
                (2.0 * PI * x * (-PI * x * x).exp()).abs()
            })
            .fold(0.0f64, f64::max);
        assert!((s1 - expect).abs() < 1e-3, "got {s1} expect {expect}");
    }

    #[test]
    fn symbol_seminorm_tracks_order() {
        // a(x, t) = <t>, first order in the covariable: with m = 1 the
        // (0,0)-seminorm is sup <t>^{-1} <t> = 1
        let base = GridSpec::new(1, 4.0, 32).unwrap();
        let cov = base.dual();
        let a = SymbolGrid::from_fn(
            base,
            cov,
            ClassMeta { sigma: 0.0, l: 0.0, m: 1.0 },
            |_, t| Complex64::new((1.0 + t[0] * t[0]).sqrt(), 0.0),
        )
        .unwrap();
        let s = symbol_seminorm(&a, &MultiIndex(vec![0]), &MultiIndex(vec![0])).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "got {s}");
    }
}
