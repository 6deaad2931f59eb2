//! Operator composition at the kernel level and the symbol products built
//! on it.
//!
//! Two kernel operators compose by a measure-weighted contraction over the
//! middle variable; on the lattice that is a matrix product with the
//! density times the cell volume as quadrature weight. The symbol-level
//! products are defined through this route: quantize both factors, compose
//! the kernels, and read the symbol of the result back off the composed
//! kernel.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::geometry::Density;
use crate::grid::{ClassMeta, KernelGrid, SymbolGrid};
use crate::models::FrameMaps;
use crate::quantize::{kernel_from_symbol, symbol_from_kernel, QuantizationSpec};
use crate::{Error, Result};

/// Quadrature composition `K(x, y) = sum_t K_A(x, t) K_B(t, y) mu(t) h^n`.
pub fn compose_kernels(
    maps: &FrameMaps,
    density: &Density,
    ka: &KernelGrid,
    kb: &KernelGrid,
) -> Result<KernelGrid> {
    if !ka.y.same_shape(&kb.x) {
        return Err(Error::GridMismatch(
            "kernel composition needs the left factor's second lattice to match the right factor's first".into(),
        ));
    }
    let mid = &kb.x;
    let nt = mid.len();
    let cell = mid.spacing().powi(mid.dim as i32);
    let weights: Vec<f64> = (0..nt)
        .map(|it| maps.mu_weight(density, &mid.point(it)) * cell)
        .collect();
    let mut out = KernelGrid::zeros(ka.x.clone(), kb.y.clone())?;
    let ny = kb.y.len();
    out.data
        .par_chunks_mut(ny)
        .enumerate()
        .for_each(|(ix, row)| {
            let arow = ka.row(ix);
            for it in 0..nt {
                let f = arow[it] * weights[it];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, b) in row.iter_mut().zip(kb.row(it)) {
                    *o += f * b;
                }
            }
        });
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoyalMode {
    /// Product in the ordering fixed by the quantization spec.
    Lambda,
    /// Average of the two boundary-ordering products; carries the
    /// involution (a * b)^conj = b^conj * a^conj.
    Symmetrized,
}

pub fn product_class(a: &SymbolGrid, b: &SymbolGrid) -> Result<ClassMeta> {
    if (a.class.sigma - b.class.sigma).abs() > 1e-12 {
        return Err(Error::Config(format!(
            "cannot multiply symbols of different decay type: {} vs {}",
            a.class.sigma, b.class.sigma
        )));
    }
    Ok(ClassMeta {
        sigma: a.class.sigma,
        l: a.class.l + b.class.l,
        m: a.class.m + b.class.m,
    })
}

fn check_same_grids(a: &SymbolGrid, b: &SymbolGrid) -> Result<()> {
    if !a.base.same_shape(&b.base) || !a.cov.same_shape(&b.cov) {
        return Err(Error::GridMismatch(
            "symbol product factors must live on the same lattices".into(),
        ));
    }
    Ok(())
}

fn product_via_kernels(
    spec: &QuantizationSpec,
    a: &SymbolGrid,
    b: &SymbolGrid,
    class: ClassMeta,
) -> Result<SymbolGrid> {
    let ka = kernel_from_symbol(spec, a)?;
    let kb = kernel_from_symbol(spec, b)?;
    let kab = compose_kernels(&spec.maps, &spec.density, &ka, &kb)?;
    symbol_from_kernel(spec, &kab, a.base.clone(), class)
}

/// Symbol of the operator product, computed by the defining route
/// (quantize, compose kernels, extract the symbol).
pub fn moyal_product(
    spec: &QuantizationSpec,
    a: &SymbolGrid,
    b: &SymbolGrid,
    mode: MoyalMode,
) -> Result<SymbolGrid> {
    check_same_grids(a, b)?;
    let class = product_class(a, b)?;
    match mode {
        MoyalMode::Lambda => product_via_kernels(spec, a, b, class),
        MoyalMode::Symmetrized => {
            let left = product_via_kernels(&spec.with_lambda(0.0)?, a, b, class)?;
            let right = product_via_kernels(&spec.with_lambda(1.0)?, a, b, class)?;
            let mut out = left;
            for (o, r) in out.data.iter_mut().zip(&right.data) {
                *o = 0.5 * (*o + r);
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::grid::{GridFn, GridSpec};
    use crate::models::ManifoldModel;
    use crate::quantize::apply_operator;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn euclid(lambda: f64) -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), lambda).unwrap()
    }

    fn lattice(n: usize) -> GridSpec {
        GridSpec::new(1, 6.0, n).unwrap()
    }

    fn random_kernel(spec: &GridSpec, rng: &mut ChaCha8Rng) -> KernelGrid {
        let mut k = KernelGrid::zeros(spec.clone(), spec.clone()).unwrap();
        for v in k.data.iter_mut() {
            *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        k
    }

    fn gaussian_symbol(base: &GridSpec, width: f64) -> SymbolGrid {
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov.clone(), ClassMeta::order_zero(0.0)).unwrap();
        for ix in 0..base.len() {
            let x = base.coord(ix);
            let f = a.fiber_mut(ix);
            for (it, slot) in f.iter_mut().enumerate() {
                let th = cov.coord(it);
                *slot = Complex64::new((-PI * (x * x + th * th) / width).exp(), 0.0);
            }
        }
        a
    }

    #[test]
    fn discrete_delta_kernel_is_the_identity() {
        let maps = euclid(0.0).maps.clone();
        let density = Density::FrameLebesgue(maps.frame.clone());
        let spec = lattice(32);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ka = random_kernel(&spec, &mut rng);
        let h = spec.spacing();
        let mut delta = KernelGrid::zeros(spec.clone(), spec.clone()).unwrap();
        for i in 0..spec.len() {
            delta.data[i * spec.len() + i] = Complex64::new(1.0 / h, 0.0);
        }
        let out = compose_kernels(&maps, &density, &ka, &delta).unwrap();
        assert!(out.rel_l2_error(&ka) < 1e-12);
        let out = compose_kernels(&maps, &density, &delta, &ka).unwrap();
        assert!(out.rel_l2_error(&ka) < 1e-12);
    }

    #[test]
    fn rank_one_gaussians_compose_with_overlap_factor() {
        let maps = euclid(0.0).maps.clone();
        let density = Density::FrameLebesgue(maps.frame.clone());
        let spec = lattice(128);
        let c1 = 0.4;
        let c2 = -0.3;
        let f = |x: f64| (-PI * x * x).exp();
        let mut ka = KernelGrid::zeros(spec.clone(), spec.clone()).unwrap();
        let mut kb = KernelGrid::zeros(spec.clone(), spec.clone()).unwrap();
        for ix in 0..spec.len() {
            for iy in 0..spec.len() {
                let (x, y) = (spec.coord(ix), spec.coord(iy));
                ka.data[ix * spec.len() + iy] = Complex64::new(f(x) * f(y - c1), 0.0);
                kb.data[ix * spec.len() + iy] = Complex64::new(f(x - c2) * f(y), 0.0);
            }
        }
        // int exp(-pi (t-c1)^2 - pi (t-c2)^2) dt = exp(-pi (c1-c2)^2 / 2) / sqrt(2)
        let overlap = (-PI * (c1 - c2) * (c1 - c2) / 2.0).exp() / 2.0f64.sqrt();
        let out = compose_kernels(&maps, &density, &ka, &kb).unwrap();
        let mut expect = KernelGrid::zeros(spec.clone(), spec.clone()).unwrap();
        for ix in 0..spec.len() {
            for iy in 0..spec.len() {
                let (x, y) = (spec.coord(ix), spec.coord(iy));
                expect.data[ix * spec.len() + iy] = Complex64::new(overlap * f(x) * f(y), 0.0);
            }
        }
        let err = out.rel_l2_error(&expect);
        assert!(err < 1e-7, "overlap mismatch {err:.3e}");
    }

    #[test]
    fn kernel_composition_is_associative() {
        let maps = euclid(0.0).maps.clone();
        let density = Density::FrameLebesgue(maps.frame.clone());
        let spec = lattice(24);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let ka = random_kernel(&spec, &mut rng);
        let kb = random_kernel(&spec, &mut rng);
        let kc = random_kernel(&spec, &mut rng);
        let left = compose_kernels(
            &maps,
            &density,
            &compose_kernels(&maps, &density, &ka, &kb).unwrap(),
            &kc,
        )
        .unwrap();
        let right = compose_kernels(
            &maps,
            &density,
            &ka,
            &compose_kernels(&maps, &density, &kb, &kc).unwrap(),
        )
        .unwrap();
        assert!(left.rel_l2_error(&right) < 1e-12);
    }

    #[test]
    fn product_with_zero_symbol_vanishes() {
        let q = euclid(0.0);
        let base = lattice(64);
        let a = gaussian_symbol(&base, 1.0);
        let zero = SymbolGrid::zeros(base.clone(), base.dual(), a.class).unwrap();
        let p = moyal_product(&q, &a, &zero, MoyalMode::Lambda).unwrap();
        assert!(p.max_abs() < 1e-14);
    }

    #[test]
    fn product_is_bilinear() {
        let q = euclid(0.0);
        let base = lattice(64);
        let a1 = gaussian_symbol(&base, 1.0);
        let a2 = gaussian_symbol(&base, 2.0);
        let b = gaussian_symbol(&base, 1.5);
        let alpha = Complex64::new(0.7, -0.3);
        let mut lin = a1.clone();
        for (l, a) in lin.data.iter_mut().zip(&a2.data) {
            *l = alpha * *l + a;
        }
        let combined = moyal_product(&q, &lin, &b, MoyalMode::Lambda).unwrap();
        let p1 = moyal_product(&q, &a1, &b, MoyalMode::Lambda).unwrap();
        let p2 = moyal_product(&q, &a2, &b, MoyalMode::Lambda).unwrap();
        let mut expect = p1;
        for (e, v) in expect.data.iter_mut().zip(&p2.data) {
            *e = alpha * *e + v;
        }
        assert!(combined.rel_l2_error(&expect) < 1e-12);
    }

    #[test]
    fn left_product_composes_operator_actions() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 8.0, 256).unwrap();
        let a = gaussian_symbol(&base, 1.0);
        let b = gaussian_symbol(&base, 2.0);
        let p = moyal_product(&q, &a, &b, MoyalMode::Lambda).unwrap();
        let v = GridFn::from_fn(base.clone(), |x| {
            Complex64::new((-PI * x[0] * x[0]).exp() * (1.0 + 0.3 * x[0]), 0.0)
        });
        let bv = apply_operator(&q, &b, &v).unwrap();
        let abv = apply_operator(&q, &a, &bv).unwrap();
        let pv = apply_operator(&q, &p, &v).unwrap();
        let err = pv.rel_l2_error(&abv);
        assert!(err < 1e-6, "product action mismatch {err:.3e}");
    }

    #[test]
    fn symmetrized_product_involution() {
        let q = euclid(0.5);
        let base = GridSpec::new(1, 8.0, 256).unwrap();
        let mut a = gaussian_symbol(&base, 1.0);
        let cov = base.dual();
        for ix in 0..base.len() {
            let x = base.coord(ix);
            let f = a.fiber_mut(ix);
            for (it, slot) in f.iter_mut().enumerate() {
                let th = cov.coord(it);
                *slot *= Complex64::new(1.0, 0.4 * x - 0.2 * th);
            }
        }
        let b = gaussian_symbol(&base, 1.7);
        let ab = moyal_product(&q, &a, &b, MoyalMode::Symmetrized).unwrap();
        let mut lhs = ab.clone();
        for v in lhs.data.iter_mut() {
            *v = v.conj();
        }
        let mut bc = b.clone();
        for v in bc.data.iter_mut() {
            *v = v.conj();
        }
        let mut ac = a.clone();
        for v in ac.data.iter_mut() {
            *v = v.conj();
        }
        let rhs = moyal_product(&q, &bc, &ac, MoyalMode::Symmetrized).unwrap();
        let err = lhs.rel_l2_error(&rhs);
        assert!(err < 1e-8, "involution defect {err:.3e}");
    }
}
