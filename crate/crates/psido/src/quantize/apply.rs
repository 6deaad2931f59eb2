//! Operator application. The left ordering gets a direct route: gather the
//! pulled-back input on a span-2 difference lattice, fold it to a dual-lattice
//! transform and contract against the symbol fiber. For affine frames the
//! gather is an exact index shift, so the identity symbol reproduces the
//! input bit-for-bit up to rounding. Other orderings go through the kernel.

use num_complex::Complex64;
use rayon::prelude::*;

use super::kernel::kernel_from_symbol_on;
use super::QuantizationSpec;
use crate::grid::{forward_from_span2, grid_forward, trig_upsample_axis, GridFn, GridSpec, KernelGrid, SymbolGrid};
use crate::{Error, Result};

/// Fraction of the dual lattice counted as its outer band.
const NYQUIST_BAND: f64 = 0.1;
/// Relative spectral mass allowed in the outer band.
const NYQUIST_TOL: f64 = 1e-4;

/// Rejects inputs whose spectrum reaches the edge of the resolvable band:
/// everything downstream assumes the lattice resolves the data.
pub fn nyquist_check(v: &GridFn) -> Result<()> {
    let hat = grid_forward(v);
    let peak = hat.max_abs();
    if peak == 0.0 {
        return Ok(());
    }
    let band = ((hat.spec.n as f64 * NYQUIST_BAND) as usize).max(1);
    let mut worst: f64 = 0.0;
    for i in 0..hat.spec.len() {
        let idx = hat.spec.unravel(i);
        if hat.spec.border_depth(&idx) < band {
            worst = worst.max(hat.data[i].norm());
        }
    }
    if worst / peak > NYQUIST_TOL {
        return Err(Error::Resolution(format!(
            "input spectrum carries {:.2e} of its peak near the Nyquist edge; \
             refine the lattice",
            worst / peak
        )));
    }
    Ok(())
}

/// Applies the operator quantized from `a` to the lattice function `v`.
pub fn apply_operator(q: &QuantizationSpec, a: &SymbolGrid, v: &GridFn) -> Result<GridFn> {
    a.require_dual_pair()?;
    if !v.spec.same_shape(&a.base) {
        return Err(Error::GridMismatch(
            "input lattice does not match the symbol base lattice".into(),
        ));
    }
    if a.base.dim != q.dim() {
        return Err(Error::GridMismatch(format!(
            "symbol dim {} vs model dim {}",
            a.base.dim,
            q.dim()
        )));
    }
    nyquist_check(v)?;
    if q.lambda.abs() < 1e-12 {
        return apply_left(q, a, v);
    }
    // kernel route; interior orderings in one dimension get the half-spacing
    // kernel lattice, everything else stays on the base lattice to keep the
    // kernel quadratic in lattice size rather than quartic
    let interior = (q.lambda - 1.0).abs() > 1e-12;
    let refine = if interior && a.base.dim == 1 { 2 } else { 1 };
    let k = kernel_from_symbol_on(q, a, refine)?;
    if refine == 1 {
        return apply_kernel(q, &k, v);
    }
    let mut dims = v.spec.dims();
    let mut data = v.data.clone();
    for axis in 0..v.spec.dim {
        data = trig_upsample_axis(&data, &dims, axis, refine);
        dims[axis] *= refine;
    }
    let fine = GridFn {
        spec: v.spec.refine(refine),
        data,
    };
    let out_fine = apply_kernel(q, &k, &fine)?;
    // base lattice points sit at stride `refine` in the refined lattice
    let mut out = GridFn::zeros(v.spec.clone());
    for i in 0..v.spec.len() {
        let idx = v.spec.unravel(i);
        let fine_idx: Vec<usize> = idx.iter().map(|&j| j * refine).collect();
        out.data[i] = out_fine.data[out_fine.spec.index(&fine_idx)];
    }
    Ok(out)
}

/// Quadrature of the kernel against `v` with the density weight:
/// `out(x) = h^dim sum_y K(x, y) v(y) mu(y)`.
pub fn apply_kernel(q: &QuantizationSpec, k: &KernelGrid, v: &GridFn) -> Result<GridFn> {
    if !v.spec.same_shape(&k.y) {
        return Err(Error::GridMismatch(
            "input lattice does not match the kernel's second slot".into(),
        ));
    }
    let ny = k.y.len();
    let hy = k.y.spacing().powi(k.y.dim as i32);
    let weights: Vec<f64> = (0..ny)
        .map(|iy| q.maps.mu_weight(&q.density, &k.y.point(iy)) * hy)
        .collect();
    let data: Vec<Complex64> = (0..k.x.len())
        .into_par_iter()
        .map(|ix| {
            let row = k.row(ix);
            let mut acc = Complex64::new(0.0, 0.0);
            for ((kv, vv), w) in row.iter().zip(&v.data).zip(&weights) {
                acc += kv * vv * w;
            }
            acc
        })
        .collect();
    Ok(GridFn {
        spec: k.x.clone(),
        data,
    })
}

fn apply_left(q: &QuantizationSpec, a: &SymbolGrid, v: &GridFn) -> Result<GridFn> {
    let base = &a.base;
    let dim = base.dim;
    let n = base.n;
    let h = base.spacing();
    let s_theta = a.cov.spacing().powi(dim as i32);
    // difference lattice spanning twice the box at the base spacing
    let span = GridSpec {
        dim,
        extent: 2.0 * base.extent,
        n: 2 * n,
    };
    let nz = span.len();
    let affine = q.maps.is_affine();
    let data: Vec<Result<Complex64>> = (0..base.len())
        .into_par_iter()
        .map(|ixf| {
            let x = base.point(ixf);
            let xi = base.unravel(ixf);
            let mut w = vec![Complex64::new(0.0, 0.0); nz];
            if affine {
                // psi(x, -zeta) = x - zeta lands back on the lattice
                for (jz, slot) in w.iter_mut().enumerate() {
                    let jj = span.unravel(jz);
                    let mut flat = 0usize;
                    let mut ok = true;
                    for ax in 0..dim {
                        let m = xi[ax] as i64 - jj[ax] as i64 + n as i64;
                        if m < 0 || m >= n as i64 {
                            ok = false;
                            break;
                        }
                        flat = flat * n + m as usize;
                    }
                    if ok {
                        *slot = v.data[flat];
                    }
                }
            } else {
                for (jz, slot) in w.iter_mut().enumerate() {
                    let zeta = span.point(jz);
                    let neg: Vec<f64> = zeta.iter().map(|c| -c).collect();
                    let y = q.maps.psi(&x, &neg);
                    *slot = v.sample(&y);
                }
            }
            let fw = forward_from_span2(&w, n, dim, h);
            let mut acc = Complex64::new(0.0, 0.0);
            for (av, tv) in a.fiber(ixf).iter().zip(&fw) {
                acc += av * tv;
            }
            Ok(acc * s_theta)
        })
        .collect();
    let mut out = GridFn::zeros(base.clone());
    for (slot, val) in out.data.iter_mut().zip(data) {
        *slot = val?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Density, Frame};
    use crate::grid::ClassMeta;
    use crate::models::ManifoldModel;
    use std::f64::consts::PI;

    fn euclid(lambda: f64) -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), lambda).unwrap()
    }

    fn gaussian(spec: &GridSpec) -> GridFn {
        GridFn::from_fn(spec.clone(), |x| {
            let q: f64 = x.iter().map(|c| c * c).sum();
            Complex64::new((-PI * q).exp(), 0.0)
        })
    }

    fn constant_symbol(base: &GridSpec) -> SymbolGrid {
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov, ClassMeta::order_zero(0.0)).unwrap();
        for v in a.data.iter_mut() {
            *v = Complex64::new(1.0, 0.0);
        }
        a
    }

    #[test]
    fn identity_symbol_reproduces_input_left() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 6.0, 64).unwrap();
        let a = constant_symbol(&base);
        let v = gaussian(&base);
        let out = apply_operator(&q, &a, &v).unwrap();
        let err = out.rel_l2_error(&v);
        assert!(err < 1e-12, "identity defect {err:.3e}");
    }

    #[test]
    fn identity_symbol_reproduces_input_kernel_routes() {
        for lambda in [0.5, 1.0] {
            let q = euclid(lambda);
            let base = GridSpec::new(1, 6.0, 64).unwrap();
            let a = constant_symbol(&base);
            let v = gaussian(&base);
            let out = apply_operator(&q, &a, &v).unwrap();
            let err = out.rel_l2_error(&v);
            assert!(err < 1e-10, "lambda {lambda}: identity defect {err:.3e}");
        }
    }

    #[test]
    fn linear_covariable_symbol_differentiates() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 6.0, 128).unwrap();
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov.clone(), ClassMeta { sigma: 0.0, l: 0.0, m: 1.0 })
                .unwrap();
        for ix in 0..base.len() {
            let f = a.fiber_mut(ix);
            for (it, slot) in f.iter_mut().enumerate() {
                *slot = Complex64::new(0.0, 2.0 * PI * cov.coord(it));
            }
        }
        let v = gaussian(&base);
        let out = apply_operator(&q, &a, &v).unwrap();
        let exact = GridFn::from_fn(base.clone(), |x| {
            Complex64::new(-2.0 * PI * x[0] * (-PI * x[0] * x[0]).exp(), 0.0)
        });
        let err = out.rel_l2_error(&exact);
        assert!(err < 1e-10, "spectral derivative error {err:.3e}");
    }

    #[test]
    fn identity_in_two_dimensions() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let q = QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), 0.0).unwrap();
        let base = GridSpec::new(2, 4.0, 40).unwrap();
        let a = constant_symbol(&base);
        let v = gaussian(&base);
        let out = apply_operator(&q, &a, &v).unwrap();
        let err = out.rel_l2_error(&v);
        assert!(err < 1e-12, "2-d identity defect {err:.3e}");
    }

    #[test]
    fn nyquist_guard_rejects_edge_spectrum() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 4.0, 32).unwrap();
        let a = constant_symbol(&base);
        // oscillation at 95% of the resolvable band
        let f_osc = 0.95 * base.dual().extent;
        let v = GridFn::from_fn(base.clone(), |x| {
            Complex64::new((2.0 * PI * f_osc * x[0]).cos(), 0.0)
        });
        match apply_operator(&q, &a, &v) {
            Err(crate::Error::Resolution(_)) => {}
            other => panic!("expected a resolution error, got {other:?}"),
        }
    }
}
