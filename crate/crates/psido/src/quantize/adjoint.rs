//! Formal adjoints in the density-weighted inner product. On the kernel
//! side the adjoint is the conjugate transpose; the symbol-side adjoint
//! rides on the kernel passes.

use super::kernel::{kernel_from_symbol, symbol_from_kernel};
use super::QuantizationSpec;
use crate::grid::{KernelGrid, SymbolGrid};
use crate::Result;

/// `K*(x, y) = conj K(y, x)`; the density weights sit symmetrically in the
/// pairing, so no extra factor appears.
pub fn kernel_adjoint(k: &KernelGrid) -> Result<KernelGrid> {
    let mut out = KernelGrid::zeros(k.y.clone(), k.x.clone())?;
    let nx = k.x.len();
    let ny = k.y.len();
    for ix in 0..nx {
        for iy in 0..ny {
            out.data[iy * nx + ix] = k.data[ix * ny + iy].conj();
        }
    }
    Ok(out)
}

/// Symbol of the adjoint operator at the same ordering parameter.
pub fn adjoint_symbol(q: &QuantizationSpec, a: &SymbolGrid) -> Result<SymbolGrid> {
    let k = kernel_from_symbol(q, a)?;
    let kd = kernel_adjoint(&k)?;
    symbol_from_kernel(q, &kd, a.base.clone(), a.class)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Density, Frame};
    use crate::grid::{ClassMeta, GridSpec};
    use crate::models::ManifoldModel;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn euclid(lambda: f64) -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), lambda).unwrap()
    }

    fn complex_symbol(base: &GridSpec) -> SymbolGrid {
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov.clone(), ClassMeta::order_zero(0.0)).unwrap();
        for ix in 0..base.len() {
            let x = base.coord(ix);
            let fiber = a.fiber_mut(ix);
            for (it, slot) in fiber.iter_mut().enumerate() {
                let th = cov.coord(it);
                let g = (-PI * (x * x + th * th)).exp();
                *slot = Complex64::new(g, 0.3 * x * g);
            }
        }
        a
    }

    #[test]
    fn adjoint_is_an_involution() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 6.0, 64).unwrap();
        let a = complex_symbol(&base);
        let once = adjoint_symbol(&q, &a).unwrap();
        let twice = adjoint_symbol(&q, &once).unwrap();
        let err = twice.rel_l2_error(&a);
        assert!(err < 1e-9, "double adjoint defect {err:.3e}");
    }

    #[test]
    fn adjoint_swaps_to_opposite_ordering() {
        // sigma_0(A*) = conj sigma_1(A) for the same operator A
        let q0 = euclid(0.0);
        let q1 = euclid(1.0);
        let base = GridSpec::new(1, 6.0, 64).unwrap();
        let a = complex_symbol(&base);
        let k = kernel_from_symbol(&q0, &a).unwrap();
        let adj = adjoint_symbol(&q0, &a).unwrap();
        let mut opposite = symbol_from_kernel(&q1, &k, base.clone(), a.class).unwrap();
        for v in opposite.data.iter_mut() {
            *v = v.conj();
        }
        let err = adj.rel_l2_error(&opposite);
        assert!(err < 1e-9, "adjoint/ordering mismatch {err:.3e}");
    }
}
