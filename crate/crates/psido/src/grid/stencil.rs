//! Finite-difference derivatives of lattice data. All stencils are the
//! 4th-order central ones from the geometry layer; near the boundary the
//! stencil center is clamped inward, so the outermost values are one-sided
//! extrapolations and excluded from seminorm suprema.

use num_complex::Complex64;

use super::data::SymbolGrid;
use super::spec::GridSpec;
use crate::geometry::MultiIndex;
use crate::{Error, Result};

pub const GRID_DERIVATIVE_CAP: u32 = 4;

use crate::geometry::diff_stencils as stencils;

/// In-place derivative of order `order` along `axis` of a row-major block.
pub fn apply_stencil_axis(
    data: &mut Vec<Complex64>,
    dims: &[usize],
    axis: usize,
    order: u32,
    spacing: f64,
) {
    if order == 0 {
        return;
    }
    assert!(order <= GRID_DERIVATIVE_CAP);
    let (coeffs, denom) = stencils(order as usize);
    let scale = 1.0 / (denom * spacing.powi(order as i32));
    let n = dims[axis];
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    let stride = strides[axis];
    let outer: usize = dims.iter().product::<usize>() / n;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        let mut rem = o;
        let mut start = 0usize;
        for a in (0..dims.len()).rev() {
            if a == axis {
                continue;
            }
            start += (rem % dims[a]) * strides[a];
            rem /= dims[a];
        }
        for i in 0..n {
            line[i] = data[start + i * stride];
        }
        for i in 0..n {
            // clamp the stencil center so all taps stay on the lattice
            let c = i.clamp(3, n - 4);
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &w) in coeffs.iter().enumerate() {
                if w != 0.0 {
                    acc += line[c + t - 3] * w;
                }
            }
            data[start + i * stride] = acc * scale;
        }
    }
}

/// `d^alpha` of grid-function data over a single lattice.
pub fn grid_partial(data: &[Complex64], spec: &GridSpec, alpha: &MultiIndex) -> Result<Vec<Complex64>> {
    if alpha.dim() != spec.dim {
        return Err(Error::GridMismatch(format!(
            "derivative index dim {} vs grid dim {}",
            alpha.dim(),
            spec.dim
        )));
    }
    if alpha.order() > GRID_DERIVATIVE_CAP {
        return Err(Error::CapExceeded(format!(
            "grid derivatives are limited to total order {GRID_DERIVATIVE_CAP}, got {}",
            alpha.order()
        )));
    }
    let mut out = data.to_vec();
    let dims = spec.dims();
    for (axis, &k) in alpha.0.iter().enumerate() {
        apply_stencil_axis(&mut out, &dims, axis, k, spec.spacing());
    }
    Ok(out)
}

/// `d^alpha_x d^beta_theta` of a symbol, returned on the same lattices.
pub fn symbol_partial(a: &SymbolGrid, alpha: &MultiIndex, beta: &MultiIndex) -> Result<SymbolGrid> {
    if alpha.dim() != a.base.dim || beta.dim() != a.cov.dim {
        return Err(Error::GridMismatch(
            "derivative indices do not match symbol dimensions".into(),
        ));
    }
    if alpha.order() > GRID_DERIVATIVE_CAP || beta.order() > GRID_DERIVATIVE_CAP {
        return Err(Error::CapExceeded(format!(
            "grid derivatives are limited to total order {GRID_DERIVATIVE_CAP} per block, got ({}, {})",
            alpha.order(),
            beta.order()
        )));
    }
    let mut dims = a.base.dims();
    dims.extend(a.cov.dims());
    let mut data = a.data.clone();
    for (axis, &k) in alpha.0.iter().enumerate() {
        apply_stencil_axis(&mut data, &dims, axis, k, a.base.spacing());
    }
    for (j, &k) in beta.0.iter().enumerate() {
        apply_stencil_axis(&mut data, &dims, a.base.dim + j, k, a.cov.spacing());
    }
    Ok(SymbolGrid {
        base: a.base.clone(),
        cov: a.cov.clone(),
        class: a.class,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ClassMeta;

    #[test]
    fn polynomial_derivatives_are_exact_inside() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let data: Vec<Complex64> = (0..spec.n)
            .map(|i| {
                let x = spec.coord(i);
                Complex64::new(x * x * x, 0.0)
            })
            .collect();
        let d2 = grid_partial(&data, &spec, &MultiIndex(vec![2])).unwrap();
        for i in 4..spec.n - 4 {
            let x = spec.coord(i);
            assert!((d2[i].re - 6.0 * x).abs() < 1e-9, "at {x}");
        }
    }

    #[test]
    fn mixed_symbol_derivative_matches_analytic() {
        let base = GridSpec::new(1, 3.0, 96).unwrap();
        let cov = base.dual();
        let a = SymbolGrid::from_fn(
            base.clone(),
            cov.clone(),
            ClassMeta::order_zero(0.0),
            |x, t| Complex64::new((x[0]).sin() * (0.7 * t[0]).cos(), 0.0),
        )
        .unwrap();
        let d = symbol_partial(&a, &MultiIndex(vec![1]), &MultiIndex(vec![2])).unwrap();
        let mut worst: f64 = 0.0;
        for ix in 8..base.n - 8 {
            for it in 8..cov.n - 8 {
                let x = base.coord(ix);
                let t = cov.coord(it);
                let exact = x.cos() * (-0.49) * (0.7 * t).cos();
                worst = worst.max((d.data[d.index(ix, it)].re - exact).abs());
            }
        }
        assert!(worst < 1e-5, "mixed derivative error {worst}");
    }

    #[test]
    fn order_cap_enforced() {
        let spec = GridSpec::new(1, 4.0, 16).unwrap();
        let data = vec![Complex64::new(0.0, 0.0); 16];
        assert!(matches!(
            grid_partial(&data, &spec, &MultiIndex(vec![5])),
            Err(Error::CapExceeded(_))
        ));
    }
}
