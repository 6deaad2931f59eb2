//! Symbol/kernel passes. On affine frames with the ordering parameter at
//! 0, 1/2 or 1 the midpoint and difference of every kernel lattice pair
//! land on (a refinement of) the symbol lattices, so the oscillatory
//! integral collapses to exact lattice Fourier sums. Everything else goes
//! through per-pair quadrature with cubic interpolation.

use num_complex::Complex64;
use rayon::prelude::*;

use super::QuantizationSpec;
use crate::grid::{
    fiber_block_transform, inverse_on_refined_lattice_nd, trig_upsample_axis, ClassMeta, GridSpec,
    KernelGrid, SymbolGrid,
};
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum OrderingKind {
    Left,   // lambda = 0: midpoint is x
    Middle, // lambda = 1/2: midpoint is (x+y)/2
    Right,  // lambda = 1: midpoint is y
    Other(f64),
}

fn classify(lambda: f64) -> OrderingKind {
    if lambda.abs() < 1e-12 {
        OrderingKind::Left
    } else if (lambda - 1.0).abs() < 1e-12 {
        OrderingKind::Right
    } else if (lambda - 0.5).abs() < 1e-12 {
        OrderingKind::Middle
    } else {
        OrderingKind::Other(lambda)
    }
}

/// Flags symbols that do not decay by the box edge: lattice Fourier sums
/// silently periodize whatever mass reaches the boundary.
pub fn check_boundary_decay(a: &SymbolGrid) -> Option<String> {
    let peak = a.max_abs();
    if peak == 0.0 {
        return None;
    }
    let band = |spec: &GridSpec| (spec.n / 10).max(1);
    let bx = band(&a.base);
    let bt = band(&a.cov);
    let nc = a.cov.len();
    let mut worst: f64 = 0.0;
    for ix in 0..a.base.len() {
        let xi = a.base.unravel(ix);
        let x_edge = a.base.border_depth(&xi) < bx;
        for it in 0..nc {
            let ti = a.cov.unravel(it);
            if x_edge || a.cov.border_depth(&ti) < bt {
                worst = worst.max(a.data[ix * nc + it].norm());
            }
        }
    }
    let rel = worst / peak;
    if rel > 1e-4 {
        Some(format!(
            "symbol magnitude near the lattice boundary is {rel:.2e} of its peak; \
             enlarge the box or the covariable extent"
        ))
    } else {
        None
    }
}

/// Kernel of the quantized operator on the default kernel lattice: the
/// base lattice for boundary orderings, its half-spacing refinement for
/// interior ones.
pub fn kernel_from_symbol(q: &QuantizationSpec, a: &SymbolGrid) -> Result<KernelGrid> {
    let refine = match classify(q.lambda) {
        OrderingKind::Left | OrderingKind::Right => 1,
        _ => 2,
    };
    kernel_from_symbol_on(q, a, refine)
}

/// Kernel on a caller-chosen lattice refinement (1 or 2 in each axis of
/// both kernel slots).
pub fn kernel_from_symbol_on(
    q: &QuantizationSpec,
    a: &SymbolGrid,
    refine: usize,
) -> Result<KernelGrid> {
    if !(1..=2).contains(&refine) {
        return Err(Error::Config(format!(
            "kernel lattice refinement must be 1 or 2, got {refine}"
        )));
    }
    a.require_dual_pair()?;
    q.maps.ordering_allowed(q.lambda)?;
    if a.base.dim != q.dim() {
        return Err(Error::GridMismatch(format!(
            "symbol dim {} vs model dim {}",
            a.base.dim,
            q.dim()
        )));
    }
    let kind = classify(q.lambda);
    let fast = q.maps.is_affine() && !matches!(kind, OrderingKind::Other(_));
    if fast {
        affine_fast_kernel(q, a, refine, kind)
    } else {
        generic_kernel(q, a, refine)
    }
}

/// Trigonometric upsampling of the base axes by `factor`, keeping the
/// x-major layout (covariable fibers stay contiguous).
fn upsample_base(a: &SymbolGrid, factor: usize) -> (Vec<Complex64>, usize) {
    let dim = a.base.dim;
    if factor == 1 {
        return (a.data.clone(), a.base.n);
    }
    let mut dims: Vec<usize> = a.base.dims();
    dims.extend(a.cov.dims());
    let mut data = a.data.clone();
    for axis in 0..dim {
        data = trig_upsample_axis(&data, &dims, axis, factor);
        dims[axis] *= factor;
    }
    (data, a.base.n * factor)
}

fn affine_fast_kernel(
    q: &QuantizationSpec,
    a: &SymbolGrid,
    refine: usize,
    kind: OrderingKind,
) -> Result<KernelGrid> {
    let dim = a.base.dim;
    let n = a.base.n;
    let l = a.base.extent;
    let kspec = a.base.refine(refine);
    let kn = kspec.n; // refine * n per axis
    let nk = kspec.len();
    let nf = a.cov.len();
    let mid = matches!(kind, OrderingKind::Middle);
    // midpoint lattice refinement: kernel pairs have midpoints on the
    // kernel lattice itself (boundary orderings) or its half-spacing
    // refinement (middle ordering)
    let up = if mid { 2 * refine } else { refine };
    let (a_up, un) = upsample_base(a, up);
    let m_lattice = GridSpec { dim, extent: l, n: un };
    // density weights, identically 1 in the trivial case
    let trivial = q.maps.mu_lambda_is_trivial(&q.density)
        || (q.maps.is_affine()
            && matches!(q.density, crate::geometry::Density::Riemannian)
            && q.maps.model.is_flat_underlying());
    let mu_k: Vec<f64> = if trivial {
        Vec::new()
    } else {
        (0..nk)
            .map(|i| q.maps.mu_weight(&q.density, &kspec.point(i)))
            .collect()
    };
    let mu_m: Vec<f64> = if trivial {
        Vec::new()
    } else {
        (0..m_lattice.len())
            .map(|i| q.maps.mu_weight(&q.density, &m_lattice.point(i)))
            .collect()
    };
    let mut k = KernelGrid::zeros(kspec.clone(), kspec.clone())?;
    let m_total = 2 * refine * n; // difference-lattice points per axis
    let offset = refine as i64 * n as i64; // index shift for zero difference

    match kind {
        OrderingKind::Left | OrderingKind::Right => {
            // midpoint is the row (Left) or column (Right) point; for Right
            // we fill a transposed buffer row-wise and flip at the end
            let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(nk);
            (0..nk)
                .into_par_iter()
                .map(|im| {
                    let fiber = &a_up[im * nf..(im + 1) * nf];
                    let g = inverse_on_refined_lattice_nd(fiber, n, l, refine, 2, dim);
                    let mi = kspec.unravel(im);
                    let mut row = vec![Complex64::new(0.0, 0.0); nk];
                    for (io, slot) in row.iter_mut().enumerate() {
                        let oi = kspec.unravel(io);
                        // difference x - y per axis; row index is x for
                        // Left and y for Right
                        let mut g_flat = 0usize;
                        let mut ok = true;
                        for ax in 0..dim {
                            let d = match kind {
                                OrderingKind::Left => mi[ax] as i64 - oi[ax] as i64,
                                _ => oi[ax] as i64 - mi[ax] as i64,
                            } + offset;
                            if d < 0 || d >= m_total as i64 {
                                ok = false;
                                break;
                            }
                            g_flat = g_flat * m_total + d as usize;
                        }
                        if !ok {
                            continue;
                        }
                        let mut v = g[g_flat];
                        if !trivial {
                            // mu(m) / (mu(x) mu(y)) with m equal to the row point
                            v *= mu_m[im] / (mu_k[im] * mu_k[io]);
                        }
                        *slot = v;
                    }
                    row
                })
                .collect_into_vec(&mut rows);
            if matches!(kind, OrderingKind::Left) {
                for (ix, row) in rows.into_iter().enumerate() {
                    k.data[ix * nk..(ix + 1) * nk].copy_from_slice(&row);
                }
            } else {
                for (iy, row) in rows.iter().enumerate() {
                    for (ix, v) in row.iter().enumerate() {
                        k.data[ix * nk + iy] = *v;
                    }
                }
            }
        }
        OrderingKind::Middle => {
            // iterate over midpoint slots s = ix + iy (per axis) on the
            // doubly refined lattice; batched so the entry buffers never
            // hold more than a slice of the kernel at once
            let s_max = 2 * kn - 1; // per-axis midpoint slots actually hit
            let total_s = s_max.pow(dim as u32);
            let batch = 256;
            let mut start = 0usize;
            while start < total_s {
                let end = (start + batch).min(total_s);
                let results: Vec<Vec<(usize, Complex64)>> = (start..end)
                    .into_par_iter()
                    .map(|fs| {
                        // unravel fs over [s_max; dim]
                        let mut s = vec![0usize; dim];
                        let mut rem = fs;
                        for ax in (0..dim).rev() {
                            s[ax] = rem % s_max;
                            rem /= s_max;
                        }
                        let im = s.iter().fold(0usize, |acc, &si| acc * un + si);
                        let fiber = &a_up[im * nf..(im + 1) * nf];
                        let g = inverse_on_refined_lattice_nd(fiber, n, l, refine, 2, dim);
                        let mut entries = Vec::new();
                        // all (ix, iy) with ix + iy = s per axis
                        let mut ranges = Vec::with_capacity(dim);
                        for ax in 0..dim {
                            let lo = s[ax].saturating_sub(kn - 1);
                            let hi = s[ax].min(kn - 1);
                            if lo > hi {
                                return entries;
                            }
                            ranges.push((lo, hi));
                        }
                        let mut ix_idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                        loop {
                            let mut ix_flat = 0usize;
                            let mut iy_flat = 0usize;
                            let mut g_flat = 0usize;
                            for ax in 0..dim {
                                let ix = ix_idx[ax];
                                let iy = s[ax] - ix;
                                ix_flat = ix_flat * kn + ix;
                                iy_flat = iy_flat * kn + iy;
                                let d = ix as i64 - iy as i64 + offset;
                                g_flat = g_flat * m_total + d as usize;
                            }
                            let mut v = g[g_flat];
                            if !trivial {
                                v *= mu_m[im] / (mu_k[ix_flat] * mu_k[iy_flat]);
                            }
                            entries.push((ix_flat * nk + iy_flat, v));
                            // advance the multi-counter
                            let mut ax = dim;
                            loop {
                                if ax == 0 {
                                    return entries;
                                }
                                ax -= 1;
                                if ix_idx[ax] < ranges[ax].1 {
                                    ix_idx[ax] += 1;
                                    for later in ax + 1..dim {
                                        ix_idx[later] = ranges[later].0;
                                    }
                                    break;
                                }
                            }
                        }
                    })
                    .collect();
                for entries in results {
                    for (flat, v) in entries {
                        k.data[flat] = v;
                    }
                }
                start = end;
            }
        }
        OrderingKind::Other(_) => unreachable!(),
    }
    Ok(k)
}

/// Per-pair quadrature: interpolate the symbol at the pair's midpoint and
/// sum the covariable phase directly. Meant for curved frames at modest
/// lattice sizes.
fn generic_kernel(q: &QuantizationSpec, a: &SymbolGrid, refine: usize) -> Result<KernelGrid> {
    let dim = a.base.dim;
    let kspec = a.base.refine(refine);
    let nk = kspec.len();
    let s_theta = a.cov.spacing();
    let mut k = KernelGrid::zeros(kspec.clone(), kspec.clone())?;
    let rows: Vec<Result<Vec<Complex64>>> = (0..nk)
        .into_par_iter()
        .map(|ix| {
            let x = kspec.point(ix);
            let mut row = vec![Complex64::new(0.0, 0.0); nk];
            let mut tw: Vec<Vec<Complex64>> = vec![Vec::new(); dim];
            for (iy, slot) in row.iter_mut().enumerate() {
                let y = kspec.point(iy);
                let (m, xi) = q.maps.phi_lambda_inv(q.lambda, &x, &y)?;
                if m.iter().any(|c| c.abs() > a.base.extent) {
                    continue; // midpoint out of the sampled box
                }
                // sum_k a(m, theta_k) e^{2 pi i <theta_k, xi>} s_theta^dim
                // with the phase factored into per-axis tables
                let fib = a.interp_fiber(&m);
                for (ax, t) in tw.iter_mut().enumerate() {
                    t.clear();
                    for k in 0..a.cov.n {
                        let ph = 2.0 * std::f64::consts::PI * a.cov.coord(k) * xi[ax];
                        t.push(Complex64::new(ph.cos(), ph.sin()));
                    }
                }
                let mut acc = Complex64::new(0.0, 0.0);
                if dim == 1 {
                    for (k, v) in fib.iter().enumerate() {
                        acc += v * tw[0][k];
                    }
                } else {
                    let cn = a.cov.n;
                    for k1 in 0..cn {
                        let mut inner = Complex64::new(0.0, 0.0);
                        for (k2, v) in fib[k1 * cn..(k1 + 1) * cn].iter().enumerate() {
                            inner += v * tw[1][k2];
                        }
                        acc += inner * tw[0][k1];
                    }
                }
                acc *= s_theta.powi(dim as i32);
                let mu_l = q.maps.mu_lambda(&q.density, q.lambda, &x, &y)?;
                let mu_m = q.maps.mu_weight(&q.density, &m);
                *slot = acc / (mu_l * mu_m);
            }
            Ok(row)
        })
        .collect();
    for (ix, row) in rows.into_iter().enumerate() {
        let row = row?;
        k.data[ix * nk..(ix + 1) * nk].copy_from_slice(&row);
    }
    Ok(k)
}

/// Recover the symbol on `base` (covariable lattice: its dual) from a
/// kernel: weight the kernel along the quantization curve through each
/// base point and take the fiber transform of the result.
///
/// Pairs leaving the kernel box are treated as zero, so the recovery error
/// scales with the symbol's magnitude at the covariable boundary (the
/// quantity `check_boundary_decay` bounds), not with machine epsilon.
pub fn symbol_from_kernel(
    q: &QuantizationSpec,
    k: &KernelGrid,
    base: GridSpec,
    class: ClassMeta,
) -> Result<SymbolGrid> {
    q.maps.ordering_allowed(q.lambda)?;
    if base.dim != q.dim() || k.x.dim != base.dim {
        return Err(Error::GridMismatch(
            "kernel/base dimensions do not match the model".into(),
        ));
    }
    let cov = base.dual();
    let mut out = SymbolGrid::zeros(base.clone(), cov, class)?;
    let dim = base.dim;
    let h = base.spacing();
    let zeta_spec = base.clone(); // difference lattice shares the base shape
    let nz = zeta_spec.len();
    let dims = zeta_spec.dims();
    let trivial = q.maps.mu_lambda_is_trivial(&q.density);
    // for affine boundary orderings the quotient reduces to a ratio of
    // weights at span-2 lattice points; tabulating them once replaces
    // millions of chart evaluations
    let kind = classify(q.lambda);
    let boundary_affine =
        q.maps.is_affine() && matches!(kind, OrderingKind::Left | OrderingKind::Right);
    let mu_span: Vec<f64> = if trivial || !boundary_affine {
        Vec::new()
    } else {
        let span = GridSpec {
            dim,
            extent: 2.0 * base.extent,
            n: 2 * base.n,
        };
        (0..span.len())
            .map(|i| q.maps.mu_weight(&q.density, &span.point(i)))
            .collect()
    };
    let n = base.n;
    let fibers: Vec<Result<Vec<Complex64>>> = (0..base.len())
        .into_par_iter()
        .map(|ixf| {
            let x = base.point(ixf);
            let xi = base.unravel(ixf);
            let mu_x = if trivial {
                1.0
            } else {
                q.maps.mu_weight(&q.density, &x)
            };
            let mut fiber = vec![Complex64::new(0.0, 0.0); nz];
            for (iz, slot) in fiber.iter_mut().enumerate() {
                let zeta = zeta_spec.point(iz);
                let (xl, yr) = q.maps.phi_lambda(q.lambda, &x, &zeta)?;
                let kv = match k.lattice_value(&xl, &yr, 1e-9) {
                    Some(v) => v,
                    None => k.sample(&xl, &yr),
                };
                if kv.norm_sqr() == 0.0 {
                    continue;
                }
                let mu_l = if trivial {
                    1.0
                } else if boundary_affine {
                    // mu(x -+ zeta) / mu(x), read off the span-2 table
                    let zi = zeta_spec.unravel(iz);
                    let mut flat = 0usize;
                    for ax in 0..dim {
                        let m = match kind {
                            OrderingKind::Left => xi[ax] + n - zi[ax],
                            _ => xi[ax] + zi[ax],
                        };
                        flat = flat * 2 * n + m;
                    }
                    mu_span[flat] / mu_x
                } else {
                    q.maps.mu_lambda_from_center(&q.density, q.lambda, &x, &zeta)?
                };
                *slot = kv * mu_l;
            }
            // forward fiber transform with the mu(x) prefactor
            fiber_block_transform(&mut fiber, &dims, true, h);
            for v in fiber.iter_mut() {
                *v *= mu_x;
            }
            Ok(fiber)
        })
        .collect();
    for (ixf, fiber) in fibers.into_iter().enumerate() {
        out.fiber_mut(ixf).copy_from_slice(&fiber?);
    }
    Ok(out)
}
