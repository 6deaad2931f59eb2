//! Discrete realizations of the fiber Fourier transform with the
//! `e^{-2 pi i <theta, xi>}` convention. On the lattice `xi_j = -L + j h`
//! with dual `theta_k = (k - n/2)/(2L)`, the transform factorizes as a
//! plain FFT conjugated by alternating signs:
//!
//!   sum_j e^{-2 pi i theta_k xi_j} a_j
//!     = (-1)^{k-n/2} sum_j [(-1)^j a_j] e^{-2 pi i jk/n}.
//!
//! With trapezoid weights (spacing * sum) the inverse composed with the
//! forward is the identity exactly, not merely up to discretization.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::data::{GridFn, SymbolGrid};
use crate::geometry::Density;
use crate::models::FrameMaps;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FourierDirection {
    Forward,
    Inverse,
}

fn twiddled_line(line: &mut [Complex64], fft: &Arc<dyn Fft<f64>>, forward: bool, scale: f64) {
    let n = line.len();
    let half = n / 2;
    if forward {
        for (j, v) in line.iter_mut().enumerate() {
            if j % 2 == 1 {
                *v = -*v;
            }
        }
        fft.process(line);
        for (k, v) in line.iter_mut().enumerate() {
            let sgn = if (k + half) % 2 == 0 { scale } else { -scale };
            *v *= sgn;
        }
    } else {
        for (k, v) in line.iter_mut().enumerate() {
            if (k + half) % 2 == 1 {
                *v = -*v;
            }
        }
        fft.process(line);
        for (j, v) in line.iter_mut().enumerate() {
            let sgn = if j % 2 == 0 { scale } else { -scale };
            *v *= sgn;
        }
    }
}

/// Row-major strides for `dims`.
fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * dims[a + 1];
    }
    s
}

/// Apply the twiddled transform along one axis of a row-major block.
fn transform_axis(
    data: &mut [Complex64],
    dims: &[usize],
    axis: usize,
    forward: bool,
    scale: f64,
) {
    let n = dims[axis];
    let mut planner = FftPlanner::new();
    let fft = if forward {
        planner.plan_fft_forward(n)
    } else {
        planner.plan_fft_inverse(n)
    };
    let strides = strides_of(dims);
    let stride = strides[axis];
    let outer: usize = dims.iter().product::<usize>() / n;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        // decompose o over the remaining axes to find the line start
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
        twiddled_line(&mut line, &fft, forward, scale);
        for i in 0..n {
            data[start + i * stride] = line[i];
        }
    }
}

/// Forward transform of a grid function: values on the dual lattice of
/// `v.spec`, approximating `int e^{-2 pi i <theta, x>} v(x) dx`.
pub fn grid_forward(v: &GridFn) -> GridFn {
    let mut data = v.data.clone();
    let dims = v.spec.dims();
    let h = v.spec.spacing();
    for a in 0..v.spec.dim {
        transform_axis(&mut data, &dims, a, true, h);
    }
    GridFn { spec: v.spec.dual(), data }
}

/// Inverse transform: exact two-sided inverse of [`grid_forward`].
pub fn grid_inverse(w: &GridFn) -> GridFn {
    let mut data = w.data.clone();
    let dims = w.spec.dims();
    let s = w.spec.spacing();
    for a in 0..w.spec.dim {
        transform_axis(&mut data, &dims, a, false, s);
    }
    GridFn { spec: w.spec.dual(), data }
}

/// Fiber Fourier transform of a symbol: transforms each covariable fiber
/// and multiplies by the frame density weight (forward) or its reciprocal
/// (inverse). The output covariable lattice is the dual of the input one.
pub fn fiber_fourier(
    a: &SymbolGrid,
    maps: &FrameMaps,
    density: &Density,
    dir: FourierDirection,
) -> Result<SymbolGrid> {
    let mut out = SymbolGrid::zeros(a.base.clone(), a.cov.dual(), a.class)?;
    let dims = a.cov.dims();
    let scale = a.cov.spacing();
    let forward = dir == FourierDirection::Forward;
    let nb = a.base.len();
    for ix in 0..nb {
        let x = a.base.point(ix);
        let mu = maps.mu_weight(density, &x);
        let factor = if forward { mu } else { 1.0 / mu };
        let fiber = out.fiber_mut(ix);
        fiber.copy_from_slice(a.fiber(ix));
        for axis in 0..dims.len() {
            transform_axis(fiber, &dims, axis, forward, scale);
        }
        for v in fiber.iter_mut() {
            *v *= factor;
        }
    }
    Ok(out)
}

/// Evaluate `g(t) = s_theta * sum_k w_k e^{+2 pi i theta_k t}` on the
/// refined lattice `t_m = -span*extent + m*(h/refine)`, `m = 0..M`, with
/// `M = refine*span*n` and `theta_k = (k - n/2)/(2*extent)`. This equals
/// the direct sum exactly: the terms are scattered into an `M`-point
/// spectrum and one inverse FFT reads off all targets.
pub fn inverse_on_refined_lattice(
    w: &[Complex64],
    n: usize,
    extent: f64,
    refine: usize,
    span: usize,
) -> Vec<Complex64> {
    assert_eq!(w.len(), n);
    let m_total = refine * span * n;
    let mut spectrum = vec![Complex64::new(0.0, 0.0); m_total];
    let half = (n / 2) as i64;
    for (k, &wk) in w.iter().enumerate() {
        let q_signed = span as i64 * (k as i64 - half);
        let slot = q_signed.rem_euclid(m_total as i64) as usize;
        // e^{-pi i * span * (k - n/2)} is a real sign
        let sgn = if q_signed.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        spectrum[slot] = wk * sgn;
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m_total);
    fft.process(&mut spectrum);
    let s_theta = 1.0 / (2.0 * extent);
    for v in spectrum.iter_mut() {
        *v *= s_theta;
    }
    spectrum
}

/// Apply the twiddled transform over every axis of a row-major block with
/// the same per-axis scale; used by quantization fiber sums.
pub(crate) fn fiber_block_transform(
    data: &mut [Complex64],
    dims: &[usize],
    forward: bool,
    scale: f64,
) {
    for axis in 0..dims.len() {
        transform_axis(data, dims, axis, forward, scale);
    }
}

/// Axis-separable version of [`inverse_on_refined_lattice`]: input dims
/// `[n; dim]`, output dims `[refine*span*n; dim]`.
pub fn inverse_on_refined_lattice_nd(
    w: &[Complex64],
    n: usize,
    extent: f64,
    refine: usize,
    span: usize,
    dim: usize,
) -> Vec<Complex64> {
    let m_total = refine * span * n;
    let s_theta = 1.0 / (2.0 * extent);
    let half = (n / 2) as i64;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m_total);
    let mut dims = vec![n; dim];
    let mut cur = w.to_vec();
    assert_eq!(cur.len(), dims.iter().product::<usize>());
    for axis in 0..dim {
        let strides = strides_of(&dims);
        let mut out_dims = dims.clone();
        out_dims[axis] = m_total;
        let out_strides = strides_of(&out_dims);
        let mut next = vec![Complex64::new(0.0, 0.0); out_dims.iter().product::<usize>()];
        let outer: usize = dims.iter().product::<usize>() / n;
        let mut spectrum = vec![Complex64::new(0.0, 0.0); m_total];
        for o in 0..outer {
            let mut rem = o;
            let mut start_in = 0usize;
            let mut start_out = 0usize;
            for a in (0..dims.len()).rev() {
                if a == axis {
                    continue;
                }
                let idx = rem % dims[a];
                rem /= dims[a];
                start_in += idx * strides[a];
                start_out += idx * out_strides[a];
            }
            for v in spectrum.iter_mut() {
                *v = Complex64::new(0.0, 0.0);
            }
            for k in 0..n {
                let q_signed = span as i64 * (k as i64 - half);
                let slot = q_signed.rem_euclid(m_total as i64) as usize;
                let sgn = if q_signed.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                spectrum[slot] = cur[start_in + k * strides[axis]] * sgn;
            }
            fft.process(&mut spectrum);
            for m in 0..m_total {
                next[start_out + m * out_strides[axis]] = spectrum[m] * s_theta;
            }
        }
        cur = next;
        dims = out_dims;
    }
    cur
}

/// Quadrature `h^dim * sum_j w_j e^{+2 pi i <theta_k, zeta_j>}` over the
/// doubled lattice `zeta_j = -2L + j h` (2n points per axis), evaluated at
/// all dual points `theta_k` at once. Because `e^{2 pi i theta_k zeta_j} =
/// (-1)^j e^{2 pi i k j / n}`, the doubled lattice folds onto an n-point
/// inverse FFT per axis.
pub fn forward_from_span2(w: &[Complex64], n: usize, dim: usize, spacing: f64) -> Vec<Complex64> {
    let mut dims = vec![2 * n; dim];
    assert_eq!(w.len(), dims.iter().product::<usize>());
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(n);
    let mut cur = w.to_vec();
    for axis in 0..dim {
        let strides = strides_of(&dims);
        let mut out_dims = dims.clone();
        out_dims[axis] = n;
        let out_strides = strides_of(&out_dims);
        let mut next =
            vec![Complex64::new(0.0, 0.0); out_dims.iter().product::<usize>()];
        let outer: usize = dims.iter().product::<usize>() / (2 * n);
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        for o in 0..outer {
            let mut rem = o;
            let mut start_in = 0usize;
            let mut start_out = 0usize;
            for a in (0..dims.len()).rev() {
                if a == axis {
                    continue;
                }
                let idx = rem % dims[a];
                rem /= dims[a];
                start_in += idx * strides[a];
                start_out += idx * out_strides[a];
            }
            for j in 0..n {
                // fold j and j+n; their alternating signs agree since n is even
                let folded = cur[start_in + j * strides[axis]]
                    + cur[start_in + (j + n) * strides[axis]];
                line[j] = if j % 2 == 0 { folded } else { -folded };
            }
            fft.process(&mut line);
            for k in 0..n {
                next[start_out + k * out_strides[axis]] = line[k] * spacing;
            }
        }
        cur = next;
        dims = out_dims;
    }
    cur
}

/// Trigonometric (zero-padded spectrum) upsampling along one axis of a
/// row-major block. Exact at original lattice points; spectrally accurate
/// between them for smooth data decaying at the box edges. The caller's
/// `dims[axis]` grows by `factor`.
pub fn trig_upsample_axis(
    data: &[Complex64],
    dims: &[usize],
    axis: usize,
    factor: usize,
) -> Vec<Complex64> {
    let n = dims[axis];
    let nf = n * factor;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(nf);
    let strides = strides_of(dims);
    let mut out_dims = dims.to_vec();
    out_dims[axis] = nf;
    let out_strides = strides_of(&out_dims);
    let mut out = vec![Complex64::new(0.0, 0.0); out_dims.iter().product::<usize>()];
    let outer: usize = dims.iter().product::<usize>() / n;
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let mut padded = vec![Complex64::new(0.0, 0.0); nf];
    for o in 0..outer {
        let mut rem = o;
        let mut start_in = 0usize;
        let mut start_out = 0usize;
        for a in (0..dims.len()).rev() {
            if a == axis {
                continue;
            }
            let idx = rem % dims[a];
            rem /= dims[a];
            start_in += idx * strides[a];
            start_out += idx * out_strides[a];
        }
        for j in 0..n {
            line[j] = data[start_in + j * strides[axis]];
        }
        fwd.process(&mut line);
        for v in padded.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        let half = n / 2;
        for k in 0..n {
            if k < half {
                padded[k] = line[k];
            } else if k == half {
                // split the Nyquist bin so real inputs stay real
                padded[half] = line[k] * 0.5;
                padded[nf - half] = line[k] * 0.5;
            } else {
                padded[nf - (n - k)] = line[k];
            }
        }
        inv.process(&mut padded);
        let scale = 1.0 / n as f64;
        for j in 0..nf {
            out[start_out + j * out_strides[axis]] = padded[j] * scale;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spec::GridSpec;
    use crate::grid::ClassMeta;
    use crate::models::ManifoldModel;
    use crate::geometry::Frame;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn forward_inverse_identity_and_parseval() {
        let spec = GridSpec::new(1, 6.0, 64).unwrap();
        let v = GridFn::from_fn(spec, |p| {
            Complex64::new((-PI * p[0] * p[0]).exp(), 0.3 * p[0].sin())
        });
        let w = grid_forward(&v);
        let back = grid_inverse(&w);
        assert!(back.rel_l2_error(&v) < 1e-12);
        let nv = v.l2_norm();
        let nw = w.l2_norm();
        assert!((nv - nw).abs() < 1e-10 * nv, "parseval {nv} vs {nw}");
    }

    #[test]
    fn gaussian_is_fixed_point() {
        // exp(-pi x^2) is invariant under this normalization
        let spec = GridSpec::new(1, 8.0, 256).unwrap();
        let v = GridFn::from_fn(spec, |p| Complex64::new((-PI * p[0] * p[0]).exp(), 0.0));
        let w = grid_forward(&v);
        let dual = w.spec.clone();
        let expect = GridFn::from_fn(dual, |t| Complex64::new((-PI * t[0] * t[0]).exp(), 0.0));
        assert!(w.rel_l2_error(&expect) < 1e-10);
    }

    #[test]
    fn two_dim_forward_matches_direct_sum() {
        let spec = GridSpec::new(2, 3.0, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = GridFn::from_fn(spec.clone(), |_| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let w = grid_forward(&v);
        let h = spec.spacing();
        let dual = spec.dual();
        for &flat in &[0usize, 13, 37, 63] {
            let theta = dual.point(flat);
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..spec.len() {
                let x = spec.point(j);
                let ph = -2.0 * PI * (theta[0] * x[0] + theta[1] * x[1]);
                acc += v.data[j] * Complex64::new(ph.cos(), ph.sin());
            }
            acc *= h * h;
            assert!((acc - w.data[flat]).norm() < 1e-12);
        }
    }

    #[test]
    fn refined_lattice_matches_direct_sum() {
        let n = 16;
        let extent = 2.5;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        for (refine, span) in [(1usize, 2usize), (2, 2), (2, 1)] {
            let got = inverse_on_refined_lattice(&w, n, extent, refine, span);
            let m_total = refine * span * n;
            let hh = 2.0 * extent / n as f64 / refine as f64;
            let s_theta = 1.0 / (2.0 * extent);
            for m in (0..m_total).step_by(7) {
                let t = -(span as f64) * extent + m as f64 * hh;
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let theta = (k as f64 - n as f64 / 2.0) * s_theta;
                    let ph = 2.0 * PI * theta * t;
                    acc += w[k] * Complex64::new(ph.cos(), ph.sin());
                }
                acc *= s_theta;
                assert!(
                    (acc - got[m]).norm() < 1e-12,
                    "refine {refine} span {span} m {m}"
                );
            }
        }
    }

    #[test]
    fn span2_forward_matches_direct_sum() {
        let n = 12;
        let extent = 3.0;
        let h = 2.0 * extent / n as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<Complex64> = (0..2 * n)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let got = forward_from_span2(&w, n, 1, h);
        let s_theta = 1.0 / (2.0 * extent);
        for k in 0..n {
            let theta = (k as f64 - n as f64 / 2.0) * s_theta;
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..2 * n {
                let zeta = -2.0 * extent + j as f64 * h;
                let ph = 2.0 * PI * theta * zeta;
                acc += w[j] * Complex64::new(ph.cos(), ph.sin());
            }
            acc *= h;
            assert!((acc - got[k]).norm() < 1e-12, "k {k}");
        }
    }

    #[test]
    fn upsample_exact_at_nodes_and_accurate_between() {
        let n = 64;
        let extent = 6.0;
        let h = 2.0 * extent / n as f64;
        let f = |x: f64| (-PI * x * x * 0.5).exp() * (1.3 * x).cos();
        let data: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(f(-extent + j as f64 * h), 0.0))
            .collect();
        let up = trig_upsample_axis(&data, &[n], 0, 4);
        for j in 0..n {
            assert!((up[4 * j] - data[j]).norm() < 1e-12);
        }
        let mut worst: f64 = 0.0;
        for j in 0..4 * n {
            let x = -extent + j as f64 * h / 4.0;
            worst = worst.max((up[j].re - f(x)).abs());
        }
        assert!(worst < 1e-8, "midpoint error {worst}");
    }

    #[test]
    fn fiber_transform_round_trip_with_weight() {
        let model = ManifoldModel::hyperbolic_exp();
        let frame = Frame::identity(2, vec![0.0, 0.0]);
        let maps = FrameMaps::new(model, frame).unwrap();
        let density = Density::Riemannian;
        let base = GridSpec::new(2, 2.0, 8).unwrap();
        let cov = base.dual();
        let a = SymbolGrid::from_fn(base, cov, ClassMeta::order_zero(1.0), |x, t| {
            Complex64::new(
                (-(x[0] * x[0] + x[1] * x[1] + t[0] * t[0] + t[1] * t[1])).exp(),
                0.1 * x[0] * t[1],
            )
        })
        .unwrap();
        let fwd = fiber_fourier(&a, &maps, &density, FourierDirection::Forward).unwrap();
        let back = fiber_fourier(&fwd, &maps, &density, FourierDirection::Inverse).unwrap();
        assert!(back.rel_l2_error(&a) < 1e-10);
        // weighted fiberwise energy identity
        let ix = 5;
        let x = a.base.point(ix);
        let mu = maps.mu_weight(&density, &x);
        let h = a.cov.spacing();
        let s = a.cov.dual().spacing();
        let ein: f64 = a.fiber(ix).iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h;
        let eout: f64 =
            fwd.fiber(ix).iter().map(|z| z.norm_sqr()).sum::<f64>() * s * s / (mu * mu);
        assert!((ein - eout).abs() < 1e-8 * ein.max(1e-12));
    }
}
