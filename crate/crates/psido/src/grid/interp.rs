use num_complex::Complex64;

/// Cubic convolution weights (Keys kernel, a = -1/2) for the four lattice
/// taps around a point with fractional offset `t` in [0, 1) from tap 1.
/// Interpolates exactly at lattice points and reproduces cubics' local
/// behavior to O(h^3).
pub(crate) fn cubic_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    ]
}

/// Separable cubic interpolation on a row-major nd array. `axes` gives
/// (origin, spacing) per axis. Zero extension outside the lattice.
pub(crate) fn sample_separable(
    data: &[Complex64],
    dims: &[usize],
    axes: &[(f64, f64)],
    p: &[f64],
) -> Complex64 {
    debug_assert_eq!(dims.len(), axes.len());
    debug_assert_eq!(dims.len(), p.len());
    // per-axis tap base index and weights
    let mut bases = [0i64; 4];
    let mut weights = [[0.0f64; 4]; 4];
    for a in 0..dims.len() {
        let (origin, spacing) = axes[a];
        let u = (p[a] - origin) / spacing;
        let i0 = u.floor();
        let t = u - i0;
        bases[a] = i0 as i64 - 1;
        weights[a] = cubic_weights(t);
    }
    // strides, row-major
    let mut strides = vec![1usize; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }
    accumulate(data, dims, &strides, &bases, &weights, 0, 0, 1.0)
}

fn accumulate(
    data: &[Complex64],
    dims: &[usize],
    strides: &[usize],
    bases: &[i64; 4],
    weights: &[[f64; 4]; 4],
    axis: usize,
    offset: usize,
    w: f64,
) -> Complex64 {
    if axis == dims.len() {
        return data[offset] * w;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for tap in 0..4 {
        let cw = weights[axis][tap];
        if cw == 0.0 {
            continue;
        }
        let i = bases[axis] + tap as i64;
        if i < 0 || i >= dims[axis] as i64 {
            continue; // zero extension
        }
        acc += accumulate(
            data,
            dims,
            strides,
            bases,
            weights,
            axis + 1,
            offset + i as usize * strides[axis],
            w * cw,
        );
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one() {
        for &t in &[0.0, 0.25, 0.5, 0.9] {
            let w = cubic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        // t = 0 picks tap 1 exactly
        let w = cubic_weights(0.0);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[0], 0.0);
    }

    #[test]
    fn interpolates_smooth_function_accurately() {
        let n = 64;
        let h = 0.1;
        let f = |x: f64| (x * 0.7).sin() + 0.3 * (x * 0.2).cos();
        let data: Vec<Complex64> = (0..n)
            .map(|i| Complex64::new(f(i as f64 * h), 0.0))
            .collect();
        let mut worst: f64 = 0.0;
        for k in 0..200 {
            let x = 1.0 + k as f64 * 0.02;
            let v = sample_separable(&data, &[n], &[(0.0, h)], &[x]);
            worst = worst.max((v.re - f(x)).abs());
        }
        assert!(worst < 5e-5, "cubic interp error {worst}");
    }
}
