use num_complex::Complex64;

use super::interp::sample_separable;
use super::spec::GridSpec;
use crate::{Error, Result};

/// Complex scalar field sampled on a [`GridSpec`] lattice, row-major.
#[derive(Debug, Clone)]
pub struct GridFn {
    pub spec: GridSpec,
    pub data: Vec<Complex64>,
}

impl GridFn {
    pub fn zeros(spec: GridSpec) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); spec.len()];
        GridFn { spec, data }
    }

    pub fn from_fn<F>(spec: GridSpec, mut f: F) -> Self
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let data = (0..spec.len()).map(|i| f(&spec.point(i))).collect();
        GridFn { spec, data }
    }

    /// Cubic interpolation with zero extension outside the box; exact at
    /// lattice points.
    pub fn sample(&self, p: &[f64]) -> Complex64 {
        sample_separable(
            &self.data,
            &self.spec.dims(),
            &vec![(-self.spec.extent, self.spec.spacing()); self.spec.dim],
            p,
        )
    }

    /// Discrete L2 norm with quadrature weight `spacing^dim`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.spec.spacing().powi(self.spec.dim as i32);
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Relative L2 distance `|a-b|_2 / max(|b|_2, floor)`.
pub(crate) fn rel_l2(a: &[Complex64], b: &[Complex64], weight: f64) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    (num * weight).sqrt() / (den * weight).sqrt().max(1e-300)
}

impl GridFn {
    pub fn rel_l2_error(&self, reference: &GridFn) -> f64 {
        rel_l2(
            &self.data,
            &reference.data,
            self.spec.spacing().powi(self.spec.dim as i32),
        )
    }
}

/// Growth-class annotation carried by symbol data: `sigma` the spatial
/// weight exponent, `l` the spatial order, `m` the covariable order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMeta {
    pub sigma: f64,
    pub l: f64,
    pub m: f64,
}

impl ClassMeta {
    pub fn order_zero(sigma: f64) -> Self {
        ClassMeta { sigma, l: 0.0, m: 0.0 }
    }
}

/// Symbol sampled on base x covariable lattices; layout is x-major, so the
/// covariable fiber at fixed x is contiguous.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    pub base: GridSpec,
    pub cov: GridSpec,
    pub class: ClassMeta,
    pub data: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn zeros(base: GridSpec, cov: GridSpec, class: ClassMeta) -> Result<Self> {
        if base.dim != cov.dim {
            return Err(Error::GridMismatch(format!(
                "base dim {} vs covariable dim {}",
                base.dim, cov.dim
            )));
        }
        let data = vec![Complex64::new(0.0, 0.0); base.len() * cov.len()];
        Ok(SymbolGrid { base, cov, class, data })
    }

    pub fn from_fn<F>(base: GridSpec, cov: GridSpec, class: ClassMeta, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &[f64]) -> Complex64,
    {
        let mut s = Self::zeros(base, cov, class)?;
        let nc = s.cov.len();
        for ix in 0..s.base.len() {
            let x = s.base.point(ix);
            for it in 0..nc {
                let t = s.cov.point(it);
                s.data[ix * nc + it] = f(&x, &t);
            }
        }
        Ok(s)
    }

    pub fn index(&self, ix: usize, itheta: usize) -> usize {
        ix * self.cov.len() + itheta
    }

    /// Contiguous covariable fiber at base index `ix`.
    pub fn fiber(&self, ix: usize) -> &[Complex64] {
        let nc = self.cov.len();
        &self.data[ix * nc..(ix + 1) * nc]
    }

    pub fn fiber_mut(&mut self, ix: usize) -> &mut [Complex64] {
        let nc = self.cov.len();
        &mut self.data[ix * nc..(ix + 1) * nc]
    }

    /// Whole covariable fiber at an off-lattice base point: separable cubic
    /// interpolation across neighboring fibers, zero outside the box.
    pub fn interp_fiber(&self, m: &[f64]) -> Vec<Complex64> {
        let nc = self.cov.len();
        let mut out = vec![Complex64::new(0.0, 0.0); nc];
        let h = self.base.spacing();
        // per-axis taps
        let mut taps: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.base.dim);
        for a in 0..self.base.dim {
            let u = (m[a] + self.base.extent) / h;
            let i0 = u.floor();
            let t = u - i0;
            let w = super::interp::cubic_weights(t);
            let mut axis_taps = Vec::new();
            for tap in 0..4 {
                let i = i0 as i64 - 1 + tap as i64;
                if i >= 0 && (i as usize) < self.base.n && w[tap] != 0.0 {
                    axis_taps.push((i as usize, w[tap]));
                }
            }
            taps.push(axis_taps);
        }
        // accumulate the tensor product of fibers
        let mut stack = vec![(0usize, 1.0f64)];
        for axis_taps in &taps {
            let mut next = Vec::with_capacity(stack.len() * axis_taps.len());
            for &(flat, w) in &stack {
                for &(i, wi) in axis_taps {
                    next.push((flat * self.base.n + i, w * wi));
                }
            }
            stack = next;
        }
        for (flat, w) in stack {
            let fib = self.fiber(flat);
            for (o, v) in out.iter_mut().zip(fib) {
                *o += v * w;
            }
        }
        out
    }

    /// Cubic interpolation over the joint (x, theta) lattice, zero outside.
    pub fn sample(&self, x: &[f64], theta: &[f64]) -> Complex64 {
        let mut dims = self.base.dims();
        dims.extend(self.cov.dims());
        let mut axes = vec![(-self.base.extent, self.base.spacing()); self.base.dim];
        axes.extend(vec![(-self.cov.extent, self.cov.spacing()); self.cov.dim]);
        let mut p = x.to_vec();
        p.extend_from_slice(theta);
        sample_separable(&self.data, &dims, &axes, &p)
    }

    pub fn rel_l2_error(&self, reference: &SymbolGrid) -> f64 {
        rel_l2(&self.data, &reference.data, 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Quantization routines require the covariable lattice to be the dual
    /// of the base lattice (so fiber transforms land back on the base).
    pub fn require_dual_pair(&self) -> Result<()> {
        if !self.cov.same_shape(&self.base.dual()) {
            return Err(Error::GridMismatch(format!(
                "covariable grid (extent {}, n {}) is not dual to base (extent {}, n {})",
                self.cov.extent, self.cov.n, self.base.extent, self.base.n
            )));
        }
        Ok(())
    }
}

/// Two-point kernel on x-lattice times y-lattice, row-major (y fastest).
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub x: GridSpec,
    pub y: GridSpec,
    pub data: Vec<Complex64>,
}

impl KernelGrid {
    pub fn zeros(x: GridSpec, y: GridSpec) -> Result<Self> {
        if x.dim != y.dim {
            return Err(Error::GridMismatch(format!(
                "kernel x dim {} vs y dim {}",
                x.dim, y.dim
            )));
        }
        let data = vec![Complex64::new(0.0, 0.0); x.len() * y.len()];
        Ok(KernelGrid { x, y, data })
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.y.len() + iy
    }

    pub fn row(&self, ix: usize) -> &[Complex64] {
        let ny = self.y.len();
        &self.data[ix * ny..(ix + 1) * ny]
    }

    pub fn sample(&self, x: &[f64], y: &[f64]) -> Complex64 {
        let mut dims = self.x.dims();
        dims.extend(self.y.dims());
        let mut axes = vec![(-self.x.extent, self.x.spacing()); self.x.dim];
        axes.extend(vec![(-self.y.extent, self.y.spacing()); self.y.dim]);
        let mut p = x.to_vec();
        p.extend_from_slice(y);
        sample_separable(&self.data, &dims, &axes, &p)
    }

    /// Exact lattice lookup: returns None when the point is off-lattice by
    /// more than `tol` index units or outside the box.
    pub fn lattice_value(&self, x: &[f64], y: &[f64], tol: f64) -> Option<Complex64> {
        let locate = |spec: &GridSpec, p: &[f64]| -> Option<usize> {
            let mut flat = 0usize;
            for &c in p {
                let u = (c + spec.extent) / spec.spacing();
                let i = u.round();
                if (u - i).abs() > tol || i < 0.0 || i >= spec.n as f64 {
                    return None;
                }
                flat = flat * spec.n + i as usize;
            }
            Some(flat)
        };
        let ix = locate(&self.x, x)?;
        let iy = locate(&self.y, y)?;
        Some(self.data[self.index(ix, iy)])
    }

    pub fn rel_l2_error(&self, reference: &KernelGrid) -> f64 {
        rel_l2(&self.data, &reference.data, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gridfn_sampling_exact_on_lattice() {
        let spec = GridSpec::new(1, 4.0, 16).unwrap();
        let f = GridFn::from_fn(spec.clone(), |p| Complex64::new(p[0] * p[0], -p[0]));
        for i in [0usize, 3, 9, 15] {
            let x = spec.coord(i);
            let v = f.sample(&[x]);
            assert!((v - f.data[i]).norm() < 1e-12);
        }
        // outside the box: zero extension
        assert_eq!(f.sample(&[9.0]).norm(), 0.0);
    }

    #[test]
    fn symbol_layout_fiber_contiguous() {
        let base = GridSpec::new(1, 2.0, 8).unwrap();
        let cov = base.dual();
        let s = SymbolGrid::from_fn(base, cov, ClassMeta::order_zero(1.0), |x, t| {
            Complex64::new(x[0], t[0])
        })
        .unwrap();
        let fib = s.fiber(3);
        for (it, v) in fib.iter().enumerate() {
            assert_eq!(v.re, s.base.coord(3));
            assert_eq!(v.im, s.cov.coord(it));
        }
        s.require_dual_pair().unwrap();
    }

    #[test]
    fn kernel_lattice_lookup() {
        let g = GridSpec::new(1, 2.0, 8).unwrap();
        let mut k = KernelGrid::zeros(g.clone(), g.clone()).unwrap();
        let idx = k.index(2, 5);
        k.data[idx] = Complex64::new(7.0, 0.0);
        let v = k
            .lattice_value(&[g.coord(2)], &[g.coord(5)], 1e-9)
            .unwrap();
        assert_eq!(v.re, 7.0);
        assert!(k.lattice_value(&[g.coord(2) + 0.1], &[g.coord(5)], 1e-9).is_none());
    }
}
