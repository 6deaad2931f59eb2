use crate::{Error, Result};

/// Isotropic uniform grid on the box `[-extent, extent]^dim`: per axis,
/// `n` points `x_j = -extent + j*spacing` with `spacing = 2*extent/n`
/// (half-open on the right, so the lattice is FFT-compatible).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub extent: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(dim: usize, extent: f64, n: usize) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::Config(format!("grid dim must be 1 or 2, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "grid size must be even and at least 8, got {n}"
            )));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::Config(format!("grid extent must be positive, got {extent}")));
        }
        Ok(GridSpec { dim, extent, n })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n as f64
    }

    /// Coordinate of index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Total number of points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major flat index (first axis slowest).
    pub fn index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dim);
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn unravel(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0usize; self.dim];
        let mut rem = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat).iter().map(|&i| self.coord(i)).collect()
    }

    /// The dual grid: `n` frequencies `(k - n/2) / (2*extent)` per axis,
    /// written as a GridSpec with extent `n / (4*extent)`. Involutive.
    pub fn dual(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            extent: self.n as f64 / (4.0 * self.extent),
            n: self.n,
        }
    }

    /// Same box, `factor` times finer lattice.
    pub fn refine(&self, factor: usize) -> GridSpec {
        GridSpec {
            dim: self.dim,
            extent: self.extent,
            n: self.n * factor,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Largest distance (in index units) from the boundary, used for
    /// interior/band tests: 0 on the outermost shell.
    pub fn border_depth(&self, idx: &[usize]) -> usize {
        idx.iter()
            .map(|&i| i.min(self.n - 1 - i))
            .min()
            .unwrap_or(0)
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.n == other.n
            && (self.extent - other.extent).abs() < 1e-12 * self.extent.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_is_involutive() {
        let g = GridSpec::new(2, 8.0, 64).unwrap();
        let d = g.dual();
        assert!((d.spacing() - 1.0 / 16.0).abs() < 1e-15);
        assert!(g.same_shape(&d.dual()));
        // dual frequencies straddle zero symmetrically
        assert!((d.coord(32)).abs() < 1e-15);
    }

    #[test]
    fn indexing_round_trip() {
        let g = GridSpec::new(2, 4.0, 10).unwrap();
        for flat in [0usize, 7, 55, 99] {
            let idx = g.unravel(flat);
            assert_eq!(g.index(&idx), flat);
        }
        assert_eq!(g.point(0), vec![-4.0, -4.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(GridSpec::new(1, 8.0, 7).is_err());
        assert!(GridSpec::new(1, 8.0, 6).is_err());
        assert!(GridSpec::new(3, 8.0, 16).is_err());
        assert!(GridSpec::new(1, -1.0, 16).is_err());
    }
}
