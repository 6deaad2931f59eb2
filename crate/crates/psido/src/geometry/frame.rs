use nalgebra::DMatrix;

use crate::models::ManifoldModel;
use crate::{Error, Result};

/// A frame `(z, b)`: a base point and a basis of the tangent space there,
/// stored column-wise in model coordinates. Induces the normal chart
/// `n(p) = b^{-1} log_z(p)` built from the underlying exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub base_point: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl Frame {
    pub fn new(base_point: Vec<f64>, basis: DMatrix<f64>) -> Result<Self> {
        let n = base_point.len();
        if basis.nrows() != n || basis.ncols() != n {
            return Err(Error::Config(format!(
                "basis must be {n}x{n} for a {n}-d base point"
            )));
        }
        if basis.determinant().abs() <= 1e-12 {
            return Err(Error::Config("frame basis is numerically singular".into()));
        }
        Ok(Frame { base_point, basis })
    }

    pub fn identity(dim: usize, base_point: Vec<f64>) -> Frame {
        Frame {
            base_point,
            basis: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.base_point.len()
    }

    pub fn basis_inv(&self) -> DMatrix<f64> {
        self.basis
            .clone()
            .try_inverse()
            .expect("frame basis is invertible by construction")
    }

    pub fn is_identity_at_origin(&self) -> bool {
        self.base_point.iter().all(|&v| v == 0.0) && self.basis == DMatrix::identity(self.dim(), self.dim())
    }
}

/// Chart coordinates of a point: `n(p) = b^{-1} log_z(p)`.
pub fn chart_forward(model: &ManifoldModel, frame: &Frame, p: &[f64]) -> Vec<f64> {
    let v = model.model_log(&frame.base_point, p);
    let out = frame.basis_inv() * nalgebra::DVector::from_column_slice(&v);
    out.iter().copied().collect()
}

/// Point with given chart coordinates: `n^{-1}(x) = exp_z(b x)`.
pub fn chart_inverse(model: &ManifoldModel, frame: &Frame, x: &[f64]) -> Vec<f64> {
    let v = &frame.basis * nalgebra::DVector::from_column_slice(x);
    model.model_exp(&frame.base_point, v.as_slice())
}

/// Transition between frame charts: coordinates in `frame_a` of the point
/// with coordinates `x` in `frame_b`.
pub fn transition_map(
    model: &ManifoldModel,
    frame_a: &Frame,
    frame_b: &Frame,
    x: &[f64],
) -> Vec<f64> {
    chart_forward(model, frame_a, &chart_inverse(model, frame_b, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_identity_chart_is_identity() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let x = chart_forward(&m, &f, &[1.0, 2.0]);
        assert_relative_eq!(x[0], 1.0);
        assert_relative_eq!(x[1], 2.0);
    }

    #[test]
    fn euclidean_translated_frames_shift() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let a = Frame::identity(2, vec![0.0, 0.0]);
        let b = Frame::identity(2, vec![0.5, -1.0]);
        // point with b-coordinates x sits at x + z_b, so its a-coordinates
        // are x + z_b
        let t = transition_map(&m, &a, &b, &[2.0, 3.0]);
        assert_relative_eq!(t[0], 2.5);
        assert_relative_eq!(t[1], 2.0);
    }

    #[test]
    fn hyperbolic_origin_chart_fixes_axis_points() {
        let m = ManifoldModel::hyperbolic_exp();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let x = chart_forward(&m, &f, &[0.8, 0.0]);
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(x[1], 0.0, epsilon = 1e-12);
        let x = chart_forward(&m, &f, &[0.0, 1.0]);
        assert_relative_eq!(x[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn chart_round_trip() {
        let m = ManifoldModel::hyperbolic_exp();
        let f = Frame::new(
            vec![0.3, -0.6],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.1, 0.9]),
        )
        .unwrap();
        let p = [1.4, 0.7];
        let q = chart_inverse(&m, &f, &chart_forward(&m, &f, &p));
        assert_relative_eq!(q[0], p[0], epsilon = 1e-10);
        assert_relative_eq!(q[1], p[1], epsilon = 1e-10);
    }

    #[test]
    fn singular_basis_rejected() {
        let r = Frame::new(vec![0.0, 0.0], DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        assert!(r.is_err());
    }

    #[test]
    fn transition_round_trip_is_identity() {
        let m = ManifoldModel::hyperbolic_exp();
        let a = Frame::identity(2, vec![0.0, 0.0]);
        let b = Frame::identity(2, vec![1.0, 0.0]);
        let x = [0.4, -0.9];
        let there = transition_map(&m, &b, &a, &x);
        let back = transition_map(&m, &a, &b, &there);
        assert_relative_eq!(back[0], x[0], epsilon = 1e-9);
        assert_relative_eq!(back[1], x[1], epsilon = 1e-9);
    }
}
