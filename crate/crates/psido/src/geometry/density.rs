use crate::models::ManifoldModel;

use super::frame::{chart_forward, chart_inverse, Frame};

/// A smooth positive density on the base manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    /// Pushforward of Lebesgue measure through the chart of the given frame;
    /// weight identically 1 in that frame.
    FrameLebesgue(Frame),
    /// Riemannian volume of the underlying metric (flat: Lebesgue).
    Riemannian,
}

/// `sqrt(det g)` in model coordinates.
pub fn riemannian_weight_model(model: &ManifoldModel, p: &[f64]) -> f64 {
    if model.is_flat_underlying() {
        1.0
    } else {
        p[0].cosh()
    }
}

/// Density weight in a frame chart: the function `mu` with
/// `d mu = mu(x) dx` in the coordinates of `frame`.
pub fn density_in_frame(model: &ManifoldModel, frame: &Frame, density: &Density, x: &[f64]) -> f64 {
    if let Density::FrameLebesgue(f0) = density {
        if f0 == frame {
            return 1.0;
        }
    }
    let p = chart_inverse(model, frame, x);
    let w_model = match density {
        Density::Riemannian => riemannian_weight_model(model, &p),
        Density::FrameLebesgue(f0) => {
            // Lebesgue in f0's chart, pushed to model coordinates
            let x0 = chart_forward(model, f0, &p);
            let j0 = model.dchart_inverse(f0, &x0);
            1.0 / j0.determinant().abs()
        }
    };
    let j = model.dchart_inverse(frame, x);
    w_model * j.determinant().abs()
}

/// Convenience: weight of a density in model coordinates (the chart of the
/// identity frame for flat models, or given directly for the Riemannian case).
pub fn density_weight_model(model: &ManifoldModel, density: &Density, p: &[f64]) -> f64 {
    match density {
        Density::Riemannian => riemannian_weight_model(model, p),
        Density::FrameLebesgue(f0) => {
            let x0 = chart_forward(model, f0, p);
            let j0 = model.dchart_inverse(f0, &x0);
            1.0 / j0.determinant().abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    #[test]
    fn frame_lebesgue_weight_is_one_in_its_own_frame() {
        let m = ManifoldModel::hyperbolic_exp();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let d = Density::FrameLebesgue(f.clone());
        assert_relative_eq!(density_in_frame(&m, &f, &d, &[0.7, -0.3]), 1.0);
    }

    #[test]
    fn euclidean_frame_change_scales_by_basis_det() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let f0 = Frame::identity(2, vec![0.0, 0.0]);
        let f1 = Frame::new(
            vec![1.0, 0.0],
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        )
        .unwrap();
        let d = Density::FrameLebesgue(f0);
        // chart of f1 compresses x by 2, so the pushforward weight is 2
        assert_relative_eq!(density_in_frame(&m, &f1, &d, &[0.3, 0.4]), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn riemannian_weight_in_model_chart_is_cosh() {
        let m = ManifoldModel::hyperbolic_exp();
        assert_relative_eq!(riemannian_weight_model(&m, &[1.2, 0.5]), 1.2f64.cosh());
    }
}
