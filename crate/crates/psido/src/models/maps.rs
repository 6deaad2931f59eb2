use nalgebra::{DMatrix, DVector};

use crate::geometry::{
    chart_forward, chart_inverse, density_in_frame, numeric_jacobian, Density, Frame,
};
use crate::{Error, Result};

use super::{hyperbolic, ManifoldModel};

/// A linearization expressed in one frame chart: all maps the calculus needs,
/// as functions of chart coordinates.
///
/// `psi(x, z)` is the chart representation of `psi_p(v)`, `psi_bar` its fiber
/// inverse, and the derived maps (ordering diffeomorphisms, scaling flow,
/// parallel transport, density quotients) are built on top.
#[derive(Debug, Clone)]
pub struct FrameMaps {
    pub model: ManifoldModel,
    pub frame: Frame,
    affine: bool,
}

impl FrameMaps {
    pub fn new(model: ManifoldModel, frame: Frame) -> Result<Self> {
        if frame.dim() != model.dim() {
            return Err(Error::Config(format!(
                "frame dimension {} does not match model dimension {}",
                frame.dim(),
                model.dim()
            )));
        }
        let affine = match &model {
            ManifoldModel::EuclideanStandard { .. } => true,
            ManifoldModel::HyperbolicFrameFlat { frame: f0 } => *f0 == frame,
            _ => false,
        };
        Ok(FrameMaps {
            model,
            frame,
            affine,
        })
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// True when `psi(x, z) = x + z` holds exactly in this frame.
    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn psi(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        if self.affine {
            return x.iter().zip(z).map(|(a, b)| a + b).collect();
        }
        let p = chart_inverse(&self.model, &self.frame, x);
        let j = self.model.dchart_inverse(&self.frame, x);
        let v = j * DVector::from_column_slice(z);
        let q = self.model.psi_model(&p, v.as_slice());
        chart_forward(&self.model, &self.frame, &q)
    }

    pub fn psi_bar(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        if self.affine {
            return Ok(y.iter().zip(x).map(|(a, b)| a - b).collect());
        }
        let p = chart_inverse(&self.model, &self.frame, x);
        let q = chart_inverse(&self.model, &self.frame, y);
        let v = self.model.psi_bar_model(&p, &q)?;
        let j = self.model.dchart_inverse(&self.frame, x);
        let z = j
            .lu()
            .solve(&DVector::from_column_slice(&v))
            .ok_or_else(|| Error::Numeric("chart differential is singular".into()))?;
        Ok(z.iter().copied().collect())
    }

    /// Parallel transport along `t -> psi(x, t xi)` from 0 to 1, as a matrix
    /// acting on chart tangents.
    pub fn transport(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if self.affine {
            return Ok(DMatrix::identity(n, n));
        }
        let p = chart_inverse(&self.model, &self.frame, x);
        let jx = self.model.dchart_inverse(&self.frame, x);
        let v = (&jx * DVector::from_column_slice(xi)).iter().copied().collect::<Vec<_>>();
        let q_model = self.model.psi_model(&p, &v);
        let p_model: DMatrix<f64> = match &self.model {
            ManifoldModel::EuclideanStandard { .. } => DMatrix::identity(n, n),
            ManifoldModel::EuclideanDeformed { def, .. } => def.transport(&p, &v)?,
            ManifoldModel::HyperbolicExp => hyperbolic::transport(&p, &v, 1e-3),
            ManifoldModel::HyperbolicFrameFlat { frame: f0 } => {
                // transport is the identity in the defining frame; conjugate it
                let x0 = chart_forward(&self.model, f0, &p);
                let y0 = chart_forward(&self.model, f0, &q_model);
                let b = self.model.dchart_inverse(f0, &x0);
                let c = self.model.dchart_inverse(f0, &y0);
                c * b
                    .try_inverse()
                    .ok_or_else(|| Error::Numeric("singular chart differential".into()))?
            }
        };
        let y = chart_forward(&self.model, &self.frame, &q_model);
        let jy = self.model.dchart_inverse(&self.frame, &y);
        let jy_inv = jy
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular chart differential".into()))?;
        Ok(jy_inv * p_model * jx)
    }

    /// Interior orderings are only defined when the linearization satisfies
    /// the midpoint-symmetry identity.
    pub fn ordering_allowed(&self, lambda: f64) -> Result<()> {
        let boundary = lambda.abs() < 1e-12 || (lambda - 1.0).abs() < 1e-12;
        if boundary || self.model.symmetry_holds() {
            Ok(())
        } else {
            Err(Error::HypothesisViolation(format!(
                "ordering parameter {lambda} needs the midpoint-symmetry identity, \
                 which '{}' does not satisfy",
                self.model.name()
            )))
        }
    }

    /// `Phi_lambda(x, z) = (psi(x, lambda z), psi(x, -(1-lambda) z))`.
    pub fn phi_lambda(&self, lambda: f64, x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.ordering_allowed(lambda)?;
        let zl: Vec<f64> = z.iter().map(|v| lambda * v).collect();
        let zr: Vec<f64> = z.iter().map(|v| -(1.0 - lambda) * v).collect();
        Ok((self.psi(x, &zl), self.psi(x, &zr)))
    }

    /// Inverse of `Phi_lambda`: midpoint `m_lambda(x, y)` and difference
    /// covector base `xi_lambda(x, y)`.
    pub fn phi_lambda_inv(&self, lambda: f64, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.ordering_allowed(lambda)?;
        let v = self.psi_bar(x, y)?;
        if lambda.abs() < 1e-9 {
            return Ok((x.to_vec(), v.iter().map(|a| -a).collect()));
        }
        let vl: Vec<f64> = v.iter().map(|a| lambda * a).collect();
        let m = self.psi(x, &vl);
        let back = self.psi_bar(&m, x)?;
        Ok((m, back.iter().map(|a| a / lambda).collect()))
    }

    /// Scaling flow `Upsilon_t(x, z) = (psi(x, t z), -psi_bar(psi(x, t z), x)/t)`
    /// with a stabilized tangent part for small `t`.
    pub fn upsilon(&self, t: f64, x: &[f64], z: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let zt: Vec<f64> = z.iter().map(|v| t * v).collect();
        let pos = self.psi(x, &zt);
        let tangent = self.upsilon_tangent(t, x, z)?;
        Ok((pos, tangent))
    }

    fn upsilon_tangent_direct(&self, t: f64, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let zt: Vec<f64> = z.iter().map(|v| t * v).collect();
        let pos = self.psi(x, &zt);
        let back = self.psi_bar(&pos, x)?;
        Ok(back.iter().map(|v| -v / t).collect())
    }

    pub fn upsilon_tangent(&self, t: f64, x: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        if self.affine {
            return Ok(z.to_vec());
        }
        let at = t.abs();
        if at < 1e-6 {
            return Ok(z.to_vec());
        }
        if at < 1e-3 {
            // extrapolate the trend A(s) = (tangent(s) - z)/s from a stable
            // step down to t
            let h = 1e-3f64.copysign(t);
            let a = |s: f64| -> Result<Vec<f64>> {
                let u = self.upsilon_tangent_direct(s, x, z)?;
                Ok(u.iter().zip(z).map(|(ui, zi)| (ui - zi) / s).collect())
            };
            let a1 = a(h)?;
            let a2 = a(0.5 * h)?;
            return Ok(z
                .iter()
                .enumerate()
                .map(|(i, zi)| zi + t * (2.0 * a2[i] - a1[i]))
                .collect());
        }
        self.upsilon_tangent_direct(t, x, z)
    }

    /// Density weight of `density` in this frame at `x`.
    pub fn mu_weight(&self, density: &Density, x: &[f64]) -> f64 {
        density_in_frame(&self.model, &self.frame, density, x)
    }

    /// True when `mu_lambda` is identically 1 (affine maps, Lebesgue density
    /// of this very frame).
    pub fn mu_lambda_is_trivial(&self, density: &Density) -> bool {
        self.affine && matches!(density, Density::FrameLebesgue(f0) if *f0 == self.frame)
    }

    /// Density quotient entering kernel formulas:
    /// `mu(x) mu(y) / mu(m)^2 * |det d Phi_lambda|` at `Phi_lambda^{-1}(x,y)`.
    pub fn mu_lambda(&self, density: &Density, lambda: f64, x: &[f64], y: &[f64]) -> Result<f64> {
        if self.mu_lambda_is_trivial(density) {
            return Ok(1.0);
        }
        let (m, z) = self.phi_lambda_inv(lambda, x, y)?;
        self.mu_lambda_assemble(density, lambda, x, y, &m, &z)
    }

    /// Same quotient evaluated from the center side, at `(m, zeta)` with
    /// `(x, y) = Phi_lambda(m, zeta)`; avoids the inverse solve.
    pub fn mu_lambda_from_center(
        &self,
        density: &Density,
        lambda: f64,
        m: &[f64],
        zeta: &[f64],
    ) -> Result<f64> {
        if self.mu_lambda_is_trivial(density) {
            return Ok(1.0);
        }
        let (x, y) = self.phi_lambda(lambda, m, zeta)?;
        self.mu_lambda_assemble(density, lambda, &x, &y, m, zeta)
    }

    fn mu_lambda_assemble(
        &self,
        density: &Density,
        lambda: f64,
        x: &[f64],
        y: &[f64],
        m: &[f64],
        z: &[f64],
    ) -> Result<f64> {
        let n = self.dim();
        let det = if self.affine {
            1.0 // Phi_lambda is affine-linear with unit Jacobian
        } else {
            let stacked: Vec<f64> = m.iter().chain(z.iter()).copied().collect();
            let f = |u: &[f64]| -> Vec<f64> {
                let (a, b) = self
                    .phi_lambda(lambda, &u[..n], &u[n..])
                    .expect("ordering gate already checked");
                a.into_iter().chain(b).collect()
            };
            numeric_jacobian(f, &stacked, 1e-4).determinant().abs()
        };
        let mu_x = self.mu_weight(density, x);
        let mu_y = self.mu_weight(density, y);
        let mu_m = self.mu_weight(density, m);
        Ok(mu_x * mu_y / (mu_m * mu_m) * det)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn close(a: &[f64], b: &[f64], eps: f64) {
        for (x, y) in a.iter().zip(b) {
            assert_relative_eq!(x, y, epsilon = eps);
        }
    }

    #[test]
    fn euclidean_phi_inverts() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let (a, b) = fm.phi_lambda(0.5, &[1.0, -0.5], &[0.4, 0.8]).unwrap();
        close(&a, &[1.2, -0.1], 1e-12);
        close(&b, &[0.8, -0.9], 1e-12);
        let (mid, diff) = fm.phi_lambda_inv(0.5, &a, &b).unwrap();
        close(&mid, &[1.0, -0.5], 1e-12);
        close(&diff, &[0.4, 0.8], 1e-12);
    }

    #[test]
    fn hyperbolic_phi_inverts_at_interior_ordering() {
        let m = ManifoldModel::hyperbolic_exp();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let x = [0.3, -0.2];
        let z = [0.7, 0.4];
        for lam in [0.0, 0.5, 1.0] {
            let (a, b) = fm.phi_lambda(lam, &x, &z).unwrap();
            let (mid, diff) = fm.phi_lambda_inv(lam, &a, &b).unwrap();
            close(&mid, &x, 1e-8);
            close(&diff, &z, 1e-8);
        }
    }

    #[test]
    fn interior_ordering_rejected_on_deformed() {
        let m = ManifoldModel::euclidean_deformed(2, 1.0, 0.1).unwrap();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        assert!(fm.phi_lambda(0.5, &[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(fm.phi_lambda(0.0, &[0.0, 0.0], &[1.0, 1.0]).is_ok());
        assert!(fm.phi_lambda(1.0, &[0.0, 0.0], &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn upsilon_inverts() {
        let m = ManifoldModel::hyperbolic_exp();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let x = [0.4, 0.1];
        let z = [0.9, -0.6];
        let t = 0.7;
        let (y, w) = fm.upsilon(t, &x, &z).unwrap();
        let (x2, z2) = fm.upsilon(-t, &y, &w).unwrap();
        close(&x2, &x, 1e-8);
        close(&z2, &z, 1e-8);
    }

    #[test]
    fn upsilon_group_law_on_symmetric_model() {
        let m = ManifoldModel::hyperbolic_exp();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let x = [0.2, -0.3];
        let z = [0.5, 0.6];
        let (y1, w1) = fm.upsilon(0.25, &x, &z).unwrap();
        let (y2, w2) = fm.upsilon(0.5, &y1, &w1).unwrap();
        let (y3, w3) = fm.upsilon(0.75, &x, &z).unwrap();
        close(&y2, &y3, 1e-7);
        close(&w2, &w3, 1e-7);
    }

    #[test]
    fn mu_lambda_trivial_on_euclidean_lebesgue() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let fm = FrameMaps::new(m, f.clone()).unwrap();
        let d = Density::FrameLebesgue(f);
        assert!(fm.mu_lambda_is_trivial(&d));
        assert_relative_eq!(
            fm.mu_lambda(&d, 0.5, &[0.4, 0.2], &[-0.3, 0.9]).unwrap(),
            1.0
        );
    }

    #[test]
    fn mu_lambda_swap_symmetry() {
        // mu_{1-lambda}(x, y) = mu_lambda(y, x)
        let m = ManifoldModel::hyperbolic_exp();
        let f = Frame::identity(2, vec![0.0, 0.0]);
        let fm = FrameMaps::new(m, f).unwrap();
        let d = Density::Riemannian;
        let x = [0.5, 0.2];
        let y = [-0.1, 0.6];
        let a = fm.mu_lambda(&d, 0.25, &x, &y).unwrap();
        let b = fm.mu_lambda(&d, 0.75, &y, &x).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-6);
    }

    #[test]
    fn transport_matches_scaling_flow_tangent() {
        // P_{x, t z}(z) = Upsilon_{t,T}(x, z)
        let m = ManifoldModel::hyperbolic_exp();
        let fm = FrameMaps::new(m, Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let x = [0.3, 0.4];
        let z = [0.8, -0.5];
        for t in [0.25, 0.5, 1.0] {
            let zt: Vec<f64> = z.iter().map(|v| t * v).collect();
            let p = fm.transport(&x, &zt).unwrap();
            let pv = &p * DVector::from_column_slice(&z);
            let tang = fm.upsilon_tangent(t, &x, &z).unwrap();
            close(pv.as_slice(), &tang, 1e-6);
        }
    }
}
