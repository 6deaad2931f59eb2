//! Deformed Euclidean linearization on R^n:
//!
//! `psi(x, xi) = x + <x>^sigma s(xi / <x>^sigma)`,  `s = Id + g`,
//! `g_i(u) = (eta/16) (tanh u_i - u_i)`.
//!
//! The perturbation satisfies `|dg| <= eta/16` componentwise, so `s` is a
//! global diffeomorphism and the induced parallel transport has a closed form
//! `P = Id + V + W` with determinant bounded below by 1/2.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Gauss-Legendre nodes/weights on [0,1], 8 points.
pub const GL8: [(f64, f64); 8] = [
    (0.019855071751231884, 0.05061426814518813),
    (0.10166676129318664, 0.11119051722668724),
    (0.2372337950418355, 0.15685332293894364),
    (0.40828267875217505, 0.18134189168918099),
    (0.591717321247825, 0.18134189168918099),
    (0.7627662049581645, 0.15685332293894364),
    (0.8983332387068134, 0.11119051722668724),
    (0.9801449282487768, 0.05061426814518813),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deformation {
    pub sigma: f64,
    pub eta: f64,
}

impl Deformation {
    pub fn new(sigma: f64, eta: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !(eta > 0.0 && eta < 1.0) {
            return Err(Error::Config(format!(
                "deformation needs sigma >= 0 and eta in (0,1); got sigma={sigma}, eta={eta}"
            )));
        }
        Ok(Deformation { sigma, eta })
    }

    fn g_scalar(&self, u: f64) -> f64 {
        self.eta / 16.0 * (u.tanh() - u)
    }

    fn dg_scalar(&self, u: f64) -> f64 {
        let c = u.cosh();
        self.eta / 16.0 * (1.0 / (c * c) - 1.0)
    }

    fn s_scalar(&self, u: f64) -> f64 {
        u + self.g_scalar(u)
    }

    /// Scalar Newton solve of s(u) = w; s is strictly monotone.
    fn s_inv_scalar(&self, w: f64) -> Result<f64> {
        let mut u = w;
        for _ in 0..100 {
            let r = self.s_scalar(u) - w;
            if r.abs() < 1e-14 * (1.0 + w.abs()) {
                return Ok(u);
            }
            u -= r / (1.0 + self.dg_scalar(u));
        }
        Err(Error::InverseFailure(format!(
            "deformation inverse did not converge at w={w}"
        )))
    }

    /// Japanese-bracket weight <x>^sigma.
    pub fn weight(&self, x: &[f64]) -> f64 {
        let n2: f64 = x.iter().map(|v| v * v).sum();
        (1.0 + n2).sqrt().powf(self.sigma)
    }

    pub fn psi(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let b = self.weight(x);
        x.iter()
            .zip(xi)
            .map(|(&xi_, &v)| xi_ + b * self.s_scalar(v / b))
            .collect()
    }

    pub fn psi_bar(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let b = self.weight(x);
        x.iter()
            .zip(y)
            .map(|(&xi_, &yi)| Ok(b * self.s_inv_scalar((yi - xi_) / b)?))
            .collect()
    }

    /// Closed-form parallel transport P_{x,xi} = Id + V + W (diagonal here
    /// because g acts componentwise). Fails if det P < 1/2.
    pub fn transport(&self, x: &[f64], xi: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len();
        let b = self.weight(x);
        let a = self.weight(&self.psi(x, xi));
        let mut p = DMatrix::identity(n, n);
        for i in 0..n {
            let mut v = 0.0;
            let mut w = 0.0;
            for (t, wt) in GL8 {
                let u = t * xi[i] / b;
                v += wt * self.dg_scalar(u);
                // dw = dg_hat at (B/A) s(u) times ds at u
                let c = b / a * self.s_scalar(u);
                let d = self.s_inv_scalar(-c)?;
                let dgd = self.dg_scalar(d);
                let dghat = -dgd / (1.0 + dgd);
                w += wt * dghat * (1.0 + self.dg_scalar(u));
            }
            p[(i, i)] += v + w;
        }
        let det = p.determinant();
        if det < 0.5 {
            return Err(Error::HypothesisViolation(format!(
                "transport determinant {det} below 1/2"
            )));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_fixes_origin_with_unit_differential() {
        let d = Deformation::new(1.0, 0.1).unwrap();
        let x = [1.2, -0.4];
        let p = d.psi(&x, &[0.0, 0.0]);
        assert_relative_eq!(p[0], x[0], epsilon = 1e-14);
        assert_relative_eq!(p[1], x[1], epsilon = 1e-14);
        // dg(0) = 0, so d psi at 0 = Id
        let h = 1e-5;
        let dp = d.psi(&x, &[h, 0.0]);
        assert_relative_eq!((dp[0] - x[0]) / h, 1.0, epsilon = 1e-9);
        assert_relative_eq!((dp[1] - x[1]) / h, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn psi_bar_inverts_psi() {
        let d = Deformation::new(0.5, 0.1).unwrap();
        let x = [0.7, 2.0];
        let xi = [3.0, -1.5];
        let y = d.psi(&x, &xi);
        let back = d.psi_bar(&x, &y).unwrap();
        assert_relative_eq!(back[0], xi[0], epsilon = 1e-11);
        assert_relative_eq!(back[1], xi[1], epsilon = 1e-11);
    }

    #[test]
    fn transport_matches_scaling_flow() {
        // P_{x,xi}(xi) must equal -psi_bar(psi(x,xi), x)
        let d = Deformation::new(1.0, 0.1).unwrap();
        let x = [0.9, -1.3];
        let xi = [2.0, 0.8];
        let p = d.transport(&x, &xi).unwrap();
        let y = d.psi(&x, &xi);
        let flow = d.psi_bar(&y, &x).unwrap();
        for i in 0..2 {
            let pv = p[(i, i)] * xi[i];
            assert_relative_eq!(pv, -flow[i], epsilon = 1e-9);
        }
        assert!(p.determinant() >= 0.5);
    }
}
