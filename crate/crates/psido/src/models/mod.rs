//! Concrete manifolds-with-linearization and the maps they induce.

pub mod deformed;
pub mod hyperbolic;
mod maps;

pub use deformed::Deformation;
pub use maps::FrameMaps;

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{numeric_jacobian, Frame};
use crate::{Error, Result};

/// A manifold together with a linearization `psi`.
///
/// The underlying space is flat `R^n` for the Euclidean kinds and the
/// hyperbolic plane for the others; charts always come from the underlying
/// geodesic exponential, while `psi` is the model's own linearization.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldModel {
    /// `psi_x(v) = x + v` on R^n.
    EuclideanStandard { dim: usize },
    /// `psi_x(v) = x + <x>^sigma s(v/<x>^sigma)` on R^n; see [`Deformation`].
    EuclideanDeformed { dim: usize, def: Deformation },
    /// Geodesic exponential of the hyperbolic plane.
    HyperbolicExp,
    /// Hyperbolic plane with the linearization declared affine in one
    /// designated frame: `psi(x, z) = x + z` there.
    HyperbolicFrameFlat { frame: Frame },
}

impl ManifoldModel {
    pub fn euclidean_standard(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ManifoldModel::EuclideanStandard { dim })
    }

    pub fn euclidean_deformed(dim: usize, sigma: f64, eta: f64) -> Result<Self> {
        check_dim(dim)?;
        let m = ManifoldModel::EuclideanDeformed {
            dim,
            def: Deformation::new(sigma, eta)?,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn hyperbolic_exp() -> Self {
        ManifoldModel::HyperbolicExp
    }

    pub fn hyperbolic_frame_flat(frame: Frame) -> Result<Self> {
        if frame.dim() != 2 {
            return Err(Error::Config("flat-frame model needs a 2-d frame".into()));
        }
        let m = ManifoldModel::HyperbolicFrameFlat { frame };
        m.validate()?;
        Ok(m)
    }

    pub fn from_name(name: &str, dim: usize, sigma: f64, eta: f64) -> Result<Self> {
        match name {
            "euclidean_standard" => Self::euclidean_standard(dim),
            "euclidean_deformed" => Self::euclidean_deformed(dim, sigma, eta),
            "hyperbolic_exp" => Ok(Self::hyperbolic_exp()),
            "hyperbolic_frame_flat" => {
                Self::hyperbolic_frame_flat(Frame::identity(2, vec![0.0, 0.0]))
            }
            other => Err(Error::Config(format!("unknown model '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldModel::EuclideanStandard { .. } => "euclidean_standard",
            ManifoldModel::EuclideanDeformed { .. } => "euclidean_deformed",
            ManifoldModel::HyperbolicExp => "hyperbolic_exp",
            ManifoldModel::HyperbolicFrameFlat { .. } => "hyperbolic_frame_flat",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ManifoldModel::EuclideanStandard { dim } => *dim,
            ManifoldModel::EuclideanDeformed { dim, .. } => *dim,
            _ => 2,
        }
    }

    pub fn is_flat_underlying(&self) -> bool {
        matches!(
            self,
            ManifoldModel::EuclideanStandard { .. } | ManifoldModel::EuclideanDeformed { .. }
        )
    }

    /// Exponential of the underlying space (used for charts, not `psi`).
    pub fn model_exp(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        if self.is_flat_underlying() {
            p.iter().zip(v).map(|(a, b)| a + b).collect()
        } else {
            hyperbolic::exp(p, v)
        }
    }

    /// Logarithm of the underlying space.
    pub fn model_log(&self, p: &[f64], q: &[f64]) -> Vec<f64> {
        if self.is_flat_underlying() {
            q.iter().zip(p).map(|(a, b)| a - b).collect()
        } else {
            hyperbolic::log(p, q)
        }
    }

    /// The linearization in model coordinates.
    pub fn psi_model(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            ManifoldModel::EuclideanStandard { .. } => {
                p.iter().zip(v).map(|(a, b)| a + b).collect()
            }
            ManifoldModel::EuclideanDeformed { def, .. } => def.psi(p, v),
            ManifoldModel::HyperbolicExp => hyperbolic::exp(p, v),
            ManifoldModel::HyperbolicFrameFlat { frame } => {
                let x = crate::geometry::chart_forward(self, frame, p);
                let dn_inv = self.dchart_inverse(frame, &x);
                let zeta = dn_inv
                    .clone()
                    .lu()
                    .solve(&nalgebra::DVector::from_column_slice(v))
                    .expect("frame differential is invertible");
                let shifted: Vec<f64> = x.iter().zip(zeta.iter()).map(|(a, b)| a + b).collect();
                crate::geometry::chart_inverse(self, frame, &shifted)
            }
        }
    }

    /// Inverse of the linearization in the fiber slot.
    pub fn psi_bar_model(&self, p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
        match self {
            ManifoldModel::EuclideanStandard { .. } => {
                Ok(q.iter().zip(p).map(|(a, b)| a - b).collect())
            }
            ManifoldModel::EuclideanDeformed { def, .. } => def.psi_bar(p, q),
            ManifoldModel::HyperbolicExp => Ok(hyperbolic::log(p, q)),
            ManifoldModel::HyperbolicFrameFlat { frame } => {
                let x = crate::geometry::chart_forward(self, frame, p);
                let y = crate::geometry::chart_forward(self, frame, q);
                let diff: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
                let dn_inv = self.dchart_inverse(frame, &x);
                let v = dn_inv * nalgebra::DVector::from_column_slice(&diff);
                Ok(v.iter().copied().collect())
            }
        }
    }

    /// Differential of `chart_inverse` at a chart point. Exact for affine
    /// charts, finite differences on the hyperbolic exponential otherwise.
    pub fn dchart_inverse(&self, frame: &Frame, x: &[f64]) -> DMatrix<f64> {
        if self.is_flat_underlying() {
            frame.basis.clone()
        } else {
            numeric_jacobian(
                |u: &[f64]| crate::geometry::chart_inverse(self, frame, u),
                x,
                1e-4,
            )
        }
    }

    /// Whether the linearization satisfies the midpoint-symmetry identity
    /// `psi_x(t psi_x^{-1}(y)) = psi_y((1-t) psi_y^{-1}(x))` that interior
    /// orderings require. Use [`check_h_psi`] for a numerical certificate.
    pub fn symmetry_holds(&self) -> bool {
        !matches!(self, ManifoldModel::EuclideanDeformed { .. })
    }

    /// Spot-check `psi(x, 0) = x` and `(d psi_x)_0 = Id` at a few points.
    fn validate(&self) -> Result<()> {
        let n = self.dim();
        let pts: Vec<Vec<f64>> = match n {
            1 => vec![vec![0.0], vec![1.3], vec![-2.1]],
            _ => vec![vec![0.0, 0.0], vec![1.1, -0.7], vec![-0.4, 1.9]],
        };
        for p in &pts {
            let q = self.psi_model(p, &vec![0.0; n]);
            let err: f64 = q.iter().zip(p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if err > 1e-8 {
                return Err(Error::Config(format!(
                    "psi(x,0) != x at {p:?} (error {err:.2e})"
                )));
            }
            let j = numeric_jacobian(|v: &[f64]| self.psi_model(p, v), &vec![0.0; n], 1e-4);
            let mut dev = 0.0f64;
            for i in 0..n {
                for k in 0..n {
                    let target = if i == k { 1.0 } else { 0.0 };
                    dev = dev.max((j[(i, k)] - target).abs());
                }
            }
            if dev > 1e-8 {
                return Err(Error::Config(format!(
                    "(d psi_x)_0 != Id at {p:?} (deviation {dev:.2e})"
                )));
            }
        }
        Ok(())
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Config(format!("dimension {dim} unsupported (use 1 or 2)")))
    }
}

/// Result of the midpoint-symmetry certificate.
#[derive(Debug, Clone)]
pub struct SymmetryCheck {
    pub max_residual: f64,
    pub samples: usize,
    pub seed: u64,
    pub pass: bool,
}

pub const H_PSI_TOLERANCE: f64 = 1e-7;

/// Sample the identity `psi_x(t psi_x^{-1}(y)) = psi_y((1-t) psi_y^{-1}(x))`
/// at random `(x, y, t)` and report the largest residual. Pass iff the
/// maximum is at most 1e-7.
pub fn check_h_psi(model: &ManifoldModel, samples: usize, seed: u64) -> Result<SymmetryCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.dim();
    let mut max_res = 0.0f64;
    for _ in 0..samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.5..2.5)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.5..2.5)).collect();
        let t: f64 = rng.gen_range(0.0..1.0);
        let vxy = model.psi_bar_model(&x, &y)?;
        let vyx = model.psi_bar_model(&y, &x)?;
        let lhs = model.psi_model(&x, &vxy.iter().map(|v| t * v).collect::<Vec<_>>());
        let rhs = model.psi_model(&y, &vyx.iter().map(|v| (1.0 - t) * v).collect::<Vec<_>>());
        let res = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_res = max_res.max(res);
    }
    Ok(SymmetryCheck {
        max_residual: max_res,
        samples,
        seed,
        pass: max_res <= H_PSI_TOLERANCE,
    })
}

/// RK4 geodesic integration in model coordinates (flat models: straight lines).
pub fn geodesic_ode(
    model: &ManifoldModel,
    p: &[f64],
    v: &[f64],
    t: f64,
    dt: f64,
) -> (Vec<f64>, Vec<f64>) {
    if model.is_flat_underlying() {
        let pos = p.iter().zip(v).map(|(a, b)| a + t * b).collect();
        (pos, v.to_vec())
    } else {
        hyperbolic::geodesic_ode(p, v, t, dt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetry_passes_on_standard_and_hyperbolic() {
        let m = ManifoldModel::euclidean_standard(2).unwrap();
        assert!(check_h_psi(&m, 50, 7).unwrap().pass);
        let m = ManifoldModel::hyperbolic_exp();
        assert!(check_h_psi(&m, 50, 7).unwrap().pass);
    }

    #[test]
    fn symmetry_fails_on_deformed() {
        let m = ManifoldModel::euclidean_deformed(2, 1.0, 0.1).unwrap();
        let chk = check_h_psi(&m, 50, 7).unwrap();
        assert!(!chk.pass);
        assert!(chk.max_residual > 1e-6);
    }

    #[test]
    fn flat_frame_model_is_symmetric() {
        let m =
            ManifoldModel::hyperbolic_frame_flat(Frame::identity(2, vec![0.0, 0.0])).unwrap();
        let chk = check_h_psi(&m, 30, 11).unwrap();
        assert!(chk.pass, "residual {}", chk.max_residual);
    }
}
