//! Geometry of two successive linearized displacements.
//!
//! Fix a frame and write `c(x, z) = psi(x, -z)` for the point reached from
//! `x` by the displacement `z`. Applying two displacements in sequence lands
//! at `c(c(x, z), z')`; the maps below describe that compound move as seen
//! from `x`:
//!
//! * `r(x, z, z')` — the single displacement from `x` reaching the compound
//!   endpoint,
//! * `s = r - z` — the part contributed by the second hop,
//! * `phi = r - z - (dr)_0 z'` — the quadratic remainder of `r` in `z'`,
//! * `L = -transpose((dr)_0)` — the leading linearization, transposed for
//!   action on covariables,
//! * `q(x, z, z')` — the second displacement transported back along the
//!   first.
//!
//! On a flat model with the affine linearization, `r = z + z'`, `phi = 0`
//! and `L = -Id`; everything here measures the deviation from that case.

use nalgebra::{DMatrix, DVector};

use crate::geometry::{jacobian_det, numeric_jacobian};
use crate::models::FrameMaps;
use crate::{Error, Result};

/// Step for derivatives of the displacement maps; these are smooth
/// chart-level callables, so the generic jet step applies.
const GEOMETRY_STEP: f64 = 1e-3;
/// Tighter step for the Jacobian determinant of the stacked (r, q) map,
/// which sits inside another derivative in the expansion assembly.
const JACOBIAN_STEP: f64 = 1e-4;

pub struct CompositionGeometry<'a> {
    pub maps: &'a FrameMaps,
}

pub fn composition_geometry(maps: &FrameMaps) -> CompositionGeometry<'_> {
    CompositionGeometry { maps }
}

impl<'a> CompositionGeometry<'a> {
    pub fn dim(&self) -> usize {
        self.maps.dim()
    }

    fn neg(v: &[f64]) -> Vec<f64> {
        v.iter().map(|c| -c).collect()
    }

    /// Endpoint of the compound move: `c(c(x, z), z')`.
    pub fn combined_point(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Vec<f64> {
        let mid = self.maps.psi(x, &Self::neg(z));
        self.maps.psi(&mid, &Self::neg(zp))
    }

    /// Combined displacement seen from `x`.
    pub fn r(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
        let end = self.combined_point(x, z, zp);
        Ok(Self::neg(&self.maps.psi_bar(x, &end)?))
    }

    /// Second-hop contribution `r - z`; vanishes at `z' = 0`.
    pub fn s(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.r(x, z, zp)?;
        for (o, zi) in out.iter_mut().zip(z) {
            *o -= zi;
        }
        Ok(out)
    }

    /// Derivative of `z' -> r(x, z, z')` at `z' = 0`.
    pub fn dr0(&self, x: &[f64], z: &[f64]) -> Result<DMatrix<f64>> {
        self.dr_at(x, z, &vec![0.0; self.dim()])
    }

    /// Derivative of `z' -> r(x, z, z')` at `z'`.
    pub fn dr_at(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
        let err = std::cell::RefCell::new(None);
        let jac = numeric_jacobian(
            |w| match self.r(x, z, w) {
                Ok(v) => v,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    vec![0.0; self.dim()]
                }
            },
            zp,
            GEOMETRY_STEP,
        );
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(jac),
        }
    }

    /// Quadratic remainder `phi_{x,z}(z') = r - z - (dr)_0 z'`.
    pub fn phi(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.s(x, z, zp)?;
        let lin = self.dr0(x, z)? * DVector::from_column_slice(zp);
        for (o, l) in out.iter_mut().zip(lin.iter()) {
            *o -= l;
        }
        Ok(out)
    }

    /// `V(x, z, z') = (dr_{x,z})_{z'}`, the quantity whose amplitude-class
    /// control the composition theorem assumes.
    pub fn v_matrix(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
        self.dr_at(x, z, zp)
    }

    /// `L_{x,z} = -transpose((dr_{x,z})_0)`.
    pub fn l_matrix(&self, x: &[f64], z: &[f64]) -> Result<DMatrix<f64>> {
        Ok(-self.dr0(x, z)?.transpose())
    }

    /// Parallel transport along the second hop, taken from the intermediate
    /// point `c(x, z)` in the direction `-z'`.
    pub fn second_transport(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<DMatrix<f64>> {
        let mid = self.maps.psi(x, &Self::neg(z));
        self.maps.transport(&mid, &Self::neg(zp))
    }

    /// Second displacement transported back: `q = -P z'`.
    pub fn q(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<Vec<f64>> {
        let p = self.second_transport(x, z, zp)?;
        let v = p * DVector::from_column_slice(zp);
        Ok(v.iter().map(|c| -c).collect())
    }

    /// Jacobian determinant of the stacked map `(z, z') -> (r, q)`.
    pub fn r_q_jacobian(&self, x: &[f64], z: &[f64], zp: &[f64]) -> Result<f64> {
        let n = self.dim();
        let mut w0 = Vec::with_capacity(2 * n);
        w0.extend_from_slice(z);
        w0.extend_from_slice(zp);
        let err = std::cell::RefCell::new(None);
        let det = jacobian_det(
            |w| {
                let (za, zb) = w.split_at(n);
                let stacked = self
                    .r(x, za, zb)
                    .and_then(|mut rv| {
                        let qv = self.q(x, za, zb)?;
                        rv.extend(qv);
                        Ok(rv)
                    });
                match stacked {
                    Ok(v) => v,
                    Err(e) => {
                        *err.borrow_mut() = Some(e);
                        vec![0.0; 2 * n]
                    }
                }
            },
            &w0,
            JACOBIAN_STEP,
        );
        match err.into_inner() {
            Some(e) => Err(e),
            None if det.is_finite() => Ok(det),
            None => Err(Error::Numeric(
                "displacement-composition Jacobian did not evaluate to a finite value".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Frame;
    use crate::models::ManifoldModel;
    use nalgebra::DMatrix;

    fn maps_for(model: ManifoldModel) -> FrameMaps {
        let dim = match &model {
            ManifoldModel::EuclideanStandard { dim } => *dim,
            _ => 2,
        };
        let f = Frame::identity(dim, vec![0.0; dim]);
        FrameMaps::new(model, f).unwrap()
    }

    #[test]
    fn flat_model_displacements_add() {
        let maps = maps_for(ManifoldModel::euclidean_standard(2).unwrap());
        let geo = composition_geometry(&maps);
        let x = [0.3, -0.7];
        let z = [1.1, 0.4];
        let zp = [-0.6, 0.9];
        let r = geo.r(&x, &z, &zp).unwrap();
        for j in 0..2 {
            assert!((r[j] - (z[j] + zp[j])).abs() < 1e-12);
        }
        let l = geo.l_matrix(&x, &z).unwrap();
        let id = DMatrix::<f64>::identity(2, 2);
        assert!((l + &id).norm() < 1e-9);
        let q = geo.q(&x, &z, &zp).unwrap();
        for j in 0..2 {
            assert!((q[j] + zp[j]).abs() < 1e-12);
        }
        assert!((geo.r_q_jacobian(&x, &z, &zp).unwrap().abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_hop_part_vanishes_without_second_displacement() {
        let maps = maps_for(ManifoldModel::hyperbolic_exp());
        let geo = composition_geometry(&maps);
        let zero = [0.0, 0.0];
        for (x, z) in [
            ([0.4, -0.2], [0.8, 0.3]),
            ([-1.0, 0.6], [0.0, -1.2]),
            ([0.0, 0.0], [2.0, 1.0]),
        ] {
            let s = geo.s(&x, &z, &zero).unwrap();
            let norm: f64 = s.iter().map(|c| c * c).sum::<f64>().sqrt();
            assert!(norm < 1e-9, "s(0) = {norm:.3e} at x={x:?} z={z:?}");
        }
    }

    #[test]
    fn quadratic_remainder_invariants() {
        let maps = maps_for(ManifoldModel::hyperbolic_exp());
        let geo = composition_geometry(&maps);
        let x = [0.5, -0.3];
        let z = [0.7, 0.2];
        // phi(0) = 0
        let p0 = geo.phi(&x, &z, &[0.0, 0.0]).unwrap();
        assert!(p0.iter().map(|c| c.abs()).fold(0.0, f64::max) < 1e-8);
        // (d phi)_0 = 0
        let err = std::cell::RefCell::new(None);
        let dphi = numeric_jacobian(
            |zp| match geo.phi(&x, &z, zp) {
                Ok(v) => v,
                Err(e) => {
                    *err.borrow_mut() = Some(e);
                    vec![0.0; 2]
                }
            },
            &[0.0, 0.0],
            1e-3,
        );
        assert!(err.into_inner().is_none());
        assert!(dphi.norm() < 1e-8, "d phi at 0: {:.3e}", dphi.norm());
    }

    #[test]
    fn quadratic_remainder_is_second_order() {
        // log-log slope of |phi| against |z'| should be at least 1.9 near 0
        let maps = maps_for(ManifoldModel::hyperbolic_exp());
        let geo = composition_geometry(&maps);
        let x = [0.2, 0.4];
        let z = [0.5, -0.8];
        let dir = [0.6, 0.8];
        let mut pts = Vec::new();
        for k in 0..8 {
            let t = 0.4 * 0.7f64.powi(k);
            let zp: Vec<f64> = dir.iter().map(|d| d * t).collect();
            let phi = geo.phi(&x, &z, &zp).unwrap();
            let norm: f64 = phi.iter().map(|c| c * c).sum::<f64>().sqrt();
            pts.push((t.ln(), norm.ln()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(slope >= 1.9, "remainder order {slope:.3}");
    }
}
