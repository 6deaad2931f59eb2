//! Ordering conversion: re-expands a symbol taken at one ordering parameter
//! into the asymptotic expansion of the same operator at another. Affine
//! frames with position-independent density collapse to the classical
//! mixed-derivative series; everything else builds the conversion factor as
//! a fiber jet at each lattice point.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::QuantizationSpec;
use crate::geometry::{jacobian_det, JetSpace, MultiIndex};
use crate::grid::{symbol_partial, SymbolGrid};
use crate::{Error, Result};

/// Highest supported expansion order.
pub const CONVERT_ORDER_CAP: usize = 3;

/// Expansion coefficient `(i / 2 pi)^{|beta|} / beta!`.
fn series_coeff(beta: &MultiIndex) -> Complex64 {
    let k = beta.order();
    Complex64::new(0.0, 1.0 / (2.0 * PI)).powu(k) / beta.factorial() as f64
}

/// Symbol of the same operator at ordering parameter `lambda_to`, truncated
/// at `order` correction terms.
pub fn lambda_convert(
    q: &QuantizationSpec,
    a: &SymbolGrid,
    lambda_to: f64,
    order: usize,
) -> Result<SymbolGrid> {
    if order > CONVERT_ORDER_CAP {
        return Err(Error::CapExceeded(format!(
            "conversion order {order} exceeds the supported cap {CONVERT_ORDER_CAP}"
        )));
    }
    a.require_dual_pair()?;
    q.maps.ordering_allowed(q.lambda)?;
    q.maps.ordering_allowed(lambda_to)?;
    if a.base.dim != q.dim() {
        return Err(Error::GridMismatch(format!(
            "symbol dim {} vs model dim {}",
            a.base.dim,
            q.dim()
        )));
    }
    let t = lambda_to - q.lambda;
    if t.abs() < 1e-14 || order == 0 {
        return Ok(a.clone());
    }
    // the density ratio mu(psi(x, t z)) / mu(x) is identically 1 exactly
    // when the frame map is affine over a flat background
    let fast = q.maps.is_affine()
        && (q.maps.mu_lambda_is_trivial(&q.density) || q.maps.model.is_flat_underlying());
    if fast {
        affine_convert(a, t, order)
    } else {
        generic_convert(q, a, t, order)
    }
}

/// `sum_beta c_beta t^{|beta|} d_x^beta d_theta^beta a`.
fn affine_convert(a: &SymbolGrid, t: f64, order: usize) -> Result<SymbolGrid> {
    let dim = a.base.dim;
    let mut out = a.clone();
    for beta in MultiIndex::up_to_order(dim, order as u32) {
        if beta.order() == 0 {
            continue;
        }
        let d = symbol_partial(a, &beta, &beta)?;
        let c = series_coeff(&beta) * t.powi(beta.order() as i32);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            *o += c * v;
        }
    }
    Ok(out)
}

fn generic_convert(
    q: &QuantizationSpec,
    a: &SymbolGrid,
    t: f64,
    order: usize,
) -> Result<SymbolGrid> {
    let dim = a.base.dim;
    let nf = a.cov.len();
    let space = JetSpace::new(dim, order as u32);
    let betas: Vec<MultiIndex> = MultiIndex::up_to_order(dim, order as u32);
    // joint Taylor data of the symbol, shared across all lattice points
    let mut pairs: Vec<(MultiIndex, MultiIndex, f64)> = Vec::new();
    let mut deriv_grids: Vec<SymbolGrid> = Vec::new();
    for alpha in MultiIndex::up_to_order(dim, order as u32) {
        for delta in MultiIndex::up_to_order(dim, order as u32) {
            if alpha.order() + delta.order() > order as u32 {
                continue;
            }
            let inv_fact = 1.0 / (alpha.factorial() as f64 * delta.factorial() as f64);
            deriv_grids.push(symbol_partial(a, &alpha, &delta)?);
            pairs.push((alpha.clone(), delta, inv_fact));
        }
    }
    let center = vec![0.0; dim];
    let mu_jet_h = 1e-3;
    let inner_h = 1e-4;
    // per-base-point fiber jets, then the raw fiber derivatives of the
    // conversion integrand for every correction index
    let per_x: Vec<Result<Vec<Vec<Complex64>>>> = (0..a.base.len())
        .into_par_iter()
        .map(|ixf| {
            let x = a.base.point(ixf);
            let failure: RefCell<Option<Error>> = RefCell::new(None);
            // base-point deviation psi(x, t z) - x as a fiber jet
            let mdev_raw = space.jets_of_map(
                |z| {
                    let tz: Vec<f64> = z.iter().map(|c| c * t).collect();
                    let p = q.maps.psi(&x, &tz);
                    p.iter().zip(&x).map(|(pc, xc)| pc - xc).collect()
                },
                &center,
                dim,
                mu_jet_h,
            );
            let mdev: Vec<_> = mdev_raw
                .iter()
                .map(|j| space.filter(j, |m| m.order() >= 1))
                .collect();
            // transpose-inverse transport minus the identity
            let qm1 = space.jets_of_map(
                |z| {
                    let tz: Vec<f64> = z.iter().map(|c| c * t).collect();
                    let p = match q.maps.transport(&x, &tz) {
                        Ok(p) => p,
                        Err(e) => {
                            *failure.borrow_mut() = Some(e);
                            return vec![0.0; dim * dim];
                        }
                    };
                    let inv = match p.transpose().try_inverse() {
                        Some(m) => m,
                        None => {
                            *failure.borrow_mut() =
                                Some(Error::InverseFailure("transport matrix is singular".into()));
                            return vec![0.0; dim * dim];
                        }
                    };
                    let mut flat = Vec::with_capacity(dim * dim);
                    for i in 0..dim {
                        for j in 0..dim {
                            flat.push(inv[(i, j)] - if i == j { 1.0 } else { 0.0 });
                        }
                    }
                    flat
                },
                &center,
                dim * dim,
                mu_jet_h,
            );
            // scalar conversion factor: density ratio x fiber substitution
            // Jacobian x inverse transport determinant
            let mu_x = q.maps.mu_weight(&q.density, &x);
            let cfac = space.jets_of_map(
                |z| {
                    let tz: Vec<f64> = z.iter().map(|c| c * t).collect();
                    let p = q.maps.psi(&x, &tz);
                    let ratio = q.maps.mu_weight(&q.density, &p) / mu_x;
                    let jt = jacobian_det(
                        |zz| match q.maps.upsilon_tangent(t, &x, zz) {
                            Ok(v) => v,
                            Err(e) => {
                                *failure.borrow_mut() = Some(e);
                                vec![0.0; dim]
                            }
                        },
                        z,
                        inner_h,
                    )
                    .abs();
                    let dp = match q.maps.transport(&x, &tz) {
                        Ok(p) => p.determinant().abs(),
                        Err(e) => {
                            *failure.borrow_mut() = Some(e);
                            1.0
                        }
                    };
                    vec![ratio * jt / dp]
                },
                &center,
                1,
                mu_jet_h,
            )
            .pop()
            .expect("one output component");
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            // powers of the base deviation, shared by every fiber point
            let max_p = order as u32;
            let mut mpow: Vec<Vec<_>> = Vec::with_capacity(dim);
            for j in mdev.iter() {
                let mut pows = vec![space.constant(Complex64::new(1.0, 0.0))];
                for p in 1..=max_p {
                    let prev = &pows[(p - 1) as usize];
                    pows.push(space.mul(prev, j));
                }
                mpow.push(pows);
            }
            let mut rows = vec![vec![Complex64::new(0.0, 0.0); nf]; betas.len()];
            for it in 0..nf {
                let theta = a.cov.point(it);
                // covector deviation (Q - I) theta as fiber jets
                let mut tdev = Vec::with_capacity(dim);
                for i in 0..dim {
                    let mut acc = space.zero();
                    for (j, th) in theta.iter().enumerate() {
                        let scaled = space.scale(&qm1[i * dim + j], Complex64::new(*th, 0.0));
                        acc = space.add(&acc, &scaled);
                    }
                    tdev.push(acc);
                }
                let mut tpow: Vec<Vec<_>> = Vec::with_capacity(dim);
                for j in tdev.iter() {
                    let mut pows = vec![space.constant(Complex64::new(1.0, 0.0))];
                    for p in 1..=max_p {
                        let prev = &pows[(p - 1) as usize];
                        pows.push(space.mul(prev, j));
                    }
                    tpow.push(pows);
                }
                let mut total = space.zero();
                for ((alpha, delta, inv_fact), grid) in pairs.iter().zip(&deriv_grids) {
                    let dval = grid.data[ixf * nf + it];
                    if dval.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut term = space.constant(dval * *inv_fact);
                    for ax in 0..dim {
                        if alpha.0[ax] > 0 {
                            term = space.mul(&term, &mpow[ax][alpha.0[ax] as usize]);
                        }
                        if delta.0[ax] > 0 {
                            term = space.mul(&term, &tpow[ax][delta.0[ax] as usize]);
                        }
                    }
                    total = space.add(&total, &term);
                }
                total = space.mul(&cfac, &total);
                for (bi, beta) in betas.iter().enumerate() {
                    rows[bi][it] = space.raw_derivative(&total, beta);
                }
            }
            Ok(rows)
        })
        .collect();
    // assemble one grid per correction index, then apply the outer fiber
    // derivatives and sum the series
    let mut f_grids: Vec<SymbolGrid> = betas
        .iter()
        .map(|_| SymbolGrid::zeros(a.base.clone(), a.cov.clone(), a.class.clone()))
        .collect::<Result<_>>()?;
    for (ixf, rows) in per_x.into_iter().enumerate() {
        let rows = rows?;
        for (bi, row) in rows.into_iter().enumerate() {
            f_grids[bi].fiber_mut(ixf).copy_from_slice(&row);
        }
    }
    let mut out = SymbolGrid::zeros(a.base.clone(), a.cov.clone(), a.class.clone())?;
    let zero_alpha = MultiIndex::zero(dim);
    for (beta, fg) in betas.iter().zip(&f_grids) {
        let d = symbol_partial(fg, &zero_alpha, beta)?;
        let c = series_coeff(beta);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            *o += c * v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Density, Frame};
    use crate::grid::{ClassMeta, GridSpec};
    use crate::models::ManifoldModel;

    fn euclid(lambda: f64) -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), lambda).unwrap()
    }

    fn gaussian_symbol(base: &GridSpec) -> SymbolGrid {
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov.clone(), ClassMeta::order_zero(0.0)).unwrap();
        for ix in 0..base.len() {
            let x = base.point(ix);
            let fiber = a.fiber_mut(ix);
            for (it, slot) in fiber.iter_mut().enumerate() {
                let th = cov.point(it);
                let q: f64 =
                    x.iter().map(|c| c * c).sum::<f64>() + th.iter().map(|c| c * c).sum::<f64>();
                *slot = Complex64::new((-PI * q).exp(), 0.0);
            }
        }
        a
    }

    #[test]
    fn first_correction_matches_closed_form() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 6.0, 64).unwrap();
        let a = gaussian_symbol(&base);
        let t = 0.1;
        let got = lambda_convert(&q, &a, t, 1).unwrap();
        // d_x d_theta e^{-pi(x^2+theta^2)} = 4 pi^2 x theta e^{-...}, so the
        // first correction is t (i/2pi) 4 pi^2 x theta a = 2 pi i t x theta a
        let cov = base.dual();
        let mut expect = a.clone();
        for ix in 0..base.len() {
            let x = base.coord(ix);
            for it in 0..cov.len() {
                let th = cov.coord(it);
                let factor = Complex64::new(1.0, 2.0 * PI * t * x * th);
                expect.data[ix * cov.len() + it] *= factor;
            }
        }
        let err = got.rel_l2_error(&expect);
        // remainder is the genuine t^2 term plus stencil truncation
        assert!(err < 5e-3, "first-order conversion error {err:.3e}");
        // and the zeroth-order answer must be measurably worse
        let raw = a.rel_l2_error(&expect);
        assert!(raw > 5.0 * err, "correction did not help: {raw:.3e} vs {err:.3e}");
    }

    #[test]
    fn generic_path_agrees_with_affine_path() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 5.0, 32).unwrap();
        let a = gaussian_symbol(&base);
        for order in [1usize, 2] {
            let fast = affine_convert(&a, 0.5, order).unwrap();
            let slow = generic_convert(&q, &a, 0.5, order).unwrap();
            let err = slow.rel_l2_error(&fast);
            assert!(err < 1e-7, "order {order}: path mismatch {err:.3e}");
        }
    }

    #[test]
    fn zero_shift_is_identity() {
        let q = euclid(0.5);
        let base = GridSpec::new(1, 5.0, 32).unwrap();
        let a = gaussian_symbol(&base);
        let out = lambda_convert(&q, &a, 0.5, 2).unwrap();
        assert!(out.rel_l2_error(&a) < 1e-14);
    }

    #[test]
    fn order_cap_is_enforced() {
        let q = euclid(0.0);
        let base = GridSpec::new(1, 5.0, 16).unwrap();
        let a = gaussian_symbol(&base);
        assert!(matches!(
            lambda_convert(&q, &a, 1.0, 4),
            Err(Error::CapExceeded(_))
        ));
    }
}
