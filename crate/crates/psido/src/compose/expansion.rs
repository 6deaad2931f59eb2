//! Truncated asymptotic expansion of the left-ordered product symbol.
//!
//! For left-quantized operators `A = Op(a)`, `B = Op(b)` the product symbol
//! admits the double expansion
//!
//! ```text
//! sigma(AB)(x, th) ~ sum_{beta, gamma} c_beta c_gamma
//!     d_z^gamma d_th^gamma [ a(x, th) *
//!         d_z'^beta ( e^{2 pi i <th, phi_{x,z}(z')>} (d_th'^beta f_b)(x, z, z', L_{x,z}(th)) )|_{z'=0}
//!     ]|_{z=0},
//! c_beta = (i / 2 pi)^{|beta|} / beta!,
//! ```
//!
//! where `f_b(x, z, z', th') = b(endpoint, -transpose(P^-1) th') |J(R)| |det P|^-1`
//! collects the second factor pulled through the composed displacement
//! geometry (see the geometry module for `r`, `phi`, `L`, `q`, `P`).
//!
//! Evaluation strategy: all dependence on `w = (z, z')` is expanded in
//! Taylor jets at `w = 0` up to the truncation order. The geometry jets
//! come from finite differences of the exact chart-level maps; the factor
//! `b` enters through its lattice derivatives at the evaluation node (the
//! same stencils the classical product oracle uses), multiplied by jet
//! powers of the endpoint and covariable deviations, both of which vanish
//! at `w = 0`. The coefficient of `z^gamma z'^beta` then yields the inner
//! bracket exactly, and the outer covariable derivative is applied as a
//! lattice stencil, split by the Leibniz rule between the `a` factor and
//! the assembled bracket. On a flat affine model this reduces the whole
//! scheme, stencil for stencil, to the classical flat-calculus expansion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::compose::geometry::{composition_geometry, CompositionGeometry};
use crate::compose::kernels::{moyal_product, product_class, MoyalMode};
use crate::geometry::{numeric_jacobian, Jet, JetSpace, MultiIndex};
use crate::grid::{symbol_partial, SymbolGrid};
use crate::quantize::QuantizationSpec;
use crate::{Error, Result};

/// Each additional order costs a full set of nested jet derivatives of the
/// displacement geometry; two orders carry all the structure the remainder
/// estimates control.
pub const COMPOSE_ORDER_CAP: usize = 2;

const JET_STEP: f64 = 1e-3;

/// Coefficient `(i / 2 pi)^k`.
fn phase_power(k: u32) -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * PI)).powu(k)
}

fn multi_binom(a: &MultiIndex, b: &MultiIndex) -> f64 {
    let num = a.factorial() as f64;
    let den = b.factorial() as f64 * a.sub(b).expect("binom needs b <= a").factorial() as f64;
    num / den
}

/// Jets at `w = 0` of every geometric ingredient of the expansion, for one
/// base point.
struct GeoJets {
    /// Endpoint deviation `x^{z,z'} - x`, one jet per component.
    ydev: Vec<Jet>,
    /// Quadratic remainder of the combined displacement; degree >= 2.
    phi: Vec<Jet>,
    /// Covariable substitution matrix `-transpose(P^-1)`.
    tmat: Vec<Vec<Jet>>,
    /// `tmat * L - Id`: deviation of the covariable argument from the
    /// evaluation node; vanishes at `w = 0`.
    cdev: Vec<Vec<Jet>>,
    /// `|J(R)| |det P|^-1`.
    gfac: Jet,
}

fn affine_geo_jets(js: &JetSpace, n: usize) -> GeoJets {
    let zero = js.zero();
    let one = js.constant(Complex64::new(1.0, 0.0));
    let m_one = js.constant(Complex64::new(-1.0, 0.0));
    let ydev = (0..n)
        .map(|j| {
            let s = js.add(&js.coordinate(j), &js.coordinate(n + j));
            js.scale(&s, Complex64::new(-1.0, 0.0))
        })
        .collect();
    let tmat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { m_one.clone() } else { zero.clone() })
                .collect()
        })
        .collect();
    let cdev = vec![vec![zero.clone(); n]; n];
    GeoJets {
        ydev,
        phi: vec![zero; n],
        tmat,
        cdev,
        gfac: one,
    }
}

fn numeric_geo_jets(js: &JetSpace, geo: &CompositionGeometry, x: &[f64]) -> Result<GeoJets> {
    let n = geo.dim();
    let origin = vec![0.0; 2 * n];
    let err = std::cell::RefCell::new(None);
    let capture = |e: Error| -> Vec<f64> {
        let dim_fallback = err.borrow().is_some();
        if !dim_fallback {
            *err.borrow_mut() = Some(e);
        }
        Vec::new()
    };
    let guard = |v: crate::Result<Vec<f64>>, len: usize| -> Vec<f64> {
        match v {
            Ok(out) => out,
            Err(e) => {
                capture(e);
                vec![0.0; len]
            }
        }
    };

    let endpoint = js.jets_of_map(
        |w| {
            let (z, zp) = w.split_at(n);
            geo.combined_point(x, z, zp)
        },
        &origin,
        n,
        JET_STEP,
    );
    let ydev: Vec<Jet> = endpoint
        .iter()
        .enumerate()
        .map(|(j, jet)| js.sub(jet, &js.constant(Complex64::new(x[j], 0.0))))
        .collect();

    let rjets = js.jets_of_map(
        |w| {
            let (z, zp) = w.split_at(n);
            guard(geo.r(x, z, zp), n)
        },
        &origin,
        n,
        JET_STEP,
    );

    // entries of P and of transpose(P^-1), stacked
    let tp = js.jets_of_map(
        |w| {
            let (z, zp) = w.split_at(n);
            let p = match geo.second_transport(x, z, zp) {
                Ok(p) => p,
                Err(e) => {
                    capture(e);
                    return vec![0.0; 2 * n * n];
                }
            };
            let pinv = match p.clone().try_inverse() {
                Some(m) => m,
                None => {
                    capture(Error::InverseFailure(
                        "second-hop transport is singular".into(),
                    ));
                    return vec![0.0; 2 * n * n];
                }
            };
            let pt = pinv.transpose();
            let mut out = Vec::with_capacity(2 * n * n);
            for i in 0..n {
                for j in 0..n {
                    out.push(p[(i, j)]);
                }
            }
            for i in 0..n {
                for j in 0..n {
                    out.push(pt[(i, j)]);
                }
            }
            out
        },
        &origin,
        2 * n * n,
        JET_STEP,
    );
    let pmat: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| tp[i * n + j].clone()).collect())
        .collect();
    let tmat: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| js.scale(&tp[n * n + i * n + j], Complex64::new(-1.0, 0.0)))
                .collect()
        })
        .collect();

    // keep only the part of a joint jet that does not involve z'
    let z_part = |jet: &Jet| js.filter(jet, |m| m.0[n..].iter().all(|&v| v == 0));

    // L_{jk}(z) = -(d r_k / d z'_j)(z, 0)
    let lmat: Vec<Vec<Jet>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|k| {
                    let d = js.derivative(&rjets[k], n + j);
                    js.scale(&z_part(&d), Complex64::new(-1.0, 0.0))
                })
                .collect()
        })
        .collect();

    let mut cdev = vec![vec![js.zero(); n]; n];
    for i in 0..n {
        for k in 0..n {
            let mut acc = js.zero();
            for m in 0..n {
                acc = js.add(&acc, &js.mul(&tmat[i][m], &lmat[m][k]));
            }
            if i == k {
                acc = js.sub(&acc, &js.constant(Complex64::new(1.0, 0.0)));
            }
            cdev[i][k] = acc;
        }
    }

    // phi_j = r_j - z_j - sum_k (d r_j / d z'_k)(z, 0) z'_k; its jet starts
    // at total degree two, so drop the numerically-noisy lower slots.
    let phi: Vec<Jet> = (0..n)
        .map(|j| {
            let mut p = js.sub(&rjets[j], &js.coordinate(j));
            for k in 0..n {
                let d = z_part(&js.derivative(&rjets[j], n + k));
                p = js.sub(&p, &js.mul(&d, &js.coordinate(n + k)));
            }
            js.filter(&p, |m| m.order() >= 2)
        })
        .collect();

    // |J(R)| |det P|^-1 as a jet: Jacobian entries of the stacked map by an
    // inner difference, their jets by the outer one.
    let jac_entries = js.jets_of_map(
        |w| {
            let jac = numeric_jacobian(
                |u| {
                    let (z, zp) = u.split_at(n);
                    let mut out = guard(geo.r(x, z, zp), n);
                    out.extend(guard(geo.q(x, z, zp), n));
                    out
                },
                w,
                1e-4,
            );
            let mut out = Vec::with_capacity(4 * n * n);
            for i in 0..2 * n {
                for j in 0..2 * n {
                    out.push(jac[(i, j)]);
                }
            }
            out
        },
        &origin,
        4 * n * n,
        JET_STEP,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    let jac_mat: Vec<Vec<Jet>> = (0..2 * n)
        .map(|i| (0..2 * n).map(|j| jac_entries[i * 2 * n + j].clone()).collect())
        .collect();
    let det_r = js.det(&jac_mat);
    let det_r0 = det_r.0[0].re;
    if det_r0.abs() < 1e-8 {
        return Err(Error::Numeric(
            "displacement-composition geometry is degenerate at this base point".into(),
        ));
    }
    let abs_det_r = js.scale(&det_r, Complex64::new(det_r0.signum(), 0.0));
    let det_p = js.det(&pmat);
    if det_p.0[0].re.abs() < 1e-8 {
        return Err(Error::Numeric("second-hop transport is degenerate".into()));
    }
    let abs_det_p = js.scale(&det_p, Complex64::new(det_p.0[0].re.signum(), 0.0));
    let gfac = js.mul(&abs_det_r, &js.recip(&abs_det_p));

    Ok(GeoJets {
        ydev,
        phi,
        tmat,
        cdev,
        gfac,
    })
}

/// One pre-resolved contribution to the jet of the inner bracket for a
/// fixed derivative index `beta`.
struct BracketTerm {
    /// Row/column pairs whose `tmat` entries multiply into the chain factor.
    factors: Vec<(usize, usize)>,
    /// (endpoint-power slot, covariable-power slot, lattice-derivative slot,
    /// inverse factorial weight) of each Taylor contribution.
    taylor: Vec<(usize, usize, usize, f64)>,
}

pub fn composition_expansion(
    spec: &QuantizationSpec,
    a: &SymbolGrid,
    b: &SymbolGrid,
    order: usize,
) -> Result<SymbolGrid> {
    if order > COMPOSE_ORDER_CAP {
        return Err(Error::CapExceeded(format!(
            "composition expansion supports order <= {COMPOSE_ORDER_CAP}, got {order}"
        )));
    }
    if spec.lambda.abs() > 1e-12 {
        return Err(Error::Config(
            "the product expansion is stated for the left ordering; convert the factors to lambda = 0 first"
                .into(),
        ));
    }
    composition_expansion_impl(spec, a, b, order, spec.maps.is_affine())
}

/// Internal entry point that can force the numeric-geometry path on models
/// where the affine short cut would normally apply.
pub(crate) fn composition_expansion_impl(
    spec: &QuantizationSpec,
    a: &SymbolGrid,
    b: &SymbolGrid,
    order: usize,
    affine: bool,
) -> Result<SymbolGrid> {
    a.require_dual_pair()?;
    if !a.base.same_shape(&b.base) || !a.cov.same_shape(&b.cov) {
        return Err(Error::GridMismatch(
            "symbol product factors must live on the same lattices".into(),
        ));
    }
    let class = product_class(a, b)?;
    let n = a.base.dim;
    let nx = a.base.len();
    let ntheta = a.cov.len();
    let cap = order as u32;

    // multi-indices up to the truncation order; shared index space for
    // Taylor powers in both the endpoint and covariable deviations
    let monos = MultiIndex::up_to_order(n, cap);
    let mono_slot: BTreeMap<Vec<u32>, usize> = monos
        .iter()
        .enumerate()
        .map(|(i, m)| (m.0.clone(), i))
        .collect();

    let pairs: Vec<(MultiIndex, MultiIndex)> = monos
        .iter()
        .flat_map(|beta| {
            monos
                .iter()
                .filter(|gamma| beta.order() + gamma.order() <= cap)
                .map(|gamma| (beta.clone(), gamma.clone()))
                .collect::<Vec<_>>()
        })
        .collect();

    // lattice derivatives of b, keyed by (base-index, covariable-index)
    let mut b_slot: BTreeMap<(Vec<u32>, Vec<u32>), usize> = BTreeMap::new();
    let mut b_store: Vec<Vec<Complex64>> = Vec::new();
    // per-beta instruction lists
    let mut brackets: Vec<Vec<BracketTerm>> = Vec::with_capacity(monos.len());
    for beta in &monos {
        let mut axes = Vec::new();
        for (ax, &mult) in beta.0.iter().enumerate() {
            for _ in 0..mult {
                axes.push(ax);
            }
        }
        let mut terms = Vec::new();
        let mut tuple = vec![0usize; axes.len()];
        loop {
            // chain factor for this assignment of substitution rows
            let factors: Vec<(usize, usize)> =
                tuple.iter().zip(&axes).map(|(&k, &ax)| (k, ax)).collect();
            let mut btilde = MultiIndex::zero(n);
            for &k in &tuple {
                btilde = btilde.add(&MultiIndex::unit(n, k));
            }
            let mut taylor = Vec::new();
            for (ai, alpha) in monos.iter().enumerate() {
                for (di, delta) in monos.iter().enumerate() {
                    if alpha.order() + delta.order() > cap {
                        continue;
                    }
                    let eta = btilde.add(delta);
                    let key = (alpha.0.clone(), eta.0.clone());
                    let bidx = match b_slot.get(&key) {
                        Some(&i) => i,
                        None => {
                            let grid = symbol_partial(b, alpha, &eta)?;
                            b_store.push(grid.data);
                            let i = b_store.len() - 1;
                            b_slot.insert(key, i);
                            i
                        }
                    };
                    let inv_fact =
                        1.0 / (alpha.factorial() as f64 * delta.factorial() as f64);
                    taylor.push((ai, di, bidx, inv_fact));
                }
            }
            terms.push(BracketTerm { factors, taylor });
            // next assignment
            let mut pos = 0;
            loop {
                if pos == tuple.len() {
                    break;
                }
                tuple[pos] += 1;
                if tuple[pos] < n {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
            if axes.is_empty() || pos == tuple.len() {
                break;
            }
        }
        brackets.push(terms);
    }

    // coordinate jets need degree-one slots even in the order-zero run
    let js = JetSpace::new(2 * n, cap.max(1));
    let geo = composition_geometry(&spec.maps);
    let one = js.constant(Complex64::new(1.0, 0.0));

    // coefficient slot of z^gamma z'^beta in the joint jet
    let pair_slots: Vec<usize> = pairs
        .iter()
        .map(|(beta, gamma)| {
            let mut m = gamma.0.clone();
            m.extend_from_slice(&beta.0);
            js.slot(&MultiIndex(m)).expect("pair order within jet cap")
        })
        .collect();

    let per_x: Vec<Vec<Vec<Complex64>>> = (0..nx)
        .into_par_iter()
        .map(|ix| -> Result<Vec<Vec<Complex64>>> {
            let x = a.base.point(ix);
            let g = if affine {
                affine_geo_jets(&js, n)
            } else {
                numeric_geo_jets(&js, &geo, &x)?
            };
            let phi_is_zero = g.phi.iter().all(|p| p.0.iter().all(|c| c.norm() == 0.0));

            // powers of the endpoint deviation, aligned with `monos`
            let mut ypow = vec![one.clone(); monos.len()];
            for (mi, m) in monos.iter().enumerate() {
                let mut acc = one.clone();
                for (j, &mult) in m.0.iter().enumerate() {
                    for _ in 0..mult {
                        acc = js.mul(&acc, &g.ydev[j]);
                    }
                }
                ypow[mi] = acc;
            }

            let mut rows = vec![vec![Complex64::new(0.0, 0.0); ntheta]; pairs.len()];
            let mut apow = vec![one.clone(); monos.len()];
            for it in 0..ntheta {
                let th = a.cov.point(it);
                // covariable deviation at this node: cdev * th
                let mut da = Vec::with_capacity(n);
                for i in 0..n {
                    let mut acc = js.zero();
                    for (k, &tk) in th.iter().enumerate() {
                        if tk != 0.0 {
                            acc = js.add(&acc, &js.scale(&g.cdev[i][k], Complex64::new(tk, 0.0)));
                        }
                    }
                    da.push(acc);
                }
                for (mi, m) in monos.iter().enumerate() {
                    let mut acc = one.clone();
                    for (j, &mult) in m.0.iter().enumerate() {
                        for _ in 0..mult {
                            acc = js.mul(&acc, &da[j]);
                        }
                    }
                    apow[mi] = acc;
                }
                let envelope = if phi_is_zero {
                    g.gfac.clone()
                } else {
                    let mut ph = js.zero();
                    for (j, &tj) in th.iter().enumerate() {
                        if tj != 0.0 {
                            ph = js.add(&ph, &js.scale(&g.phi[j], Complex64::new(tj, 0.0)));
                        }
                    }
                    js.mul(&js.exp(&js.scale(&ph, Complex64::new(0.0, 2.0 * PI))), &g.gfac)
                };

                let flat = ix * ntheta + it;
                for (bi, terms) in brackets.iter().enumerate() {
                    let mut bracket = js.zero();
                    for term in terms {
                        let mut inner = js.zero();
                        for &(ai, di, bidx, w) in &term.taylor {
                            let v = b_store[bidx][flat] * w;
                            if v.norm_sqr() == 0.0 {
                                continue;
                            }
                            let p = js.mul(&ypow[ai], &apow[di]);
                            inner = js.add(&inner, &js.scale(&p, v));
                        }
                        let mut withf = inner;
                        for &(r, c) in &term.factors {
                            withf = js.mul(&withf, &g.tmat[r][c]);
                        }
                        bracket = js.add(&bracket, &withf);
                    }
                    let m = js.mul(&envelope, &bracket);
                    for (pi, (beta, _)) in pairs.iter().enumerate() {
                        if beta.0 == monos[bi].0 {
                            rows[pi][it] = m.0[pair_slots[pi]];
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;

    // lattice derivatives of a for the Leibniz split of the outer stencil
    let mut a_deriv: Vec<SymbolGrid> = Vec::with_capacity(monos.len());
    for m in &monos {
        a_deriv.push(symbol_partial(a, &MultiIndex::zero(n), m)?);
    }

    let mut out = SymbolGrid::zeros(a.base.clone(), a.cov.clone(), class)?;
    for (pi, (beta, gamma)) in pairs.iter().enumerate() {
        let mut bracket_grid = SymbolGrid::zeros(a.base.clone(), a.cov.clone(), class)?;
        for ix in 0..nx {
            bracket_grid.data[ix * ntheta..(ix + 1) * ntheta].copy_from_slice(&per_x[ix][pi]);
        }
        let factor = phase_power(beta.order() + gamma.order());
        for gp in &monos {
            if !gp.le(gamma) {
                continue;
            }
            let rest = gamma.sub(gp).expect("checked by le");
            let coeff = factor * multi_binom(gamma, gp);
            let dg = symbol_partial(&bracket_grid, &MultiIndex::zero(n), &rest)?;
            let asl = &a_deriv[mono_slot[&gp.0]];
            for ((o, av), gv) in out.data.iter_mut().zip(&asl.data).zip(&dg.data) {
                *o += coeff * av * gv;
            }
        }
    }
    Ok(out)
}

/// Flat-calculus truncation `sum (1/(2 pi i))^|alpha| / alpha! d_th^alpha a d_x^alpha b`,
/// the independent reference for products on flat models.
pub fn classical_product_expansion(
    a: &SymbolGrid,
    b: &SymbolGrid,
    order: usize,
) -> Result<SymbolGrid> {
    if !a.base.same_shape(&b.base) || !a.cov.same_shape(&b.cov) {
        return Err(Error::GridMismatch(
            "symbol product factors must live on the same lattices".into(),
        ));
    }
    let class = product_class(a, b)?;
    let n = a.base.dim;
    let mut out = SymbolGrid::zeros(a.base.clone(), a.cov.clone(), class)?;
    for alpha in MultiIndex::up_to_order(n, order as u32) {
        let da = symbol_partial(a, &MultiIndex::zero(n), &alpha)?;
        let db = symbol_partial(b, &alpha, &MultiIndex::zero(n))?;
        let c = Complex64::new(0.0, -1.0 / (2.0 * PI)).powu(alpha.order())
            / alpha.factorial() as f64;
        for ((o, av), bv) in out.data.iter_mut().zip(&da.data).zip(&db.data) {
            *o += c * av * bv;
        }
    }
    Ok(out)
}

pub struct ExpansionComparison {
    pub order: usize,
    pub oracle_error: f64,
    pub runtime_ms: u128,
}

/// Error of each truncation order against the kernel-composition route.
pub fn compare_expansion_to_oracle(
    spec: &QuantizationSpec,
    a: &SymbolGrid,
    b: &SymbolGrid,
    max_order: usize,
) -> Result<Vec<ExpansionComparison>> {
    let oracle = moyal_product(spec, a, b, MoyalMode::Lambda)?;
    let mut rows = Vec::with_capacity(max_order + 1);
    for order in 0..=max_order {
        let t0 = Instant::now();
        let e = composition_expansion(spec, a, b, order)?;
        let runtime_ms = t0.elapsed().as_millis();
        rows.push(ExpansionComparison {
            order,
            oracle_error: e.rel_l2_error(&oracle),
            runtime_ms,
        });
    }
    Ok(rows)
}

pub fn write_comparison_csv<W: std::io::Write>(
    mut w: W,
    rows: &[ExpansionComparison],
) -> std::io::Result<()> {
    writeln!(w, "order,oracle_error,runtime_ms")?;
    for r in rows {
        writeln!(w, "{},{:.6e},{}", r.order, r.oracle_error, r.runtime_ms)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Density, Frame};
    use crate::grid::{ClassMeta, GridSpec};
    use crate::models::ManifoldModel;

    fn euclid() -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), 0.0).unwrap()
    }

    fn symbol_from(
        base: &GridSpec,
        f: impl Fn(&[f64], &[f64]) -> Complex64,
    ) -> SymbolGrid {
        let cov = base.dual();
        let mut a =
            SymbolGrid::zeros(base.clone(), cov.clone(), ClassMeta::order_zero(0.0)).unwrap();
        for ix in 0..base.len() {
            let x = base.point(ix);
            let fiber = a.fiber_mut(ix);
            for (it, slot) in fiber.iter_mut().enumerate() {
                *slot = f(&x, &cov.point(it));
            }
        }
        a
    }

    fn gaussian(width: f64) -> impl Fn(&[f64], &[f64]) -> Complex64 {
        move |x: &[f64], th: &[f64]| {
            let q: f64 = x.iter().map(|c| c * c).sum::<f64>()
                + th.iter().map(|c| c * c).sum::<f64>();
            Complex64::new((-PI * q / width).exp(), 0.0)
        }
    }

    #[test]
    fn zeroth_order_is_the_pointwise_product() {
        let q = euclid();
        let base = GridSpec::new(1, 6.0, 64).unwrap();
        let a = symbol_from(&base, gaussian(1.0));
        let b = symbol_from(&base, |x, th| {
            gaussian(2.0)(x, th) * Complex64::new(1.0 + 0.3 * x[0], 0.2 * th[0])
        });
        let e0 = composition_expansion(&q, &a, &b, 0).unwrap();
        let mut prod = a.clone();
        for (p, bv) in prod.data.iter_mut().zip(&b.data) {
            *p *= bv;
        }
        assert!(e0.rel_l2_error(&prod) < 1e-12);
    }

    #[test]
    fn constant_second_factor_scales_the_first() {
        let q = euclid();
        let base = GridSpec::new(1, 6.0, 32).unwrap();
        let a = symbol_from(&base, gaussian(1.0));
        let c = Complex64::new(0.8, -0.1);
        let b = symbol_from(&base, |_, _| c);
        for order in 0..=2 {
            let e = composition_expansion(&q, &a, &b, order).unwrap();
            let mut expect = a.clone();
            for v in expect.data.iter_mut() {
                *v *= c;
            }
            assert!(
                e.rel_l2_error(&expect) < 1e-12,
                "order {order} deviates for a constant factor"
            );
        }
    }

    #[test]
    fn first_order_matches_the_flat_calculus_oracle() {
        let q = euclid();
        let base = GridSpec::new(1, 8.0, 256).unwrap();
        let a = symbol_from(&base, |x, th| {
            gaussian(1.0)(x, th) * Complex64::new(1.0, 0.4 * th[0])
        });
        let b = symbol_from(&base, |x, th| {
            gaussian(2.0)(x, th) * Complex64::new(1.0 + 0.5 * x[0], 0.0)
        });
        for order in 0..=1 {
            let e = composition_expansion(&q, &a, &b, order).unwrap();
            let o = classical_product_expansion(&a, &b, order).unwrap();
            let err = e.rel_l2_error(&o);
            assert!(err < 1e-9, "order {order}: flat-oracle mismatch {err:.3e}");
        }
        // the first correction must actually move the answer
        let e0 = composition_expansion(&q, &a, &b, 0).unwrap();
        let e1 = composition_expansion(&q, &a, &b, 1).unwrap();
        assert!(e1.rel_l2_error(&e0) > 1e-3);
    }

    #[test]
    fn truncation_error_decreases_against_the_kernel_oracle() {
        // widths chosen so successive corrections shrink by ~20x while the
        // symbols still decay cleanly at both lattice boundaries
        let q = euclid();
        let base = GridSpec::new(1, 6.0, 288).unwrap();
        let a = symbol_from(&base, |x, th| {
            Complex64::new((-PI * (x[0] * x[0] + th[0] * th[0] / 9.0)).exp(), 0.0)
        });
        let b = symbol_from(&base, |x, th| {
            Complex64::new((-PI * (x[0] * x[0] / 9.0 + th[0] * th[0])).exp(), 0.0)
        });
        let rows = compare_expansion_to_oracle(&q, &a, &b, 2).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(
            rows[0].oracle_error > rows[1].oracle_error
                && rows[1].oracle_error > rows[2].oracle_error,
            "errors not strictly decreasing: {:.3e} {:.3e} {:.3e}",
            rows[0].oracle_error,
            rows[1].oracle_error,
            rows[2].oracle_error
        );
        assert!(rows[2].oracle_error < 0.01);
    }

    #[test]
    fn numeric_geometry_path_agrees_with_the_affine_shortcut() {
        let q = euclid();
        let base = GridSpec::new(1, 5.0, 16).unwrap();
        let a = symbol_from(&base, gaussian(1.0));
        let b = symbol_from(&base, |x, th| {
            gaussian(1.5)(x, th) * Complex64::new(1.0 + 0.4 * x[0] * th[0], 0.0)
        });
        for order in 0..=2 {
            let fast = composition_expansion_impl(&q, &a, &b, order, true).unwrap();
            let slow = composition_expansion_impl(&q, &a, &b, order, false).unwrap();
            let err = slow.rel_l2_error(&fast);
            assert!(err < 1e-8, "order {order}: geometry paths differ {err:.3e}");
        }
    }

    #[test]
    fn curved_model_leading_term_is_the_pointwise_product() {
        let frame = Frame::identity(2, vec![0.0, 0.0]);
        let model = ManifoldModel::hyperbolic_frame_flat(frame.clone()).unwrap();
        let q = QuantizationSpec::new(model, frame.clone(), Density::FrameLebesgue(frame), 0.0)
            .unwrap();
        let base = GridSpec::new(2, 3.0, 8).unwrap();
        let a = symbol_from(&base, gaussian(1.0));
        let b = symbol_from(&base, gaussian(2.0));
        let e0 = composition_expansion(&q, &a, &b, 0).unwrap();
        let mut prod = a.clone();
        for (p, bv) in prod.data.iter_mut().zip(&b.data) {
            *p *= bv;
        }
        let err = e0.rel_l2_error(&prod);
        assert!(err < 1e-9, "curved leading term {err:.3e}");
        let e1 = composition_expansion(&q, &a, &b, 1).unwrap();
        assert!(e1.data.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    }

    #[test]
    fn order_cap_is_enforced() {
        let q = euclid();
        let base = GridSpec::new(1, 5.0, 16).unwrap();
        let a = symbol_from(&base, gaussian(1.0));
        let b = symbol_from(&base, gaussian(1.0));
        assert!(matches!(
            composition_expansion(&q, &a, &b, 3),
            Err(Error::CapExceeded(_))
        ));
    }
}
