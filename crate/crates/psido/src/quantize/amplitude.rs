//! Amplitudes carry an extra fiber argument; reduction trades it for
//! derivative corrections on an ordinary symbol. The reduction series and
//! the direct-quadrature application are kept side by side so the trade can
//! be checked order by order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::QuantizationSpec;
use crate::geometry::{mixed_partial, step_for_order, MultiIndex};
use crate::grid::{ClassMeta, GridFn, GridSpec, SymbolGrid};
use crate::{Error, Result};

/// Highest supported reduction order.
pub const REDUCE_ORDER_CAP: usize = 3;

/// A symbol with an extra difference-variable slot.
pub trait Amplitude: Sync {
    fn dim(&self) -> usize;
    /// Value at base point `x`, difference variable `zeta`, covector `theta`.
    fn eval(&self, x: &[f64], zeta: &[f64], theta: &[f64]) -> Complex64;
}

impl<F> Amplitude for (usize, F)
where
    F: Fn(&[f64], &[f64], &[f64]) -> Complex64 + Sync,
{
    fn dim(&self) -> usize {
        self.0
    }
    fn eval(&self, x: &[f64], zeta: &[f64], theta: &[f64]) -> Complex64 {
        self.1(x, zeta, theta)
    }
}

/// Ordinary symbol whose left quantization matches the amplitude's operator
/// up to corrections of combined order `order + 1`:
/// `sum_{|beta| <= order} (i/2pi)^{|beta|}/beta! d_zeta^beta d_theta^beta amp`
/// evaluated at `zeta = 0`.
pub fn reduce_amplitude<A: Amplitude>(
    amp: &A,
    base: &GridSpec,
    class: ClassMeta,
    order: usize,
) -> Result<SymbolGrid> {
    if order > REDUCE_ORDER_CAP {
        return Err(Error::CapExceeded(format!(
            "reduction order {order} exceeds the supported cap {REDUCE_ORDER_CAP}"
        )));
    }
    let dim = base.dim;
    if amp.dim() != dim {
        return Err(Error::GridMismatch(format!(
            "amplitude dim {} vs lattice dim {}",
            amp.dim(),
            dim
        )));
    }
    let cov = base.dual();
    let nf = cov.len();
    let betas: Vec<(MultiIndex, Complex64)> = MultiIndex::up_to_order(dim, order as u32)
        .into_iter()
        .map(|b| {
            let c = Complex64::new(0.0, 1.0 / (2.0 * PI)).powu(b.order()) / b.factorial() as f64;
            (b, c)
        })
        .collect();
    let mut out = SymbolGrid::zeros(base.clone(), cov.clone(), class)?;
    let fibers: Vec<Vec<Complex64>> = (0..base.len())
        .into_par_iter()
        .map(|ixf| {
            let x = base.point(ixf);
            let mut fiber = vec![Complex64::new(0.0, 0.0); nf];
            for (it, slot) in fiber.iter_mut().enumerate() {
                let theta = cov.point(it);
                let mut acc = Complex64::new(0.0, 0.0);
                for (beta, c) in &betas {
                    if beta.order() == 0 {
                        acc += c * amp.eval(&x, &vec![0.0; dim], &theta);
                        continue;
                    }
                    // joint derivative in (zeta, theta) at (0, theta)
                    let mut joint = Vec::with_capacity(2 * dim);
                    joint.extend(beta.0.iter().copied());
                    joint.extend(beta.0.iter().copied());
                    let alpha = MultiIndex(joint);
                    let mut at = vec![0.0; 2 * dim];
                    at[dim..].copy_from_slice(&theta);
                    let h = step_for_order(2 * beta.order());
                    let re = mixed_partial(
                        |u: &[f64]| amp.eval(&x, &u[..dim], &u[dim..]).re,
                        &at,
                        &alpha,
                        h,
                    );
                    let im = mixed_partial(
                        |u: &[f64]| amp.eval(&x, &u[..dim], &u[dim..]).im,
                        &at,
                        &alpha,
                        h,
                    );
                    acc += c * Complex64::new(re, im);
                }
                *slot = acc;
            }
            fiber
        })
        .collect();
    for (ixf, fiber) in fibers.into_iter().enumerate() {
        out.fiber_mut(ixf).copy_from_slice(&fiber);
    }
    Ok(out)
}

/// Direct quadrature of the amplitude operator at the left ordering:
/// `out(x) = s^dim sum_theta h^dim sum_zeta e^{-2 pi i <theta, zeta>}
/// amp(x, zeta, theta) v(psi(x, -zeta))` with `zeta` on the span-2 lattice.
/// Slow by construction; it is the reference the reduction is judged
/// against.
pub fn apply_amplitude<A: Amplitude>(
    q: &QuantizationSpec,
    amp: &A,
    v: &GridFn,
) -> Result<GridFn> {
    let base = &v.spec;
    let dim = base.dim;
    if amp.dim() != dim || q.dim() != dim {
        return Err(Error::GridMismatch(
            "amplitude, model and lattice dimensions disagree".into(),
        ));
    }
    let n = base.n;
    let h = base.spacing().powi(dim as i32);
    let cov = base.dual();
    let s_theta = cov.spacing().powi(dim as i32);
    let nf = cov.len();
    let span = GridSpec {
        dim,
        extent: 2.0 * base.extent,
        n: 2 * n,
    };
    let nz = span.len();
    let affine = q.maps.is_affine();
    let data: Vec<Complex64> = (0..base.len())
        .into_par_iter()
        .map(|ixf| {
            let x = base.point(ixf);
            let xi = base.unravel(ixf);
            let mut acc = Complex64::new(0.0, 0.0);
            for jz in 0..nz {
                let jj = span.unravel(jz);
                let w = if affine {
                    let mut flat = 0usize;
                    let mut ok = true;
                    for ax in 0..dim {
                        let m = xi[ax] as i64 - jj[ax] as i64 + n as i64;
                        if m < 0 || m >= n as i64 {
                            ok = false;
                            break;
                        }
                        flat = flat * n + m as usize;
                    }
                    if ok {
                        v.data[flat]
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                } else {
                    let zeta = span.point(jz);
                    let neg: Vec<f64> = zeta.iter().map(|c| -c).collect();
                    v.sample(&q.maps.psi(&x, &neg))
                };
                if w.norm_sqr() == 0.0 {
                    continue;
                }
                let zeta = span.point(jz);
                for it in 0..nf {
                    let theta = cov.point(it);
                    let ph = -2.0
                        * PI
                        * theta.iter().zip(&zeta).map(|(t, z)| t * z).sum::<f64>();
                    acc += amp.eval(&x, &zeta, &theta)
                        * w
                        * Complex64::new(ph.cos(), ph.sin());
                }
            }
            acc * h * s_theta
        })
        .collect();
    Ok(GridFn {
        spec: base.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Density, Frame};
    use crate::models::ManifoldModel;
    use crate::quantize::apply_operator;

    fn euclid() -> QuantizationSpec {
        let m = ManifoldModel::euclidean_standard(1).unwrap();
        let f = Frame::identity(1, vec![0.0]);
        QuantizationSpec::new(m, f.clone(), Density::FrameLebesgue(f), 0.0).unwrap()
    }

    #[test]
    fn gaussian_difference_factor_reduces_to_closed_form() {
        // amp = e^{-pi zeta^2} a(x, theta): odd-order terms vanish and the
        // second-order term is (1/4pi) d_theta^2 a
        let base = GridSpec::new(1, 5.0, 32).unwrap();
        let amp = (1usize, |x: &[f64], z: &[f64], th: &[f64]| {
            let qa = x[0] * x[0] + th[0] * th[0];
            Complex64::new((-PI * (z[0] * z[0] + qa)).exp(), 0.0)
        });
        let s = reduce_amplitude(&amp, &base, ClassMeta::order_zero(0.0), 2).unwrap();
        let cov = base.dual();
        let mut expect = SymbolGrid::zeros(base.clone(), cov.clone(), s.class).unwrap();
        for ix in 0..base.len() {
            let x = base.coord(ix);
            for it in 0..cov.len() {
                let th = cov.coord(it);
                let a = (-PI * (x * x + th * th)).exp();
                // a + (1/4pi) (4 pi^2 th^2 - 2 pi) a
                let val = a * (1.0 + PI * th * th - 0.5);
                expect.data[ix * cov.len() + it] = Complex64::new(val, 0.0);
            }
        }
        let err = s.rel_l2_error(&expect);
        assert!(err < 1e-4, "reduction error {err:.3e}");
    }

    #[test]
    fn plain_symbol_amplitude_matches_left_application() {
        let q = euclid();
        let base = GridSpec::new(1, 4.0, 48).unwrap();
        let amp = (1usize, |x: &[f64], _z: &[f64], th: &[f64]| {
            Complex64::new((-PI * (x[0] * x[0] + th[0] * th[0])).exp(), 0.0)
        });
        let v = GridFn::from_fn(base.clone(), |x| {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        });
        let direct = apply_amplitude(&q, &amp, &v).unwrap();
        let s = reduce_amplitude(&amp, &base, ClassMeta::order_zero(0.0), 0).unwrap();
        let via_symbol = apply_operator(&q, &s, &v).unwrap();
        let err = direct.rel_l2_error(&via_symbol);
        assert!(err < 1e-10, "amplitude/symbol application mismatch {err:.3e}");
    }
}
