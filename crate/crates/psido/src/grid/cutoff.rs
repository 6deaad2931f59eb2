//! Smooth radial cutoffs and excision-based summation of symbol
//! expansions: each term of an asymptotic series is switched on outside a
//! caller-chosen radius, so the partial sums converge on every compactum.

use super::data::SymbolGrid;
use crate::{Error, Result};

/// Radial bump: 1 on [0, 1], `exp(1 - 1/(1 - t^2))` with `t = r - 1` on
/// (1, 2), and 0 from 2 on. Smooth across both joins.
pub fn bump(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = r - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Product cutoff concentrated near the origin of phase space at scale
/// `p`. The spatial factor is dropped when `sigma = 0` (those classes
/// carry no spatial decay to preserve).
pub fn excision_cutoff(sigma: f64, p: f64, x: &[f64], theta: &[f64]) -> f64 {
    let nx = x.iter().map(|c| c * c).sum::<f64>().sqrt();
    let nt = theta.iter().map(|c| c * c).sum::<f64>().sqrt();
    let xf = if sigma == 0.0 { 1.0 } else { bump(nx / p) };
    xf * bump(nt / p)
}

/// Excised sum of expansion terms: term `j` contributes
/// `(1 - excision at radius radii[j]) * a_j`. Radii are caller-supplied
/// and should grow with `j`.
pub fn asymptotic_sum_truncate(terms: &[SymbolGrid], radii: &[f64]) -> Result<SymbolGrid> {
    if terms.is_empty() {
        return Err(Error::Config("asymptotic sum needs at least one term".into()));
    }
    if terms.len() != radii.len() {
        return Err(Error::Config(format!(
            "{} terms but {} radii",
            terms.len(),
            radii.len()
        )));
    }
    if radii.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Config("excision radii must be positive".into()));
    }
    let first = &terms[0];
    for t in terms.iter().skip(1) {
        if !t.base.same_shape(&first.base) || !t.cov.same_shape(&first.cov) {
            return Err(Error::GridMismatch(
                "asymptotic sum terms live on different lattices".into(),
            ));
        }
    }
    let mut out = SymbolGrid::zeros(first.base.clone(), first.cov.clone(), first.class)?;
    let nc = first.cov.len();
    for ix in 0..first.base.len() {
        let x = first.base.point(ix);
        for it in 0..nc {
            let th = first.cov.point(it);
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (term, &p) in terms.iter().zip(radii) {
                let w = 1.0 - excision_cutoff(term.class.sigma, p, &x, &th);
                if w != 0.0 {
                    acc += term.data[ix * nc + it] * w;
                }
            }
            out.data[ix * nc + it] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ClassMeta, GridSpec};
    use num_complex::Complex64;

    #[test]
    fn bump_profile() {
        assert_eq!(bump(0.5), 1.0);
        assert_eq!(bump(1.0), 1.0);
        assert_eq!(bump(2.0), 0.0);
        assert_eq!(bump(3.0), 0.0);
        let v = bump(1.5);
        assert!(v > 0.0 && v < 1.0);
        // monotone decreasing on the transition
        assert!(bump(1.2) > bump(1.4) && bump(1.4) > bump(1.8));
        // smooth join: values approach the endpoints
        assert!(bump(1.0 + 1e-4) > 1.0 - 1e-3);
        assert!(bump(2.0 - 1e-4) < 1e-3);
    }

    #[test]
    fn sigma_zero_drops_spatial_factor() {
        let far_x = [100.0];
        let near_t = [0.1];
        assert_eq!(excision_cutoff(0.0, 1.0, &far_x, &near_t), 1.0);
        assert_eq!(excision_cutoff(1.0, 1.0, &far_x, &near_t), 0.0);
    }

    #[test]
    fn excised_sum_kills_terms_near_origin() {
        let base = GridSpec::new(1, 8.0, 32).unwrap();
        let cov = base.dual();
        let meta = ClassMeta::order_zero(1.0);
        let one = SymbolGrid::from_fn(base.clone(), cov.clone(), meta, |_, _| {
            Complex64::new(1.0, 0.0)
        })
        .unwrap();
        let sum = asymptotic_sum_truncate(&[one.clone(), one.clone()], &[1.0, 2.0]).unwrap();
        // at the origin both cutoffs are fully on, so nothing survives
        let nc = cov.len();
        let origin = (base.n / 2) * nc + cov.n / 2;
        assert_eq!(sum.data[origin].norm(), 0.0);
        // far out both terms contribute fully
        let corner = 0;
        assert!((sum.data[corner].re - 2.0).abs() < 1e-12);
        // mismatched radii count rejected
        assert!(asymptotic_sum_truncate(&[one], &[1.0, 2.0]).is_err());
    }
}
