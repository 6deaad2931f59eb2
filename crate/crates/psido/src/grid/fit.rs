//! Least-squares estimation of power-law decay rates from radial samples:
//! fit `log value ~ exponent * log <r> + intercept`.

use crate::{Error, Result};

/// Magnitudes at or below this floor are treated as "already decayed":
/// they carry no slope information and are dropped before fitting.
pub const FIT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct DecayFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub rms: f64,
    /// Number of samples that survived the floor filter.
    pub used: usize,
    /// True when too few samples survived to fit; the quantity decayed
    /// below the floor, which downstream checks treat as a pass.
    pub floor_skipped: bool,
}

/// Fit a decay exponent to (radius, magnitude) samples. At least six
/// samples are required; samples below [`FIT_FLOOR`] are dropped first.
pub fn fit_decay_exponent(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 6 {
        return Err(Error::Config(format!(
            "decay fit needs at least 6 samples, got {}",
            samples.len()
        )));
    }
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(r, v)| *v > FIT_FLOOR && r.is_finite() && v.is_finite())
        .copied()
        .collect();
    if kept.len() < 6 {
        return Ok(DecayFit {
            exponent: 0.0,
            intercept: 0.0,
            rms: 0.0,
            used: kept.len(),
            floor_skipped: true,
        });
    }
    let xs: Vec<f64> = kept.iter().map(|(r, _)| (1.0 + r * r).sqrt().ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx < 1e-12 {
        return Err(Error::Config(
            "decay fit radii are degenerate (no spread in log <r>)".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        exponent: slope,
        intercept,
        rms,
        used: kept.len(),
        floor_skipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_known_exponent() {
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let r = 2.0 * 1.4f64.powi(i);
                let v = 3.0 * (1.0 + r * r).sqrt().powf(-1.75);
                (r, v)
            })
            .collect();
        let fit = fit_decay_exponent(&samples).unwrap();
        assert!((fit.exponent + 1.75).abs() < 1e-10);
        assert!(fit.rms < 1e-10);
        assert!(!fit.floor_skipped);
    }

    #[test]
    fn floor_shortcut() {
        let samples: Vec<(f64, f64)> = (0..10).map(|i| (2.0 + i as f64, 1e-15)).collect();
        let fit = fit_decay_exponent(&samples).unwrap();
        assert!(fit.floor_skipped);
        assert_eq!(fit.used, 0);
    }

    #[test]
    fn too_few_samples_rejected() {
        let samples = vec![(1.0, 1.0); 5];
        assert!(fit_decay_exponent(&samples).is_err());
    }
}
