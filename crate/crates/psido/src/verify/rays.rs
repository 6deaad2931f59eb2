//! Radial sampling geometry shared by the hypothesis checkers: a fixed fan
//! of directions and log-spaced radii. The outer radius keeps hyperbolic
//! chart factors (cosh of the radius) well inside double precision.

pub const RADIUS_LO: f64 = 2.0;
pub const RADIUS_HI: f64 = 9.6;
pub const RADIUS_COUNT: usize = 10;

/// Unit directions of the sampling fan: the two signs in one dimension,
/// eight evenly spaced angles in two.
pub fn directions(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => unreachable!("models are one- or two-dimensional"),
    }
}

/// A direction at a fixed angular offset from `d`, used to pick fiber probes
/// that are neither parallel nor orthogonal to the ray. In one dimension the
/// probe keeps the ray's sign.
pub fn offset_direction(d: &[f64]) -> Vec<f64> {
    if d.len() == 1 {
        return d.to_vec();
    }
    let a = d[1].atan2(d[0]) + 3.0 * std::f64::consts::FRAC_PI_8;
    vec![a.cos(), a.sin()]
}

pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let l0 = lo.ln();
    let l1 = hi.ln();
    (0..count)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn default_radii() -> Vec<f64> {
    log_radii(RADIUS_LO, RADIUS_HI, RADIUS_COUNT)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_has_unit_directions() {
        for d in directions(2) {
            let n: f64 = d.iter().map(|c| c * c).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(directions(1).len(), 2);
    }

    #[test]
    fn radii_are_log_spaced_and_cover_the_range() {
        let r = default_radii();
        assert_eq!(r.len(), RADIUS_COUNT);
        assert!((r[0] - RADIUS_LO).abs() < 1e-12);
        assert!((r[RADIUS_COUNT - 1] - RADIUS_HI).abs() < 1e-12);
        let q0 = r[1] / r[0];
        for w in r.windows(2) {
            assert!((w[1] / w[0] - q0).abs() < 1e-12);
        }
    }
}
