//! Deliberately broken inputs that the hypothesis checkers must reject.
//! Each control runs the same sampling code as the real verifier, so a
//! control slipping through means a gate was weakened, not that the control
//! drifted out of sync with the checker.

use crate::verify::hypotheses::{
    differential_bound_checks, h_v_entries, linearization_psi_checks, transition_decay_checks,
    DET_MIN_DEFAULT,
};
use crate::verify::report::HypothesisReport;
use crate::Result;

/// A coordinate change with a quadratic component.  Its second derivative is
/// constant along every ray, so weighted bounded geometry fails for any
/// positive base weight.
pub fn quadratic_transition_control() -> Result<HypothesisReport> {
    let map = |x: &[f64]| vec![x[0] + 0.1 * x[0] * x[0], x[1]];
    let maps: [&(dyn Fn(&[f64]) -> Vec<f64> + Sync); 1] = [&map];
    let mut rep = HypothesisReport::new("bounded-geometry", "control:quadratic-transition", 1.0);
    rep.param("expectation", "fail: order-2 derivative does not decay");
    rep.checks
        .extend(transition_decay_checks(&maps, 2, 1.0, 2, "pair0to1")?);
    Ok(rep.seal())
}

/// A linearization whose fiber differential grows like the base weight.  The
/// sup stays finite over the sampled box, so this control specifically guards
/// the growth-slope gate of the boundedness checks.
pub fn scaled_linearization_control() -> Result<HypothesisReport> {
    let psi = |x: &[f64], z: &[f64]| -> Vec<f64> {
        let b = (1.0 + x.iter().map(|c| c * c).sum::<f64>()).sqrt();
        x.iter().zip(z).map(|(a, c)| a + b * c).collect()
    };
    let mut rep = HypothesisReport::new("composition-control", "control:scaled-linearization", 1.0);
    rep.param("expectation", "fail: fiber differential grows with the base point");
    rep.checks.extend(differential_bound_checks(&psi, None, 2)?);
    Ok(rep.seal())
}

/// A displacement field that contracts by a factor of ten: its averaged
/// Jacobian determinant lands far below the floor.
pub fn shrinking_inverse_control() -> Result<HypothesisReport> {
    let v = |_x: &[f64], z: &[f64]| -> Vec<f64> { z.iter().map(|c| 0.1 * c).collect() };
    let vinv =
        |_x: &[f64], w: &[f64]| -> Result<Vec<f64>> { Ok(w.iter().map(|c| 10.0 * c).collect()) };
    let mut rep = HypothesisReport::new("strong-invertibility", "control:shrinking-field", 1.0);
    rep.param("expectation", "fail: field determinant 0.01 under the floor");
    rep.checks
        .extend(h_v_entries(&v, &vinv, 2, 1.0, 1.0, 1.0, DET_MIN_DEFAULT)?);
    Ok(rep.seal())
}

/// A linearization with a quadratic base term: second derivatives are
/// constant instead of decaying, so class membership fails at base weight 1.
pub fn growing_derivative_control() -> Result<HypothesisReport> {
    let psi = |x: &[f64], z: &[f64]| -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().zip(z).map(|(a, c)| a + c).collect();
        out[0] += 0.1 * x[0] * x[0];
        out
    };
    let mut rep =
        HypothesisReport::new("linearization-class", "control:quadratic-linearization", 1.0);
    rep.param("expectation", "fail: second base derivative does not decay");
    rep.checks.extend(linearization_psi_checks(&psi, 2, 1.0)?);
    Ok(rep.seal())
}

/// All four controls, one per hypothesis checker.
pub fn negative_controls() -> Result<Vec<HypothesisReport>> {
    Ok(vec![
        quadratic_transition_control()?,
        growing_derivative_control()?,
        shrinking_inverse_control()?,
        scaled_linearization_control()?,
    ])
}
