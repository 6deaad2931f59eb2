//! Sampled finite-difference certification of the geometric hypotheses the
//! calculus rests on, with deterministic plain-text reports.
//!
//! A verdict here is evidence gathered over an explicitly recorded finite
//! region, not a proof: every report carries the sampled radii, the fit
//! gates, and the raw samples so the numbers can be re-fit independently.

mod controls;
mod hypotheses;
mod rays;
mod report;

pub use controls::{
    growing_derivative_control, negative_controls, quadratic_transition_control,
    scaled_linearization_control, shrinking_inverse_control,
};
pub use hypotheses::{
    verify_bounded_geometry, verify_c_sigma, verify_h_v, verify_linearization_class, BOUND_CAP,
    DET_MIN_DEFAULT, H_V_SAMPLES, H_V_SEED, RMS_CAP, SLOPE_TOL,
};
pub use rays::{default_radii, directions, log_radii, offset_direction, RADIUS_HI, RADIUS_LO};
pub use report::{
    describe_frame, emit_report, parse_reports, render_reports, CheckEntry, HypothesisReport,
};
