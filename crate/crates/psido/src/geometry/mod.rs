//! Frames, charts, multi-index combinatorics, the higher-order chain rule,
//! densities, and finite-difference primitives.

mod density;
mod diff;
mod faa;
mod frame;
mod multi_index;

pub use density::{density_in_frame, density_weight_model, riemannian_weight_model, Density};
pub use diff::{
    jacobian_det, mixed_partial, numeric_jacobian, partial_derivative, step_for_order, Jet,
    JetSpace,
};
pub(crate) use diff::stencil_row as diff_stencils;
pub use faa::{evaluate_terms, faa_di_bruno_terms, FaaTerm, FAA_ORDER_CAP};
pub use frame::{chart_forward, chart_inverse, transition_map, Frame};
pub use multi_index::MultiIndex;
