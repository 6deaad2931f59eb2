//! Operator products: exact composition through kernels, and the truncated
//! symbol-level expansion driven by the composed displacement geometry.

pub mod expansion;
pub mod geometry;
pub mod kernels;

pub use expansion::{
    classical_product_expansion, compare_expansion_to_oracle, composition_expansion,
    write_comparison_csv, ExpansionComparison, COMPOSE_ORDER_CAP,
};
pub use geometry::{composition_geometry, CompositionGeometry};
pub use kernels::{compose_kernels, moyal_product, product_class, MoyalMode};
