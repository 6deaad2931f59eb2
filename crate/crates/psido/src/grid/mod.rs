//! Uniform box grids, their duals, and the discrete analysis layer:
//! Fourier transforms along fibers, finite-difference derivatives,
//! weighted seminorms, decay-rate fits, excision cutoffs, and file I/O.

mod cutoff;
mod data;
mod fit;
mod fourier;
mod interp;
mod io;
mod seminorm;
mod spec;
mod stencil;

pub use cutoff::{asymptotic_sum_truncate, bump, excision_cutoff};
pub use data::{ClassMeta, GridFn, KernelGrid, SymbolGrid};
pub use fit::{fit_decay_exponent, DecayFit, FIT_FLOOR};
pub use fourier::{
    fiber_fourier, forward_from_span2, grid_forward, grid_inverse, inverse_on_refined_lattice,
    inverse_on_refined_lattice_nd, trig_upsample_axis, FourierDirection,
};
pub(crate) use fourier::fiber_block_transform;
pub use io::{read_gridfn, read_kernel, read_symbol, write_gridfn, write_kernel, write_symbol};
pub use seminorm::{schwartz_seminorm, schwartz_seminorm_exact, symbol_seminorm, BOUNDARY_BAND};
pub use spec::GridSpec;
pub use stencil::{apply_stencil_axis, grid_partial, symbol_partial, GRID_DERIVATIVE_CAP};
