//! Ordered quantization on a linearized frame: symbol -> kernel -> symbol
//! passes, operator application, conversion between ordering parameters,
//! amplitude reduction, and adjoints.

mod adjoint;
mod amplitude;
mod apply;
mod convert;
mod kernel;

pub use adjoint::{adjoint_symbol, kernel_adjoint};
pub use amplitude::{apply_amplitude, reduce_amplitude, Amplitude};
pub use apply::{apply_kernel, apply_operator, nyquist_check};
pub use convert::lambda_convert;
pub use kernel::{check_boundary_decay, kernel_from_symbol, kernel_from_symbol_on, symbol_from_kernel};

use crate::geometry::{Density, Frame};
use crate::models::{FrameMaps, ManifoldModel};
use crate::{Error, Result};

/// Everything needed to pin down one quantization: the model and frame
/// (through the derived maps), the reference density, and the ordering
/// parameter in [0, 1].
#[derive(Debug, Clone)]
pub struct QuantizationSpec {
    pub maps: FrameMaps,
    pub density: Density,
    pub lambda: f64,
}

impl QuantizationSpec {
    pub fn new(model: ManifoldModel, frame: Frame, density: Density, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!(
                "ordering parameter must lie in [0, 1], got {lambda}"
            )));
        }
        let maps = FrameMaps::new(model, frame)?;
        maps.ordering_allowed(lambda)?;
        Ok(QuantizationSpec { maps, density, lambda })
    }

    pub fn dim(&self) -> usize {
        self.maps.dim()
    }

    /// Same model/frame/density at a different ordering parameter.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!(
                "ordering parameter must lie in [0, 1], got {lambda}"
            )));
        }
        self.maps.ordering_allowed(lambda)?;
        Ok(QuantizationSpec {
            maps: self.maps.clone(),
            density: self.density.clone(),
            lambda,
        })
    }
}
