//! Untrained deep decoder: a stack of 1×1 convolutions, bilinear upsamplers,
//! ReLUs and batch norms whose parameters are fitted to a single grid.

mod adam;
mod arch;
mod fit;
pub mod layers;
mod net;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use arch::{preset_epochs, DecoderArch, TablePreset, DEFAULT_BN_EPS, TABLE_MASSIVE, TABLE_SINGLE_ANTENNA};
pub use fit::{fit, FitConfig, FitReport};
pub use net::{decoder_backward, decoder_forward, gradient_check, GradCheck, GRADCHECK_FLOOR};
pub use params::DecoderParams;
