pub mod bench;
pub mod channels;
pub mod decoder;
pub mod error;
pub mod estimators;
pub mod numerics;
pub mod signal;

pub use error::{Error, Result};
