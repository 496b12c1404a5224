//! Dense real/complex storage, Hermitian linear algebra and seeded random
//! streams shared by the rest of the crate.

mod complex;
mod linalg;
mod rng;
mod tensor;

pub use complex::{ComplexGrid, ComplexMatrix};
pub use linalg::{hermitian_eig, hermitian_solve, HermitianEig};
pub use rng::RngStream;
pub use tensor::RealTensor3;

pub use num_complex::Complex64;
