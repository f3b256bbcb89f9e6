pub mod cmat;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod jet;
pub mod linalg;
pub mod powers;
pub mod predictors;
pub mod quantize;
pub mod spectral;
mod fft;
pub mod quadrature;
pub mod spatial;
pub mod symbols;
pub mod zeta;

pub use cmat::CMat;
pub use error::{Error, Result};
pub use num_complex::Complex64 as c64;
