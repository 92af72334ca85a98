//! Nominal and robust dual-functional waveform design for integrated sensing
//! and communication under channel uncertainty.

pub mod complexify;
pub mod error;
pub mod linalg;
pub mod matfile;
pub mod model;
pub mod nominal;
pub mod quadmax;
pub mod remedy;
pub mod robust;
pub mod secular;
pub mod simkit;

pub use error::{IsacError, Result};
pub use linalg::{CMatrix, CVector, RMatrix, RVector, C64};
