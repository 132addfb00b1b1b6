// Links the OpenBLAS CBLAS symbols used by ndarray's `blas` feature.
extern crate blas_src;

pub mod analysis;
pub mod blume_capel;
pub mod cft;
pub mod dmrg;
pub mod ed;
pub mod chain;
pub mod error;
pub mod mpo;
pub mod rsos;
pub mod sparse;
pub mod spectrum;
pub mod tensor;

pub use error::{Error, Result};
