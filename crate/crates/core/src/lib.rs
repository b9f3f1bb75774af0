pub mod cns;
pub mod data;
pub mod error;
pub mod harness;
pub mod lagrangian;
pub mod linear;
pub mod littlewood_paley;
pub mod paracalculus;
pub mod spectral;

pub use error::{Error, Result};
