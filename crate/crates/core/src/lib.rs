//! Random Gaussian subspace codes and the audits around them.

pub mod channels;
pub mod codes;
pub mod decode;
pub mod dump;
pub mod error;
pub mod gaussian;
pub mod qit;
pub mod random;
pub mod rng;
pub mod stats;
pub mod tol;
pub mod typicality;

pub use error::{Error, Result};
