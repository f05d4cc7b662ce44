//! Multipath time-difference-of-arrival estimation with the volume
//! cross-correlation (VCC) function.

pub mod baseline_gcc;
pub mod bounds;
pub mod channel;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod seeds;
pub mod signals;
pub mod subspace;
pub mod tdoa;

pub use error::{Error, Result};
