pub mod audit;
pub mod cf;
pub mod cocycle;
pub mod error;
pub mod greens;
pub mod harness;
pub mod numerics;
pub mod phase;
pub mod resonance;
pub mod sites;
pub mod spectral;

pub use error::{Error, Result};
