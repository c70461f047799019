pub mod checkpoint;
pub mod ctc;
pub mod decoder;
pub mod error;
pub mod features;
pub mod harness;
pub mod math;
pub mod network;
pub mod optim;
pub mod params;
pub mod scoring;
pub mod unitset;

pub use error::{Error, Result};
