pub mod channel;
pub mod dataset;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod neuralnet;
pub mod numerics;
pub mod protocol;

pub use error::{Error, Result};
