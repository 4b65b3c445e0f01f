pub mod baselines;
pub mod error;
pub mod io;
pub mod model;
pub mod postprocess;
pub mod prior;
pub mod random;
pub mod sampler;
pub mod simulation;
pub mod spd;
pub mod special;

pub use error::{Error, Result};
pub use spd::SpdMatrix;
