//! Loop-erased random walk on the pre-Sierpiński gasket, constructed by erasing
//! loops from largest scale to smallest.

pub mod analysis;
pub mod ellf;
pub mod error;
pub mod exact;
pub mod gasket;
pub mod genfun;
pub mod measures;
pub mod paths;
pub mod rng;
pub mod sampler;
pub mod srw;
pub mod symmetry;

pub use error::{Error, Result};
pub use gasket::LatticePoint;
pub use paths::{CrossingType, Path};
