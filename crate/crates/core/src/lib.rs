//! Underwater image formation and restoration, contrastive loss kernels,
//! image quality metrics, and dataset construction tooling.

pub mod dataset;
pub mod fixtures;
pub mod error;
pub mod imaging;
pub mod losses;
pub mod metrics;
pub mod raster;
pub mod site;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
pub use raster::ImagePlane;
