//! Panoramic scene geometry: equirectangular projections, layout-derived coarse
//! depth and semantics, closed-form fusion of multi-view monocular depth, depth
//! and image metrics, and point-cloud / novel-view export.

pub mod error;
pub mod grid;
pub mod io;
pub mod layout;
pub mod sphere;

pub use error::{Error, Result};
pub use grid::{DepthMap, Grid, Mask, RgbImage, WeightMap};
pub use sphere::{CameraSpec, Direction, ErpGrid};
pub mod export;
pub mod integrate;
pub mod linalg;
pub mod metrics;
