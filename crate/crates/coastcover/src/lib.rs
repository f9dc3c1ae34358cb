//! coastcover: classify coastal aerial imagery into land-cover classes,
//! assess thematic accuracy against reference maps with random points,
//! and quantify per-class area change between two acquisition dates.
//!
//! The pipeline stages mirror a stepwise workflow: grid/radiometric
//! preparation, 256-px tile slicing and pairing, a pluggable
//! classification backend (native windowed-moment baseline or imported
//! external label rasters), mosaic merge, majority-filter cleanup,
//! random-point accuracy assessment, and area-change reporting.

pub mod assess;
pub mod change;
pub mod classify;
pub mod error;
pub mod io;
pub mod preprocess;
pub mod raster;
pub mod scheme;
pub mod tiling;

pub use error::{Error, Result};
pub use raster::{decode_labels, encode_labels, GeoTransform, ImageRaster, LabelRaster, MaskRaster};
pub use scheme::{ClassDef, ClassScheme, MergeGroup};
