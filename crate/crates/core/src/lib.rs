//! Zonal-statistics engine joining tiled rasters with polygon layers.
//!
//! The main pipeline works like a sort-merge join: a metadata-only
//! *intersection* step turns each chunk of polygons into a sorted,
//! tile-indexed intersection file; a *selection* step walks raster tiles once
//! per chunk guided by those files; and an *aggregation* step folds the
//! selected pixels into per-polygon statistics. Reference implementations of
//! the mask-based and point-in-polygon baselines, a single-pass scanline
//! variant, and the analytical cost model live alongside for verification
//! and benchmarking.

pub mod aggregate;
// pub mod baselines;
// pub mod bench;
// pub mod cost;
pub mod error;
pub mod geom;
pub mod intersection;
// pub mod pipeline;
pub mod raster;
pub mod selection;
pub mod synth;
pub mod vector;

pub use error::{Error, Result};
