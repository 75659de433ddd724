//! Edge-guided refinement of plane-segmentation masks for cuboid-shaped
//! objects.
//!
//! The pipeline takes a coarse prior mask and a binary edge map, extracts
//! line segments along the mask boundary ([`linefit`]), picks the best
//! endpoints per object edge ([`refine`]) and rasterizes the resulting
//! polygon, falling back to the simplified convex hull of the prior when the
//! refinement disagrees with it. [`eval`] implements the IoU benchmark.

pub mod cluster;
pub mod config;
pub mod edges;
pub mod error;
pub mod eval;
pub mod geom;
pub mod linefit;
pub mod raster;
pub mod refine;
pub mod synth;

pub use config::{CostMask, RefineConfig};
pub use edges::{adaptive_canny, ingest_edge_map, CannyConfig};
pub use error::{Error, Result};
pub use eval::{load_dataset, match_and_score, run_benchmark, EvalConfig, EvalResult, Method};
pub use geom::{LineSegment, NormalLine, Point, Polygon};
pub use raster::{load_gray, mask_iou, Bitmap, EdgeMap, GrayImage, RasterMask};
pub use refine::{fallback_mask, refine_mask, RefineReport};
