use serde::{Deserialize, Serialize};

use crate::edges::HarrisConfig;
use crate::error::{Error, Result};

/// Which raster the edge-quality term of the endpoint cost is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CostMask {
    /// Edge-map pixels near the hypothesis' member segments.
    #[default]
    EdgeExtract,
    /// Widened contour of the prior mask.
    PriorContour,
}

/// Every tunable of the refinement pipeline. Defaults reproduce the
/// published constants where they exist (40 px vicinity, 0.75 IoU gate,
/// 20 fallback vertices, 10 sampled candidates).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Dilation radius of the prior-mask contour used to select edge pixels.
    pub widen_radius: u32,

    pub harris_k: f64,
    pub harris_window: u32,
    pub harris_rel_threshold: f64,
    /// Pixels within this distance of a detected corner are removed before clustering.
    pub corner_removal_radius: f64,

    pub dbscan_eps: f64,
    pub dbscan_min_pts: usize,
    /// Clusters smaller than this are treated as noise.
    pub min_cluster_px: usize,
    /// Clusters whose PCA eigenvalue ratio (minor / major) exceeds this are dropped.
    pub max_aspect: f64,

    pub ransac_tol: f64,
    pub ransac_iterations: usize,

    /// Candidate segments whose 1-px line has an edge pixel in its 3x3
    /// neighborhood for less than this fraction of its length are discarded.
    pub min_segment_coverage: f64,

    /// Half-width of the band searched for line extensions.
    pub extension_band: f64,

    pub hough_votes: u32,
    pub hough_rho_merge: f64,
    pub hough_theta_merge_deg: f64,
    /// Radius of the vicinity test for intersection endpoints and corner plausibility.
    pub vicinity_radius: f64,

    /// DBSCAN radius when grouping segments by normal form.
    pub segment_cluster_eps: f64,
    /// Random edge pixels added to each endpoint candidate set.
    pub candidate_samples: usize,
    pub candidate_sample_radius: f64,
    pub cost_mask: CostMask,
    /// Half-width of the per-edge extract the overlap term is measured on.
    pub cost_band: f64,
    /// Edges whose chosen segment overlaps the edge extract less than this are
    /// left out of polygon assembly.
    pub min_edge_overlap: f64,
    /// Chosen edges shorter than this are left out of polygon assembly.
    pub min_edge_length: f64,
    /// A chosen edge within this angle of a stronger one, with its midpoint
    /// within `duplicate_distance` of it, is treated as a duplicate.
    pub duplicate_angle_deg: f64,
    pub duplicate_distance: f64,

    /// Refined masks agreeing with the prior below this IoU are replaced by the fallback.
    pub fallback_iou: f64,
    pub max_fallback_points: usize,

    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            widen_radius: 5,
            harris_k: 0.04,
            harris_window: 5,
            harris_rel_threshold: 0.1,
            corner_removal_radius: 4.0,
            dbscan_eps: 3.0,
            dbscan_min_pts: 4,
            min_cluster_px: 10,
            max_aspect: 0.2,
            ransac_tol: 2.0,
            ransac_iterations: 200,
            min_segment_coverage: 0.6,
            extension_band: 3.0,
            hough_votes: 20,
            hough_rho_merge: 10.0,
            hough_theta_merge_deg: 5.0,
            vicinity_radius: 40.0,
            segment_cluster_eps: 15.0,
            candidate_samples: 10,
            candidate_sample_radius: 25.0,
            cost_mask: CostMask::EdgeExtract,
            cost_band: 3.0,
            min_edge_overlap: 0.5,
            min_edge_length: 15.0,
            duplicate_angle_deg: 10.0,
            duplicate_distance: 10.0,
            fallback_iou: 0.75,
            max_fallback_points: 20,
            seed: 0,
        }
    }
}

impl RefineConfig {
    pub fn harris(&self) -> HarrisConfig {
        HarrisConfig {
            k: self.harris_k,
            window: self.harris_window,
            rel_threshold: self.harris_rel_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("harris_k", self.harris_k),
            ("corner_removal_radius", self.corner_removal_radius),
            ("dbscan_eps", self.dbscan_eps),
            ("max_aspect", self.max_aspect),
            ("ransac_tol", self.ransac_tol),
            ("extension_band", self.extension_band),
            ("hough_rho_merge", self.hough_rho_merge),
            ("hough_theta_merge_deg", self.hough_theta_merge_deg),
            ("vicinity_radius", self.vicinity_radius),
            ("segment_cluster_eps", self.segment_cluster_eps),
            ("candidate_sample_radius", self.candidate_sample_radius),
            ("cost_band", self.cost_band),
            ("duplicate_angle_deg", self.duplicate_angle_deg),
            ("duplicate_distance", self.duplicate_distance),
            ("min_edge_length", self.min_edge_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        let counts = [
            ("widen_radius", self.widen_radius as usize),
            ("dbscan_min_pts", self.dbscan_min_pts),
            ("ransac_iterations", self.ransac_iterations),
            ("hough_votes", self.hough_votes as usize),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        if !(self.fallback_iou > 0.0 && self.fallback_iou <= 1.0) {
            return Err(Error::InvalidParameter(
                "fallback_iou must lie in (0, 1]".into(),
            ));
        }
        if self.max_fallback_points < 3 {
            return Err(Error::InvalidParameter(
                "max_fallback_points must be at least 3".into(),
            ));
        }
        for (name, v) in [
            ("min_edge_overlap", self.min_edge_overlap),
            ("min_segment_coverage", self.min_segment_coverage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Derives an independent stream seed from the master seed (splitmix64 finalizer).
pub fn sub_seed(master: u64, stream: u64, index: u64) -> u64 {
    let mut z = master
        ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
