//! Synthetic single-plane scenes with known ground truth.
//!
//! Each scene holds one random parallelogram (area ≥ 5000 px², interior
//! angles in [35°, 145°]), a textured grayscale image of it, an edge map
//! standing in for a learned detector (1-px-dilated true contour plus salt
//! noise, optionally with gaps), and a prior mask eroded or dilated (and
//! optionally shifted) to IoU ∈ [0.80, 0.92] with the truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::sub_seed;
use crate::error::{Error, Result};
use crate::eval::{Manifest, SceneRecord, MANIFEST_NAME};
use crate::geom::{rasterize, Point, Polygon};
use crate::raster::{dilate, erode, mask_contour, mask_iou, Bitmap, EdgeMap, GrayImage, RasterMask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn label(self) -> &'static str {
        match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        }
    }

    fn rank(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub width: u32,
    pub height: u32,
    pub min_area: f64,
    pub min_prior_iou: f64,
    pub max_prior_iou: f64,
    /// Probability of a spurious edge pixel.
    pub salt: f64,
    /// Contour gaps in hard scenes; medium scenes get half as many, easy none.
    pub max_gaps: usize,
    /// Largest integer shift applied to the prior on each axis.
    pub max_shift: i64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            width: 240,
            height: 200,
            min_area: 5000.0,
            min_prior_iou: 0.80,
            max_prior_iou: 0.92,
            salt: 0.05,
            max_gaps: 0,
            max_shift: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub id: String,
    pub difficulty: Difficulty,
    pub polygon: Polygon,
    pub image: GrayImage,
    pub edges: EdgeMap,
    pub gt: RasterMask,
    pub prior: RasterMask,
}

fn random_parallelogram(rng: &mut ChaCha8Rng, p: &SynthParams) -> Polygon {
    let margin = 12.0;
    loop {
        let len_u = rng.gen_range(35.0..75.0);
        let len_v = rng.gen_range(35.0..75.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let angle = rng.gen_range(35f64..145.0).to_radians();
        let u = Point::new(phi.cos(), phi.sin()).scale(len_u);
        let v = Point::new((phi + angle).cos(), (phi + angle).sin()).scale(len_v);
        let area = 4.0 * u.cross(v).abs();
        if area < p.min_area {
            continue;
        }
        let ext_x = u.x.abs() + v.x.abs();
        let ext_y = u.y.abs() + v.y.abs();
        let (lo_x, hi_x) = (ext_x + margin, p.width as f64 - 1.0 - ext_x - margin);
        let (lo_y, hi_y) = (ext_y + margin, p.height as f64 - 1.0 - ext_y - margin);
        if lo_x >= hi_x || lo_y >= hi_y {
            continue;
        }
        let c = Point::new(rng.gen_range(lo_x..hi_x), rng.gen_range(lo_y..hi_y));
        let poly = Polygon::new(vec![
            c.add(u).add(v),
            c.sub(u).add(v),
            c.sub(u).sub(v),
            c.add(u).sub(v),
        ]);
        if poly.signed_area() < 0.0 {
            return Polygon::new(poly.vertices.into_iter().rev().collect());
        }
        return poly;
    }
}

/// Shifts a mask by an integer offset, dropping pixels pushed off the image.
pub fn shift_mask(mask: &Bitmap, dx: i64, dy: i64) -> Bitmap {
    Bitmap::from_fn(mask.width(), mask.height(), |x, y| {
        mask.get_signed(x as i64 - dx, y as i64 - dy)
    })
}

fn perturb_prior(rng: &mut ChaCha8Rng, gt: &RasterMask, p: &SynthParams) -> RasterMask {
    let mut best: Option<(f64, RasterMask)> = None;
    let target = 0.5 * (p.min_prior_iou + p.max_prior_iou);
    for _ in 0..200 {
        let r = rng.gen_range(1..=12u32);
        let grow = rng.gen_bool(0.5);
        let dx = rng.gen_range(-p.max_shift..=p.max_shift);
        let dy = rng.gen_range(-p.max_shift..=p.max_shift);
        let morphed = if grow { dilate(gt, r) } else { erode(gt, r) };
        let cand = shift_mask(&morphed, dx, dy);
        if cand.is_empty() {
            continue;
        }
        let iou = mask_iou(&cand, gt).expect("same size");
        if (p.min_prior_iou..=p.max_prior_iou).contains(&iou) {
            return cand;
        }
        if best.as_ref().is_none_or(|(b, _)| (iou - target).abs() < (b - target).abs()) {
            best = Some((iou, cand));
        }
    }
    best.expect("at least one non-empty candidate").1
}

fn render_image(rng: &mut ChaCha8Rng, gt: &RasterMask) -> GrayImage {
    let fg: f64 = rng.gen_range(150.0..200.0);
    let bg: f64 = rng.gen_range(50.0..100.0);
    let (fx, fy) = (rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2));
    GrayImage::from_fn(gt.width(), gt.height(), |x, y| {
        let base = if gt.get(x, y) { fg } else { bg };
        let texture = 8.0 * ((x as f64 * fx).sin() + (y as f64 * fy).cos());
        let noise: f64 = rng.gen_range(-6.0..6.0);
        (base + texture + noise).round().clamp(0.0, 255.0) as u8
    })
    .expect("non-zero size")
}

fn render_edges(rng: &mut ChaCha8Rng, gt: &RasterMask, difficulty: Difficulty, p: &SynthParams) -> EdgeMap {
    let (salt, gaps) = (p.salt, p.max_gaps * difficulty.rank() / 2);
    let mut edges = dilate(&mask_contour(gt).expect("non-empty truth"), 1);
    let on: Vec<(u32, u32)> = edges.pixels().collect();
    for _ in 0..gaps {
        let (cx, cy) = on[rng.gen_range(0..on.len())];
        let r = rng.gen_range(3..7i64);
        for dy in -r..=r {
            for dx in -r..=r {
                let (x, y) = (cx as i64 + dx, cy as i64 + dy);
                if x >= 0 && y >= 0 && x < gt.width() as i64 && y < gt.height() as i64 {
                    edges.set(x as u32, y as u32, false);
                }
            }
        }
    }
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if rng.gen_bool(salt) {
                edges.set(x, y, true);
            }
        }
    }
    edges
}

/// Scene `index` of the suite generated from `seed`; difficulty cycles easy, medium, hard.
pub fn synth_scene(seed: u64, index: usize, params: &SynthParams) -> SynthScene {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 100, index as u64));
    let difficulty = Difficulty::ALL[index % 3];
    let polygon = random_parallelogram(&mut rng, params);
    let gt = rasterize(&polygon, params.width, params.height);
    let prior = perturb_prior(&mut rng, &gt, params);
    let image = render_image(&mut rng, &gt);
    let edges = render_edges(&mut rng, &gt, difficulty, params);
    SynthScene {
        id: format!("scene_{index:03}"),
        difficulty,
        polygon,
        image,
        edges,
        gt,
        prior,
    }
}

pub fn synth_suite(seed: u64, count: usize, params: &SynthParams) -> Vec<SynthScene> {
    (0..count).map(|i| synth_scene(seed, i, params)).collect()
}

/// Edge-map key under which synthetic scenes store their edge maps.
pub const SYNTH_EDGE_KEY: &str = "synthetic";

/// Writes scenes as PNGs plus a `manifest.json` under `dir` and returns the
/// manifest path. Layout: `images/`, `priors/`, `gt/`, `edges/`.
pub fn write_dataset(dir: &Path, scenes: &[SynthScene]) -> Result<PathBuf> {
    for sub in ["images", "priors", "gt", "edges"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|source| Error::Io { path: d, source })?;
    }
    let mut manifest = Manifest::default();
    for s in scenes {
        let rel = |sub: &str| PathBuf::from(sub).join(format!("{}.png", s.id));
        let prior = PathBuf::from("priors").join(format!("{}_0.png", s.id));
        s.image.save(dir.join(rel("images")))?;
        s.prior.save(dir.join(&prior))?;
        s.gt.save(dir.join(rel("gt")))?;
        s.edges.save(dir.join(rel("edges")))?;
        manifest.scenes.push(SceneRecord {
            id: s.id.clone(),
            image: rel("images"),
            difficulty: s.difficulty,
            priors: vec![prior],
            gt: vec![rel("gt")],
            gt_via: None,
            gt_via_key: None,
            edges: BTreeMap::from([(SYNTH_EDGE_KEY.to_string(), rel("edges"))]),
        });
    }
    let path = dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
