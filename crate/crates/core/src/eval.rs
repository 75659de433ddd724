//! Dataset ingestion, GT matching and Table-1 style aggregation.
//!
//! A dataset is a JSON manifest listing scenes:
//!
//! ```json
//! {
//!   "scenes": [
//!     {
//!       "id": "box_01",
//!       "image": "images/box_01.png",
//!       "difficulty": "easy",
//!       "priors": ["priors/box_01_0.png"],
//!       "gt": ["gt/box_01_0.png"],
//!       "edges": { "dexi_lr": "edges/lr/box_01.png" }
//!     }
//!   ]
//! }
//! ```
//!
//! Paths are relative to the manifest. Instead of `gt`, a scene may give
//! `gt_via` (a VGG Image Annotator export or project file) and optionally
//! `gt_via_key`, the annotated file name (defaults to the image file name).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RefineConfig;
use crate::edges::{adaptive_canny, binarize_edge_strengths, CannyConfig};
use crate::error::{Error, Result};
use crate::geom::{rasterize, Point, Polygon};
use crate::raster::{load_gray, mask_iou, Bitmap, GrayImage, RasterMask};
use crate::refine::{fallback_mask, refine_mask};
use crate::synth::Difficulty;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub id: String,
    pub image: PathBuf,
    pub difficulty: Difficulty,
    pub priors: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gt: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_via: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_via_key: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub edges: BTreeMap<String, PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenes: Vec<SceneRecord>,
}

/// Parses a manifest; schema errors carry the JSON path of the offending value.
pub fn parse_manifest(text: &str, path: &Path) -> Result<Manifest> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        at: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// A manifest with every path resolved against its directory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub root: PathBuf,
    pub scenes: Vec<SceneRecord>,
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::MissingFile(path.to_path_buf()))
    }
}

/// Loads `root/manifest.json` (or `root` itself when it is a file) and checks
/// that every referenced file exists.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset> {
    let root = root.as_ref();
    let manifest_path = if root.is_dir() { root.join(MANIFEST_NAME) } else { root.to_path_buf() };
    require_file(&manifest_path)?;
    let text = fs::read_to_string(&manifest_path).map_err(|source| Error::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest = parse_manifest(&text, &manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new(".")).to_path_buf();

    let mut scenes = Vec::with_capacity(manifest.scenes.len());
    for (i, mut s) in manifest.scenes.into_iter().enumerate() {
        let bad = |msg: &str| Error::Dataset(format!("scenes[{i}] ({}): {msg}", s.id));
        if s.priors.is_empty() {
            return Err(bad("no prior masks"));
        }
        match (s.gt.is_empty(), &s.gt_via) {
            (true, None) => return Err(bad("no ground truth (`gt` or `gt_via`)")),
            (false, Some(_)) => return Err(bad("both `gt` and `gt_via` given")),
            _ => {}
        }
        s.image = base.join(&s.image);
        for p in s.priors.iter_mut().chain(s.gt.iter_mut()).chain(s.edges.values_mut()) {
            *p = base.join(&*p);
        }
        if let Some(v) = &mut s.gt_via {
            *v = base.join(&*v);
        }
        require_file(&s.image)?;
        for p in s.priors.iter().chain(&s.gt).chain(s.edges.values()).chain(&s.gt_via) {
            require_file(p)?;
        }
        scenes.push(s);
    }
    Ok(Dataset {
        root: base,
        scenes,
    })
}

/// Polygons of one annotated file in a VIA export or project file.
/// VIA coordinates address pixel corners, so they are shifted by −0.5 to
/// this crate's pixel-center convention.
pub fn via_polygons(json: &Value, file_name: &str) -> Result<Vec<Polygon>> {
    let files = json.get("_via_img_metadata").unwrap_or(json);
    let files = files
        .as_object()
        .ok_or_else(|| Error::Dataset("VIA file is not a JSON object".into()))?;
    let entry = files
        .values()
        .find(|f| f.get("filename").and_then(Value::as_str) == Some(file_name))
        .ok_or_else(|| Error::Dataset(format!("no VIA annotation for `{file_name}`")))?;
    let regions: Vec<&Value> = match entry.get("regions") {
        Some(Value::Array(a)) => a.iter().collect(),
        Some(Value::Object(o)) => o.values().collect(),
        _ => Vec::new(),
    };
    let coords = |v: &Value, key: &str| -> Result<Vec<f64>> {
        v.get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .ok_or_else(|| Error::Dataset(format!("VIA region for `{file_name}` lacks `{key}`")))
    };
    let num = |v: &Value, key: &str| -> Result<f64> {
        v.get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::Dataset(format!("VIA region for `{file_name}` lacks `{key}`")))
    };
    let mut out = Vec::new();
    for r in regions {
        let Some(shape) = r.get("shape_attributes") else {
            continue;
        };
        let vertices: Vec<Point> = match shape.get("name").and_then(Value::as_str) {
            Some("polygon") | Some("polyline") => {
                let xs = coords(shape, "all_points_x")?;
                let ys = coords(shape, "all_points_y")?;
                if xs.len() != ys.len() {
                    return Err(Error::Dataset(format!(
                        "VIA polygon for `{file_name}` has {} x but {} y coordinates",
                        xs.len(),
                        ys.len()
                    )));
                }
                xs.into_iter().zip(ys).map(|(x, y)| Point::new(x, y)).collect()
            }
            Some("rect") => {
                let (x, y) = (num(shape, "x")?, num(shape, "y")?);
                let (w, h) = (num(shape, "width")?, num(shape, "height")?);
                vec![
                    Point::new(x, y),
                    Point::new(x + w, y),
                    Point::new(x + w, y + h),
                    Point::new(x, y + h),
                ]
            }
            other => {
                warn!("ignoring VIA region of shape {other:?} in `{file_name}`");
                continue;
            }
        };
        if vertices.len() >= 3 {
            out.push(Polygon::new(
                vertices.into_iter().map(|p| Point::new(p.x - 0.5, p.y - 0.5)).collect(),
            ));
        }
    }
    Ok(out)
}

/// Decoded rasters of one scene.
#[derive(Debug, Clone)]
pub struct LoadedScene {
    pub image: GrayImage,
    pub priors: Vec<RasterMask>,
    pub gt: Vec<RasterMask>,
}

fn load_mask(path: &Path, dims: (u32, u32)) -> Result<RasterMask> {
    let m = Bitmap::load(path)?;
    if m.dimensions() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: m.dimensions(),
        });
    }
    Ok(m)
}

pub fn load_scene(s: &SceneRecord) -> Result<LoadedScene> {
    let image = load_gray(&s.image)?;
    let dims = image.dimensions();
    let priors = s.priors.iter().map(|p| load_mask(p, dims)).collect::<Result<Vec<_>>>()?;
    let gt = match &s.gt_via {
        Some(via) => {
            let text = fs::read_to_string(via).map_err(|source| Error::Io {
                path: via.clone(),
                source,
            })?;
            let json: Value = serde_json::from_str(&text).map_err(|source| Error::Json {
                path: via.clone(),
                source,
            })?;
            let key = match &s.gt_via_key {
                Some(k) => k.clone(),
                None => s
                    .image
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            };
            via_polygons(&json, &key)?
                .iter()
                .map(|p| rasterize(p, dims.0, dims.1))
                .collect()
        }
        None => s.gt.iter().map(|p| load_mask(p, dims)).collect::<Result<Vec<_>>>()?,
    };
    if gt.is_empty() {
        return Err(Error::Dataset(format!("scene `{}` has no ground-truth masks", s.id)));
    }
    Ok(LoadedScene { image, priors, gt })
}

/// Greedy one-to-one matching by descending IoU (ties: lower GT index, then
/// lower prediction index). Unmatched GT masks score 0; the result is the
/// mean over GT masks.
pub fn match_and_score(predicted: &[RasterMask], gt: &[RasterMask]) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::Dataset("no ground-truth masks to score against".into()));
    }
    let mut pairs = Vec::with_capacity(predicted.len() * gt.len());
    for (g, gm) in gt.iter().enumerate() {
        for (p, pm) in predicted.iter().enumerate() {
            pairs.push((mask_iou(pm, gm)?, g, p));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut gt_used = vec![false; gt.len()];
    let mut pred_used = vec![false; predicted.len()];
    let mut total = 0.0;
    for (iou, g, p) in pairs {
        if gt_used[g] || pred_used[p] {
            continue;
        }
        gt_used[g] = true;
        pred_used[p] = true;
        total += iou;
    }
    Ok(total / gt.len() as f64)
}

/// How a benchmark column produces its predictions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// The prior masks as they are.
    Prior,
    /// The convex-hull fallback of each prior.
    Fallback,
    /// Refinement on adaptive Canny edges of the scene image.
    Canny,
    /// Refinement on the scene's precomputed edge map with this key.
    Edges(String),
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prior" => Ok(Method::Prior),
            "fallback" => Ok(Method::Fallback),
            "canny" => Ok(Method::Canny),
            _ => match s.strip_prefix("edges:") {
                Some(k) if !k.is_empty() => Ok(Method::Edges(k.to_string())),
                _ => Err(Error::InvalidParameter(format!(
                    "unknown method `{s}` (expected prior, fallback, canny or edges:<key>)"
                ))),
            },
        }
    }

    /// Column header in the results table.
    pub fn label(&self) -> String {
        match self {
            Method::Prior => "PlaneRCNN".into(),
            Method::Fallback => "Fallback".into(),
            Method::Canny => "Canny".into(),
            Method::Edges(k) => match k.as_str() {
                "dexi_lr" => "Dexi LR".into(),
                "dexi_fr" => "Dexi FR".into(),
                _ => k.clone(),
            },
        }
    }
}

/// Default benchmark columns: prior, fallback, two DexiNed edge maps, Canny.
pub fn default_methods() -> Vec<Method> {
    vec![
        Method::Prior,
        Method::Fallback,
        Method::Edges("dexi_lr".into()),
        Method::Edges("dexi_fr".into()),
        Method::Canny,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub refine: RefineConfig,
    pub canny: CannyConfig,
    /// Gray level at or above which a precomputed edge-strength map counts as edge.
    pub edge_threshold: u8,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            refine: RefineConfig::default(),
            canny: CannyConfig::default(),
            edge_threshold: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodScore {
    pub method: String,
    pub iou: f64,
    /// Masks for which refinement fell back to the hull.
    pub fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneResult {
    pub id: String,
    pub difficulty: Difficulty,
    pub scores: Vec<MethodScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedScene {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub category: String,
    pub scenes: usize,
    /// Mean per method; `None` when the category is empty.
    pub means: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub methods: Vec<String>,
    pub scenes: Vec<SceneResult>,
    pub skipped: Vec<SkippedScene>,
    pub rows: Vec<SummaryRow>,
}

fn method_predictions(
    method: &Method,
    record: &SceneRecord,
    scene: &LoadedScene,
    cfg: &EvalConfig,
) -> Result<(Vec<RasterMask>, usize)> {
    let (w, h) = scene.image.dimensions();
    let edges = match method {
        Method::Prior => return Ok((scene.priors.clone(), 0)),
        Method::Fallback => {
            let masks = scene
                .priors
                .iter()
                .map(|p| Ok(rasterize(&fallback_mask(p, cfg.refine.max_fallback_points)?, w, h)))
                .collect::<Result<Vec<_>>>()?;
            return Ok((masks, 0));
        }
        Method::Canny => adaptive_canny(&scene.image, &cfg.canny)?,
        Method::Edges(key) => {
            let path = record
                .edges
                .get(key)
                .ok_or_else(|| Error::Dataset(format!("scene `{}` has no `{key}` edge map", record.id)))?;
            binarize_edge_strengths(&load_gray(path)?, cfg.edge_threshold, Some((w, h)))?
        }
    };
    let mut masks = Vec::with_capacity(scene.priors.len());
    let mut fallbacks = 0;
    for (i, prior) in scene.priors.iter().enumerate() {
        let report = refine_mask(&format!("{}_{i}", record.id), prior, &edges, &cfg.refine)?;
        fallbacks += report.used_fallback as usize;
        masks.push(report.mask);
    }
    Ok((masks, fallbacks))
}

pub fn evaluate_scene(record: &SceneRecord, methods: &[Method], cfg: &EvalConfig) -> Result<SceneResult> {
    let scene = load_scene(record)?;
    let mut scores = Vec::with_capacity(methods.len());
    for m in methods {
        let (pred, fallbacks) = method_predictions(m, record, &scene, cfg)?;
        scores.push(MethodScore {
            method: m.label(),
            iou: match_and_score(&pred, &scene.gt)?,
            fallbacks,
        });
    }
    Ok(SceneResult {
        id: record.id.clone(),
        difficulty: record.difficulty,
        scores,
    })
}

/// Category rows (Easy, Medium, Hard) followed by "All"; each is the
/// unweighted mean of its scene scores.
pub fn summarize(methods: usize, scenes: &[SceneResult]) -> Vec<SummaryRow> {
    let row = |category: &str, members: Vec<&SceneResult>| SummaryRow {
        category: category.to_string(),
        scenes: members.len(),
        means: (0..methods)
            .map(|m| {
                (!members.is_empty())
                    .then(|| members.iter().map(|s| s.scores[m].iou).sum::<f64>() / members.len() as f64)
            })
            .collect(),
    };
    let mut rows: Vec<SummaryRow> = Difficulty::ALL
        .iter()
        .map(|d| row(d.label(), scenes.iter().filter(|s| s.difficulty == *d).collect()))
        .collect();
    rows.push(row("All", scenes.iter().collect()));
    rows
}

/// Scores every scene with every method. Scenes run in parallel on the
/// current rayon pool; results keep manifest order. Failing scenes are
/// skipped and listed in `skipped`.
pub fn run_benchmark(dataset: &Dataset, methods: &[Method], cfg: &EvalConfig) -> Result<EvalResult> {
    if dataset.scenes.is_empty() {
        return Err(Error::Dataset("dataset has no scenes".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidParameter("no methods selected".into()));
    }
    cfg.refine.validate()?;
    let outcomes: Vec<Result<SceneResult>> = dataset
        .scenes
        .par_iter()
        .map(|s| evaluate_scene(s, methods, cfg))
        .collect();
    let mut scenes = Vec::new();
    let mut skipped = Vec::new();
    for (record, outcome) in dataset.scenes.iter().zip(outcomes) {
        match outcome {
            Ok(r) => scenes.push(r),
            Err(e) => {
                warn!("skipping scene `{}`: {e}", record.id);
                skipped.push(SkippedScene {
                    id: record.id.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    Ok(EvalResult {
        methods: methods.iter().map(Method::label).collect(),
        rows: summarize(methods.len(), &scenes),
        scenes,
        skipped,
    })
}

fn percent(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", 100.0 * v))
}

impl EvalResult {
    /// Aligned text table, values in percent.
    pub fn to_table(&self) -> String {
        let mut header = vec!["Category".to_string()];
        header.extend(self.methods.iter().cloned());
        let mut lines = vec![header];
        for r in &self.rows {
            let mut line = vec![r.category.clone()];
            line.extend(r.means.iter().map(|m| percent(*m)));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, line) in lines.iter().enumerate() {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
                .collect();
            out.push_str(cells.join("  ").trim_end());
            out.push('\n');
            if i == 0 {
                out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
                out.push('\n');
            }
        }
        out
    }

    /// CSV with one row per category; values are fractions in [0, 1].
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Dataset(format!("csv: {e}"));
        let mut header = vec!["category".to_string(), "scenes".to_string()];
        header.extend(self.methods.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.category.clone(), r.scenes.to_string()];
            rec.extend(r.means.iter().map(|m| m.map_or_else(String::new, |v| format!("{v:.6}"))));
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Dataset(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
