mod config;
mod overlay;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use planeseg::edges::binarize_edge_strengths;
use planeseg::eval::{default_methods, EvalResult};
use planeseg::synth::{synth_suite, write_dataset, SynthParams};
use planeseg::{
    adaptive_canny, load_dataset, load_gray, match_and_score, refine_mask, run_benchmark, Bitmap, EdgeMap,
    EvalConfig, GrayImage, Method, RasterMask, RefineReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EdgeSource, PipelineConfig};

#[derive(Parser)]
#[command(name = "planeseg", version, about = "Edge-guided refinement of plane segmentation masks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set refine.fallback_iou=0.8`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Worker threads (overrides `jobs` from the configuration).
    #[arg(short, long, global = true)]
    jobs: Option<usize>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a binary edge map from an image (or binarize an edge-strength map).
    Edges {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Treat the input as an edge-strength map and binarize it at `edge_threshold`.
        #[arg(long)]
        ingest: bool,
        /// Resize the result to WxH.
        #[arg(long, value_parser = parse_size)]
        resize: Option<(u32, u32)>,
    },
    /// Refine every prior mask in a directory against one image.
    Refine(RefineArgs),
    /// Run the IoU benchmark over a dataset manifest.
    Eval {
        manifest: PathBuf,
        /// Comma-separated methods: prior, fallback, canny, edges:<key>.
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        /// Directory for table.txt, results.csv and scenes.json.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Draw mask contours over an image.
    Render {
        #[arg(long)]
        image: PathBuf,
        masks: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a synthetic benchmark dataset.
    Synth {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        salt: Option<f64>,
        #[arg(long)]
        max_gaps: Option<usize>,
        #[arg(long)]
        max_shift: Option<i64>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    image: PathBuf,
    /// Precomputed edge-strength map; overrides `edge_source`.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Directory of prior mask PNGs (one object per file).
    #[arg(long)]
    priors: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Directory of ground-truth mask PNGs; adds IoU scores to summary.json.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Also write overlay.png.
    #[arg(long)]
    overlay: bool,
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(|| format!("`{s}` is not WxH"))?;
    let w: u32 = w.parse().map_err(|_| format!("bad width in `{s}`"))?;
    let h: u32 = h.parse().map_err(|_| format!("bad height in `{s}`"))?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Returns the exit code: 0 on success, 1 when some items failed. Errors
/// (bad input, configuration) map to 2.
fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut cfg = PipelineConfig::load(cli.global.config.as_deref(), &cli.global.set)?;
    if let Some(j) = cli.global.jobs {
        cfg.jobs = j;
        cfg.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
    pool.install(|| match cli.command {
        Command::Edges {
            input,
            output,
            ingest,
            resize,
        } => cmd_edges(&input, &output, ingest, resize, &cfg),
        Command::Refine(args) => cmd_refine(&args, &cfg),
        Command::Eval { manifest, methods, out } => cmd_eval(&manifest, &methods, out.as_deref(), &cfg),
        Command::Render { image, masks, output } => cmd_render(&image, &masks, &output),
        Command::Synth {
            out,
            count,
            seed,
            salt,
            max_gaps,
            max_shift,
        } => {
            let mut p = SynthParams::default();
            p.salt = salt.unwrap_or(p.salt);
            p.max_gaps = max_gaps.unwrap_or(p.max_gaps);
            p.max_shift = max_shift.unwrap_or(p.max_shift);
            if !(0.0..=1.0).contains(&p.salt) {
                bail!("salt must be in [0, 1]");
            }
            let manifest = write_dataset(&out, &synth_suite(seed, count, &p))?;
            println!("{}", manifest.display());
            Ok(0)
        }
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(0)
        }
    })
}

fn canny_edges(img: &GrayImage, cfg: &PipelineConfig) -> anyhow::Result<EdgeMap> {
    let (w, h) = img.dimensions();
    let [lw, lh] = cfg.lowres_size;
    if cfg.canny_lowres && (w, h) != (lw, lh) {
        let small = adaptive_canny(&img.resize_bilinear(lw, lh)?, &cfg.canny)?;
        // Any edge contribution after upsampling counts.
        return Ok(binarize_edge_strengths(&small.to_gray(), 1, Some((w, h)))?);
    }
    Ok(adaptive_canny(img, &cfg.canny)?)
}

/// Edge map for `image_path` according to the configured source.
fn edges_for(image_path: &Path, img: &GrayImage, cfg: &PipelineConfig) -> anyhow::Result<EdgeMap> {
    let dims = img.dimensions();
    match &cfg.edge_source {
        EdgeSource::AdaptiveCanny => canny_edges(img, cfg),
        EdgeSource::External(t) => load_external(&EdgeSource::resolve(t, image_path), dims, false, cfg),
        EdgeSource::ExternalResized(t) => load_external(&EdgeSource::resolve(t, image_path), dims, true, cfg),
    }
}

fn load_external(path: &Path, dims: (u32, u32), resize: bool, cfg: &PipelineConfig) -> anyhow::Result<EdgeMap> {
    let strengths = load_gray(path)?;
    if !resize && strengths.dimensions() != dims {
        bail!(planeseg::Error::DimensionMismatch {
            expected: dims,
            found: strengths.dimensions(),
        });
    }
    Ok(binarize_edge_strengths(&strengths, cfg.edge_threshold, Some(dims))?)
}

fn cmd_edges(
    input: &Path,
    output: &Path,
    ingest: bool,
    resize: Option<(u32, u32)>,
    cfg: &PipelineConfig,
) -> anyhow::Result<u8> {
    let img = load_gray(input)?;
    let map = if ingest {
        binarize_edge_strengths(&img, cfg.edge_threshold, None)?
    } else {
        canny_edges(&img, cfg)?
    };
    let map = match resize {
        Some(size) => binarize_edge_strengths(&map.to_gray(), 1, Some(size))?,
        None => map,
    };
    create_parent(output)?;
    map.save(output)?;
    info!("{}: {} edge pixels", output.display(), map.count());
    Ok(0)
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

/// PNG files in `dir`, sorted by name.
fn png_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(planeseg::Error::MissingFile(dir.to_path_buf()).into());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

fn load_mask(path: &Path, dims: (u32, u32)) -> anyhow::Result<RasterMask> {
    let m = Bitmap::load(path)?;
    if m.dimensions() != dims {
        return Err(anyhow!(planeseg::Error::DimensionMismatch {
            expected: dims,
            found: m.dimensions(),
        }))
        .with_context(|| format!("mask {}", path.display()));
    }
    Ok(m)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

#[derive(Serialize)]
struct MaskSummary {
    mask: String,
    used_fallback: bool,
    vertices: usize,
    prior_iou: f64,
    output_iou: f64,
}

#[derive(Serialize)]
struct RefineSummary {
    image: String,
    masks: Vec<MaskSummary>,
    failed: Vec<String>,
    /// Matched mean IoU against ground truth, when given.
    gt_iou_prior: Option<f64>,
    gt_iou_refined: Option<f64>,
}

fn cmd_refine(args: &RefineArgs, cfg: &PipelineConfig) -> anyhow::Result<u8> {
    let img = load_gray(&args.image)?;
    let dims = img.dimensions();
    let prior_files = png_files(&args.priors)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    if prior_files.is_empty() {
        warn!("no prior masks in {}", args.priors.display());
        return Ok(0);
    }
    let edges = match &args.edges {
        Some(p) => load_external(p, dims, matches!(cfg.edge_source, EdgeSource::ExternalResized(_)), cfg)?,
        None => edges_for(&args.image, &img, cfg)?,
    };
    let priors = prior_files
        .iter()
        .map(|p| load_mask(p, dims))
        .collect::<anyhow::Result<Vec<_>>>()?;

    let results: Vec<planeseg::Result<RefineReport>> = prior_files
        .par_iter()
        .zip(priors.par_iter())
        .map(|(path, prior)| refine_mask(&stem(path), prior, &edges, &cfg.refine))
        .collect();

    let mut summary = RefineSummary {
        image: args.image.display().to_string(),
        masks: Vec::new(),
        failed: Vec::new(),
        gt_iou_prior: None,
        gt_iou_refined: None,
    };
    let mut refined = Vec::new();
    let mut reports = Vec::new();
    for (path, result) in prior_files.iter().zip(results) {
        let name = stem(path);
        match result {
            Ok(r) => {
                fs::write(args.out.join(format!("{name}.json")), serde_json::to_string_pretty(&r)? + "\n")?;
                r.mask.save(args.out.join(format!("{name}.png")))?;
                println!(
                    "{name}: {} ({} vertices, IoU with prior {:.4})",
                    if r.used_fallback { "fallback" } else { "refined" },
                    r.polygon.len(),
                    r.output_iou
                );
                summary.masks.push(MaskSummary {
                    mask: name,
                    used_fallback: r.used_fallback,
                    vertices: r.polygon.len(),
                    prior_iou: r.prior_iou,
                    output_iou: r.output_iou,
                });
                refined.push(r.mask.clone());
                reports.push(r);
            }
            Err(e) => {
                error!("{}: {e}", path.display());
                summary.failed.push(name);
            }
        }
    }

    let mut gt_masks = Vec::new();
    if let Some(gt_dir) = &args.gt {
        gt_masks = png_files(gt_dir)?
            .iter()
            .map(|p| load_mask(p, dims))
            .collect::<anyhow::Result<Vec<_>>>()?;
        if gt_masks.is_empty() {
            warn!("no ground-truth masks in {}", gt_dir.display());
        } else {
            let prior_score = match_and_score(&priors, &gt_masks)?;
            let refined_score = match_and_score(&refined, &gt_masks)?;
            println!("ground truth IoU: prior {prior_score:.4}, refined {refined_score:.4}");
            summary.gt_iou_prior = Some(prior_score);
            summary.gt_iou_refined = Some(refined_score);
        }
    }
    fs::write(args.out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;

    if args.overlay {
        let mut canvas = overlay::canvas(&img);
        for g in &gt_masks {
            overlay::draw_contour(&mut canvas, g, overlay::BLUE)?;
        }
        for p in &priors {
            overlay::draw_contour(&mut canvas, p, overlay::RED)?;
        }
        for r in &reports {
            overlay::draw_polygon(&mut canvas, &r.polygon, overlay::GREEN);
        }
        let path = args.out.join("overlay.png");
        canvas.save(&path).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(if summary.failed.is_empty() { 0 } else { 1 })
}

fn cmd_eval(manifest: &Path, methods: &[String], out: Option<&Path>, cfg: &PipelineConfig) -> anyhow::Result<u8> {
    let dataset = load_dataset(manifest)?;
    let methods = if methods.is_empty() {
        default_methods()
    } else {
        methods.iter().map(|m| Method::parse(m.trim())).collect::<Result<Vec<_>, _>>()?
    };
    if cfg.edge_source != EdgeSource::AdaptiveCanny || cfg.canny_lowres {
        warn!("eval takes edge maps from the manifest; edge_source and canny_lowres are ignored");
    }
    let eval_cfg = EvalConfig {
        refine: cfg.refine.clone(),
        canny: cfg.canny,
        edge_threshold: cfg.edge_threshold,
    };
    let result = run_benchmark(&dataset, &methods, &eval_cfg)?;
    let table = result.to_table();
    print!("{table}");
    if let Some(dir) = out {
        write_eval(dir, &result, &table)?;
    }
    for s in &result.skipped {
        eprintln!("skipped {}: {}", s.id, s.error);
    }
    Ok(if result.skipped.is_empty() { 0 } else { 1 })
}

fn write_eval(dir: &Path, result: &EvalResult, table: &str) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    fs::write(dir.join("table.txt"), table)?;
    fs::write(dir.join("results.csv"), result.to_csv()?)?;
    fs::write(dir.join("scenes.json"), serde_json::to_string_pretty(result)? + "\n")?;
    Ok(())
}

fn cmd_render(image: &Path, masks: &[PathBuf], output: &Path) -> anyhow::Result<u8> {
    let img = load_gray(image)?;
    let mut canvas = overlay::canvas(&img);
    for (i, m) in masks.iter().enumerate() {
        let mask = load_mask(m, img.dimensions())?;
        overlay::draw_contour(&mut canvas, &mask, overlay::PALETTE[i % overlay::PALETTE.len()])?;
    }
    create_parent(output)?;
    canvas.save(output).with_context(|| format!("cannot write {}", output.display()))?;
    Ok(0)
}
