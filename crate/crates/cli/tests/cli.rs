use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use planeseg::geom::rasterize;
use planeseg::raster::mask_contour;
use planeseg::{Bitmap, GrayImage, Point, Polygon};

fn planeseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planeseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn rhombus() -> Polygon {
    Polygon::new(vec![
        Point::new(100.0, 30.0),
        Point::new(160.0, 100.0),
        Point::new(100.0, 170.0),
        Point::new(40.0, 100.0),
    ])
}

/// Two-level image of the rhombus on a flat background.
fn rhombus_image() -> GrayImage {
    let m = rasterize(&rhombus(), 200, 200);
    GrayImage::from_fn(200, 200, |x, y| if m.get(x, y) { 190 } else { 60 }).unwrap()
}

#[test]
fn constant_image_gives_empty_edges() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("flat.png");
    let out = dir.path().join("edges.png");
    GrayImage::filled(64, 48, 120).unwrap().save(&input).unwrap();
    let o = planeseg(&["edges", p(&input), "-o", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = Bitmap::load(&out).unwrap();
    assert_eq!(map.dimensions(), (64, 48));
    assert_eq!(map.count(), 0);
}

#[test]
fn rhombus_edges_follow_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("rhombus.png");
    let out = dir.path().join("edges.png");
    rhombus_image().save(&input).unwrap();
    let o = planeseg(&["edges", p(&input), "-o", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = Bitmap::load(&out).unwrap();
    let poly = rhombus();
    // Every edge pixel lies near the boundary, and every boundary sample away from the
    // vertices has an edge pixel nearby.
    for (x, y) in map.pixels() {
        let d = poly.boundary_distance(Point::from_pixel(x, y));
        assert!(d <= 1.5, "edge pixel ({x}, {y}) is {d:.2} px off the boundary");
    }
    let pixels: Vec<Point> = map.pixels().map(|(x, y)| Point::from_pixel(x, y)).collect();
    for e in poly.edges() {
        for i in 0..=100 {
            let q = e.a.add(e.b.sub(e.a).scale(i as f64 / 100.0));
            // Blur rounds off the tips.
            if q.distance(e.a).min(q.distance(e.b)) < 3.0 {
                continue;
            }
            let d = pixels.iter().map(|p| p.distance(q)).fold(f64::INFINITY, f64::min);
            assert!(d <= 1.5, "boundary point {q:?} is {d:.2} px from the nearest edge pixel");
        }
    }
}

#[test]
fn ingest_and_resize() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("strength.png");
    let out = dir.path().join("edges.png");
    GrayImage::from_fn(40, 30, |x, _| if x == 20 { 200 } else { 10 })
        .unwrap()
        .save(&input)
        .unwrap();
    let o = planeseg(&["edges", "--ingest", "--resize", "80x60", p(&input), "-o", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let map = Bitmap::load(&out).unwrap();
    assert_eq!(map.dimensions(), (80, 60));
    assert!(map.count() >= 60);
}

#[test]
fn missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.png");
    let o = planeseg(&["edges", p(&missing), "-o", p(&dir.path().join("e.png"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.png"));
}

#[test]
fn empty_priors_dir_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("img.png");
    rhombus_image().save(&image).unwrap();
    let priors = dir.path().join("priors");
    fs::create_dir(&priors).unwrap();
    let o = planeseg(&["refine", "--image", p(&image), "--priors", p(&priors), "--out", p(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn refine_writes_reports_and_fails_per_mask() {
    let dir = tempfile::tempdir().unwrap();
    let image = dir.path().join("img.png");
    rhombus_image().save(&image).unwrap();
    let edges = dir.path().join("edges.png");
    mask_contour(&rasterize(&rhombus(), 200, 200)).unwrap().save(&edges).unwrap();
    let priors = dir.path().join("priors");
    fs::create_dir(&priors).unwrap();
    let gt = rasterize(&rhombus(), 200, 200);
    planeseg::raster::erode(&gt, 4).save(priors.join("a.png")).unwrap();
    Bitmap::empty(200, 200).save(priors.join("b.png")).unwrap();
    let out = dir.path().join("out");
    let o = planeseg(&[
        "refine",
        "--image",
        p(&image),
        "--edges",
        p(&edges),
        "--priors",
        p(&priors),
        "--out",
        p(&out),
        "--overlay",
    ]);
    // The empty prior cannot be refined.
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("a.json")).unwrap()).unwrap();
    assert_eq!(report["used_fallback"], false);
    let refined = Bitmap::load(out.join("a.png")).unwrap();
    assert!(planeseg::mask_iou(&refined, &gt).unwrap() > 0.95);
    assert!(out.join("overlay.png").exists());
    assert!(!out.join("b.json").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failed"][0], "b");
}

fn one_scene_dataset(dir: &Path) -> std::path::PathBuf {
    let gt = rasterize(&rhombus(), 200, 200);
    for sub in ["images", "masks", "edges"] {
        fs::create_dir_all(dir.join(sub)).unwrap();
    }
    rhombus_image().save(dir.join("images/s.png")).unwrap();
    gt.save(dir.join("masks/s.png")).unwrap();
    mask_contour(&gt).unwrap().save(dir.join("edges/s.png")).unwrap();
    let manifest = dir.join("manifest.json");
    fs::write(
        &manifest,
        r#"{"scenes": [{"id": "s", "image": "images/s.png", "difficulty": "easy",
            "priors": ["masks/s.png"], "gt": ["masks/s.png"], "edges": {"contour": "edges/s.png"}}]}"#,
    )
    .unwrap();
    manifest
}

#[test]
fn eval_prior_equal_to_gt_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = one_scene_dataset(dir.path());
    let out = dir.path().join("eval");
    let o = planeseg(&["eval", p(&manifest), "--methods", "prior,edges:contour", "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let all = stdout.lines().find(|l| l.starts_with("All")).unwrap();
    assert!(all.contains("100.00"), "{stdout}");
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("Easy,1,1.000000,")), "{csv}");
    assert!(out.join("table.txt").exists());
    assert!(out.join("scenes.json").exists());
}

#[test]
fn malformed_manifest_reports_json_path() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, r#"{"scenes": [{"id": "s", "image": 5}]}"#).unwrap();
    let o = planeseg(&["eval", p(&manifest)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scenes[0].image"), "{err}");
}

#[test]
fn unscorable_scene_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = one_scene_dataset(dir.path());
    let text = fs::read_to_string(&manifest)
        .unwrap()
        .replace(r#"[{"id": "s""#, r#"[{"id": "gone", "image": "images/small.png", "difficulty": "hard", "priors": ["masks/s.png"], "gt": ["masks/s.png"]}, {"id": "s""#);
    fs::write(&manifest, text).unwrap();
    // Image and masks disagree in size, so the scene cannot be scored.
    GrayImage::filled(50, 50, 0).unwrap().save(dir.path().join("images/small.png")).unwrap();
    let o = planeseg(&["eval", p(&manifest), "--methods", "prior"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gone"));
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("ds");
    let o = planeseg(&["synth", "--out", p(&ds), "--count", "3", "--seed", "11"]);
    assert!(o.status.success());
    let manifest = ds.join("manifest.json");
    let runs: Vec<_> = ["1", "4"]
        .iter()
        .map(|jobs| {
            let out = dir.path().join(format!("eval{jobs}"));
            let o = planeseg(&["--jobs", jobs, "eval", p(&manifest), "--methods", "prior,canny", "--out", p(&out)]);
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
            (fs::read(out.join("results.csv")).unwrap(), o.stdout)
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn config_prints_overrides() {
    let o = planeseg(&["--set", "refine.fallback_iou=0.6", "--set", "edge_source=external:{dir}/e/{stem}.png", "config"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("fallback_iou = 0.6"));
    assert!(text.contains("edge_source = \"external:{dir}/e/{stem}.png\""));
}
