//! Combining both extractors into one polygon per mask.
//!
//! Candidate segments are grouped by normal form into edge hypotheses. Each
//! hypothesis gets two candidate endpoint sets (k-means over member endpoints
//! plus random edge pixels near each centroid), and the pair maximizing
//! `C = 0.5·I + 0.5·length/max_length` is kept. The surviving edges are
//! chained around the prior centroid into a polygon; if that fails or the
//! result disagrees with the prior (IoU below the gate) the convex-hull
//! fallback is used instead.

use std::cmp::Ordering;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cluster::{dbscan_with, fit_line_tls, kmeans};
use crate::config::{sub_seed, CostMask, RefineConfig};
use crate::edges::{harris_corners, CornerSet};
use crate::error::{Error, Result};
use crate::geom::{
    convex_hull, intersect, line_distance, line_pixels, rasterize, segment_to_normal, simplify,
    LineSegment, NormalLine, Point, Polygon,
};
use crate::linefit::{
    extend_segment, extract_contour, segments_by_clustering, segments_by_hough, SegmentCandidate,
};
use crate::raster::{dilate, mask_contour, mask_iou, Bitmap, EdgeMap, RasterMask};

const STREAM_KMEANS: u64 = 3;
const STREAM_SAMPLE: u64 = 4;

/// A group of candidate segments believed to describe one object edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeHypothesis {
    /// Members, oriented so their directions agree.
    pub members: Vec<SegmentCandidate>,
    /// Candidate start points: member endpoints on side A, then sampled edge pixels.
    pub a: Vec<Point>,
    pub b: Vec<Point>,
    pub centroid_a: Point,
    pub centroid_b: Point,
    /// Total-least-squares line through all member endpoints.
    pub line: NormalLine,
}

/// Endpoints chosen for one hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeChoice {
    pub pa: Point,
    pub pb: Point,
    pub cost: f64,
    /// The `I` term alone.
    pub overlap: f64,
}

impl EdgeChoice {
    pub fn segment(&self) -> LineSegment {
        LineSegment::new(self.pa, self.pb)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineReport {
    pub mask_id: String,
    /// Output polygon: the assembled one, or the fallback.
    pub polygon: Polygon,
    #[serde(skip)]
    pub mask: RasterMask,
    pub used_fallback: bool,
    /// IoU of the assembled (pre-gate) mask with the prior; 0 when assembly failed.
    pub prior_iou: f64,
    /// IoU of the output mask with the prior.
    pub output_iou: f64,
    pub edges: Vec<EdgeChoice>,
    /// Why assembly failed, if it did.
    pub failure: Option<String>,
}

/// Distance between two segments' normal forms, with θ scaled by `scale`.
fn normal_form_distance(l1: &NormalLine, l2: &NormalLine, scale: f64) -> f64 {
    let (dr, dt) = line_distance(l1, l2);
    dr.hypot(dt * scale)
}

/// Edge pixels within `radius` of `center`, row-major.
fn pixels_near(map: &Bitmap, center: Point, radius: f64) -> Vec<Point> {
    let (w, h) = map.dimensions();
    let x0 = (center.x - radius).floor().max(0.0) as i64;
    let y0 = (center.y - radius).floor().max(0.0) as i64;
    let x1 = (center.x + radius).ceil().min(w as f64 - 1.0) as i64;
    let y1 = (center.y + radius).ceil().min(h as f64 - 1.0) as i64;
    let r2 = radius * radius;
    let mut out = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let p = Point::new(x as f64, y as f64);
            if map.get_signed(x, y) && p.distance_squared(center) <= r2 {
                out.push(p);
            }
        }
    }
    out
}

fn sample_near(map: &Bitmap, center: Point, cfg: &RefineConfig, seed: u64) -> Vec<Point> {
    let pool = pixels_near(map, center, cfg.candidate_sample_radius);
    let amount = cfg.candidate_samples.min(pool.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, pool.len(), amount)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Groups candidates by normal form and builds the endpoint sets.
/// `edges` is the binary edge map the extra candidates are sampled from.
pub fn cluster_edges(
    candidates: &[SegmentCandidate],
    edges: &EdgeMap,
    cfg: &RefineConfig,
) -> Vec<EdgeHypothesis> {
    let lines: Vec<Option<NormalLine>> = candidates
        .iter()
        .map(|c| segment_to_normal(&c.segment).ok())
        .collect();
    let usable: Vec<usize> = (0..candidates.len()).filter(|&i| lines[i].is_some()).collect();
    if usable.is_empty() {
        return Vec::new();
    }
    let (w, h) = edges.dimensions();
    let scale = (w as f64).hypot(h as f64) / std::f64::consts::PI;
    let labeling = dbscan_with(usable.len(), cfg.segment_cluster_eps, 1, |i, j| {
        normal_form_distance(
            lines[usable[i]].as_ref().unwrap(),
            lines[usable[j]].as_ref().unwrap(),
            scale,
        )
    });

    let mut out = Vec::new();
    for (hi, group) in labeling.groups().into_iter().enumerate() {
        let mut members: Vec<SegmentCandidate> =
            group.iter().map(|&i| candidates[usable[i]]).collect();
        // Reference: strongest member, earliest on ties.
        let reference = members
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.support.cmp(&b.support).then(j.cmp(i)))
            .map(|(_, m)| m.segment.direction())
            .unwrap();
        for m in &mut members {
            if m.segment.direction().dot(reference) < 0.0 {
                m.segment = m.segment.reversed();
            }
        }
        let endpoints: Vec<Point> = members
            .iter()
            .flat_map(|m| [m.segment.a, m.segment.b])
            .collect();
        let Some(line) = fit_line_tls(&endpoints) else {
            continue;
        };
        let Ok(km) = kmeans(&endpoints, 2, sub_seed(cfg.seed, STREAM_KMEANS, hi as u64)) else {
            continue;
        };
        let along = |p: Point| p.dot(reference);
        let a_label = if along(km.centroids[0]) <= along(km.centroids[1]) { 0 } else { 1 };
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (p, label) in endpoints.iter().zip(&km.labeling.labels) {
            if *label == Some(a_label) {
                a.push(*p);
            } else {
                b.push(*p);
            }
        }
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let (centroid_a, centroid_b) = (km.centroids[a_label], km.centroids[1 - a_label]);
        a.extend(sample_near(edges, centroid_a, cfg, sub_seed(cfg.seed, STREAM_SAMPLE, 2 * hi as u64)));
        b.extend(sample_near(edges, centroid_b, cfg, sub_seed(cfg.seed, STREAM_SAMPLE, 2 * hi as u64 + 1)));
        out.push(EdgeHypothesis {
            members,
            a,
            b,
            centroid_a,
            centroid_b,
            line,
        });
    }
    out
}

/// Largest distance between a point of `a` and a point of `b`.
pub fn max_pair_distance(a: &[Point], b: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for p in a {
        for q in b {
            best = best.max(p.distance(*q));
        }
    }
    best
}

/// Fraction of the 1-px line from `pa` to `pb` lying on `m_e`.
pub fn line_overlap(pa: Point, pb: Point, m_e: &EdgeMap) -> f64 {
    let px = line_pixels(pa, pb);
    let on = px.iter().filter(|&&(x, y)| m_e.get_signed(x, y)).count();
    on as f64 / px.len() as f64
}

fn cost_with_max(pa: Point, pb: Point, m_e: &EdgeMap, max_len: f64) -> (f64, f64) {
    if pa == pb || max_len <= 0.0 {
        return (0.0, 0.0);
    }
    let i = line_overlap(pa, pb, m_e);
    let len = (pa.distance(pb) / max_len).min(1.0);
    (0.5 * i + 0.5 * len, i)
}

/// `C(P_a, P_b) = 0.5·I + 0.5·‖P_a − P_b‖ / max_{A×B}‖P_k − P_l‖`, in `[0, 1]`.
pub fn edge_cost(pa: Point, pb: Point, m_e: &EdgeMap, a: &[Point], b: &[Point]) -> f64 {
    cost_with_max(pa, pb, m_e, max_pair_distance(a, b)).0
}

/// Exhaustive argmax of [`edge_cost`] over `A × B`. Ties prefer the longer
/// segment, then the lexicographically smaller `(P_a, P_b)`.
pub fn select_endpoints(a: &[Point], b: &[Point], m_e: &EdgeMap) -> Result<EdgeChoice> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let max_len = max_pair_distance(a, b);
    let mut best: Option<(EdgeChoice, f64)> = None;
    for &pa in a {
        for &pb in b {
            let (cost, overlap) = cost_with_max(pa, pb, m_e, max_len);
            let cand = EdgeChoice { pa, pb, cost, overlap };
            let len = pa.distance(pb);
            let better = match &best {
                None => true,
                Some((cur, cur_len)) => cost
                    .total_cmp(&cur.cost)
                    .then(len.total_cmp(cur_len))
                    .then_with(|| {
                        cur.pa
                            .lex_cmp(&pa)
                            .then_with(|| cur.pb.lex_cmp(&pb))
                    })
                    == Ordering::Greater,
            };
            if better {
                best = Some((cand, len));
            }
        }
    }
    Ok(best.unwrap().0)
}

/// The raster the overlap term of one hypothesis is measured against.
///
/// With [`CostMask::EdgeExtract`] these are the edge pixels within
/// `cost_band` of the hypothesis line, between the outermost candidate
/// points; with [`CostMask::PriorContour`] it is the prior's widened contour.
pub fn cost_mask(h: &EdgeHypothesis, edges: &EdgeMap, prior_band: &Bitmap, cfg: &RefineConfig) -> Bitmap {
    match cfg.cost_mask {
        CostMask::PriorContour => prior_band.clone(),
        CostMask::EdgeExtract => {
            let pts = h.a.iter().chain(&h.b);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut x0, mut y0, mut x1, mut y1) =
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for p in pts {
                let t = h.line.project(*p);
                lo = lo.min(t);
                hi = hi.max(t);
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let (w, hgt) = edges.dimensions();
            let band = cfg.cost_band;
            let mut out = Bitmap::empty(w, hgt);
            let xa = (x0 - band).floor().max(0.0) as u32;
            let ya = (y0 - band).floor().max(0.0) as u32;
            let xb = ((x1 + band).ceil().max(0.0) as u32).min(w - 1);
            let yb = ((y1 + band).ceil().max(0.0) as u32).min(hgt - 1);
            for y in ya..=yb {
                for x in xa..=xb {
                    if !edges.get(x, y) {
                        continue;
                    }
                    let p = Point::from_pixel(x, y);
                    let t = h.line.project(p);
                    if h.line.distance(p) <= band && t >= lo - band && t <= hi + band {
                        out.set(x, y, true);
                    }
                }
            }
            out
        }
    }
}

/// Acute angle between the directions of two segments, in radians.
fn segment_angle(s: &LineSegment, t: &LineSegment) -> f64 {
    let (u, v) = (s.direction(), t.direction());
    let c = (u.dot(v) / (u.norm() * v.norm())).abs().min(1.0);
    c.acos()
}

/// Indices of the edges that pass the overlap and length thresholds and do
/// not duplicate a higher-cost edge, in input order.
pub fn select_edges(choices: &[EdgeChoice], cfg: &RefineConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..choices.len())
        .filter(|&i| {
            let c = &choices[i];
            c.overlap >= cfg.min_edge_overlap && c.pa.distance(c.pb) >= cfg.min_edge_length
        })
        .collect();
    order.sort_by(|&i, &j| choices[j].cost.total_cmp(&choices[i].cost).then(i.cmp(&j)));
    let max_angle = cfg.duplicate_angle_deg.to_radians();
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let s = choices[i].segment();
        let duplicate = kept.iter().any(|&k| {
            let t = choices[k].segment();
            segment_angle(&s, &t) <= max_angle && t.distance_to(s.midpoint()) <= cfg.duplicate_distance
        });
        if !duplicate {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Total-least-squares line through the edge pixels within `band` of `seg`,
/// refit once against the pixels near the first fit. Falls back to the
/// segment's own line when too few pixels are found.
pub fn refit_edge_line(seg: &LineSegment, edges: &EdgeMap, band: f64) -> Result<NormalLine> {
    let own = segment_to_normal(seg)?;
    let (w, h) = edges.dimensions();
    let x0 = (seg.a.x.min(seg.b.x) - band).floor().max(0.0) as i64;
    let y0 = (seg.a.y.min(seg.b.y) - band).floor().max(0.0) as i64;
    let x1 = (seg.a.x.max(seg.b.x) + band).ceil().min(w as f64 - 1.0) as i64;
    let y1 = (seg.a.y.max(seg.b.y) + band).ceil().min(h as f64 - 1.0) as i64;
    let mut near = Vec::new();
    for y in y0..=y1 {
        for x in x0..=x1 {
            if edges.get_signed(x, y) {
                near.push(Point::new(x as f64, y as f64));
            }
        }
    }
    let (ta, tb) = (own.project(seg.a), own.project(seg.b));
    let (lo, hi) = (ta.min(tb), ta.max(tb));
    let mut line = own;
    for _ in 0..2 {
        let pts: Vec<Point> = near
            .iter()
            .copied()
            .filter(|p| {
                let t = own.project(*p);
                line.distance(*p) <= band && t >= lo && t <= hi
            })
            .collect();
        match fit_line_tls(&pts) {
            Some(l) if pts.len() >= 2 => line = l,
            _ => break,
        }
    }
    Ok(line)
}

/// Endpoint of `seg` closer to `other`.
fn nearer_endpoint(seg: &LineSegment, other: &LineSegment) -> Point {
    if other.distance_to(seg.a) <= other.distance_to(seg.b) {
        seg.a
    } else {
        seg.b
    }
}

/// Chains edges into a polygon: edges are ordered by the angle of their
/// midpoint around `center`; consecutive edges meet at their line
/// intersection when it lies within `vicinity` of both segments (so
/// overshooting segments that cross also qualify), otherwise both nearer
/// endpoints become vertices.
pub fn assemble_polygon(edges: &[(LineSegment, NormalLine)], center: Point, vicinity: f64) -> Result<Polygon> {
    let usable: Vec<(LineSegment, NormalLine)> = edges
        .iter()
        .filter(|(s, _)| !s.is_degenerate())
        .copied()
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientEdges(usable.len()));
    }
    let mut order: Vec<(f64, usize)> = usable
        .iter()
        .enumerate()
        .map(|(i, (s, _))| {
            let m = s.midpoint().sub(center);
            (m.y.atan2(m.x), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let n = order.len();
    let mut vertices: Vec<Point> = Vec::new();
    for k in 0..n {
        let (si, li) = usable[order[k].1];
        let (sj, lj) = usable[order[(k + 1) % n].1];
        let ei = nearer_endpoint(&si, &sj);
        let ej = nearer_endpoint(&sj, &si);
        match intersect(&li, &lj) {
            Some(p) if si.distance_to(p) <= vicinity && sj.distance_to(p) <= vicinity => vertices.push(p),
            _ => {
                vertices.push(li.foot(ei));
                vertices.push(lj.foot(ej));
            }
        }
    }
    vertices.dedup_by(|a, b| a.distance(*b) < 1e-9);
    if vertices.len() > 1 && vertices[0].distance(vertices[vertices.len() - 1]) < 1e-9 {
        vertices.pop();
    }
    let poly = Polygon::new(vertices);
    if poly.len() < 3 || poly.area() <= 0.0 || !poly.is_simple() {
        return Err(Error::NonSimplePolygon);
    }
    Ok(poly)
}

/// Convex hull of the prior's boundary pixels (as unit squares), simplified
/// to at most `max_points` vertices.
pub fn fallback_mask(prior: &RasterMask, max_points: usize) -> Result<Polygon> {
    let contour = mask_contour(prior)?;
    let mut pts = Vec::with_capacity(contour.count() * 4);
    for (x, y) in contour.pixels() {
        let c = Point::from_pixel(x, y);
        for (dx, dy) in [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)] {
            pts.push(Point::new(c.x + dx, c.y + dy));
        }
    }
    let hull = convex_hull(&pts)?;
    Ok(simplify(&hull, max_points))
}

/// Applies the consistency gate to an assembly outcome and builds the report.
/// The fallback is used iff assembly failed or `IoU(assembled, prior)` is
/// strictly below `cfg.fallback_iou`.
pub fn finalize(
    mask_id: &str,
    prior: &RasterMask,
    assembled: Result<Polygon>,
    edges: Vec<EdgeChoice>,
    cfg: &RefineConfig,
) -> Result<RefineReport> {
    let (w, h) = prior.dimensions();
    let (candidate, prior_iou, failure) = match assembled {
        Ok(poly) => {
            let mask = rasterize(&poly, w, h);
            let iou = mask_iou(&mask, prior)?;
            (Some((poly, mask)), iou, None)
        }
        Err(e) => (None, 0.0, Some(e.to_string())),
    };
    let keep = candidate.filter(|(_, mask)| prior_iou >= cfg.fallback_iou && !mask.is_empty());
    let (polygon, mask, used_fallback) = match keep {
        Some((poly, mask)) => (poly, mask, false),
        None => {
            let poly = fallback_mask(prior, cfg.max_fallback_points)?;
            let mask = rasterize(&poly, w, h);
            (poly, mask, true)
        }
    };
    let output_iou = mask_iou(&mask, prior)?;
    Ok(RefineReport {
        mask_id: mask_id.to_string(),
        polygon,
        mask,
        used_fallback,
        prior_iou,
        output_iou,
        edges,
        failure,
    })
}

/// Everything produced before the gate, for diagnostics and rendering.
#[derive(Debug, Clone)]
pub struct RefineTrace {
    pub corners: CornerSet,
    pub candidates: Vec<SegmentCandidate>,
    pub hypotheses: Vec<EdgeHypothesis>,
    pub choices: Vec<EdgeChoice>,
}

/// Full pipeline for one prior mask, returning the intermediate stages too.
pub fn refine_mask_traced(
    mask_id: &str,
    prior: &RasterMask,
    edges: &EdgeMap,
    cfg: &RefineConfig,
) -> Result<(RefineReport, RefineTrace)> {
    cfg.validate()?;
    edges.check_same_size(prior)?;
    if prior.is_empty() {
        return Err(Error::EmptyMask);
    }
    let extract = extract_contour(edges, prior, cfg.widen_radius)?;
    let corners = if extract.is_empty() {
        CornerSet::default()
    } else {
        harris_corners(&extract.map, &cfg.harris())?
    };

    let mut candidates: Vec<SegmentCandidate> = segments_by_clustering(&extract, &corners, cfg)
        .iter()
        .map(|s| extend_segment(s, edges, cfg.extension_band, cfg))
        .collect();
    candidates.extend(segments_by_hough(&extract, cfg));

    let hypotheses = cluster_edges(&candidates, edges, cfg);
    let prior_band = match cfg.cost_mask {
        CostMask::PriorContour => dilate(&mask_contour(prior)?, cfg.widen_radius),
        CostMask::EdgeExtract => Bitmap::empty(1, 1),
    };
    let mut choices = Vec::new();
    for h in &hypotheses {
        let m_e = cost_mask(h, edges, &prior_band, cfg);
        choices.push(select_endpoints(&h.a, &h.b, &m_e)?);
    }
    let mut kept = Vec::new();
    for i in select_edges(&choices, cfg) {
        let seg = choices[i].segment();
        kept.push((seg, refit_edge_line(&seg, edges, cfg.cost_band)?));
    }
    let (cx, cy) = prior.centroid().ok_or(Error::EmptyMask)?;
    let assembled = assemble_polygon(&kept, Point::new(cx, cy), cfg.vicinity_radius);
    let report = finalize(mask_id, prior, assembled, choices.clone(), cfg)?;
    Ok((
        report,
        RefineTrace {
            corners,
            candidates,
            hypotheses,
            choices,
        },
    ))
}

pub fn refine_mask(mask_id: &str, prior: &RasterMask, edges: &EdgeMap, cfg: &RefineConfig) -> Result<RefineReport> {
    refine_mask_traced(mask_id, prior, edges, cfg).map(|(r, _)| r)
}
