//! Planar geometry: points, segments, lines in normal form, polygons.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::RasterMask;

/// Lines whose normals differ by less than this (as `|sin Δθ|`) are treated as parallel.
pub const PARALLEL_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_pixel(x: u32, y: u32) -> Self {
        Self::new(x as f64, y as f64)
    }

    pub fn distance_squared(self, other: Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Self) -> f64 {
        self.distance_squared(other).sqrt()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn add(self, other: Self) -> Self {
        Self::new(self.x + other.x, self.y + other.y)
    }

    pub fn sub(self, other: Self) -> Self {
        Self::new(self.x - other.x, self.y - other.y)
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }

    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Total order: x first, then y.
    pub fn lex_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.x.total_cmp(&other.x).then(self.y.total_cmp(&other.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment {
    pub a: Point,
    pub b: Point,
}

impl LineSegment {
    pub const fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point {
        self.a.midpoint(self.b)
    }

    pub fn direction(&self) -> Point {
        self.b.sub(self.a)
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.b, self.a)
    }

    pub fn is_degenerate(&self) -> bool {
        self.a == self.b
    }

    /// Euclidean distance from `p` to the closed segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let d = self.direction();
        let len2 = d.dot(d);
        if len2 == 0.0 {
            return p.distance(self.a);
        }
        let t = (p.sub(self.a).dot(d) / len2).clamp(0.0, 1.0);
        p.distance(self.a.add(d.scale(t)))
    }
}

/// Line `{(x, y) : x cos θ + y sin θ = ρ}` with `θ ∈ [0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalLine {
    pub rho: f64,
    pub theta: f64,
}

impl NormalLine {
    /// Builds a line and brings `theta` into `[0, π)`, negating `rho` as needed.
    pub fn new(rho: f64, theta: f64) -> Self {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut rho = rho;
        if theta >= PI {
            theta -= PI;
            rho = -rho;
        }
        if theta >= PI {
            theta = 0.0;
        }
        Self { rho, theta }
    }

    /// Line with unit normal `n` through `p`.
    pub fn from_normal(n: Point, p: Point) -> Self {
        let len = n.norm();
        let n = n.scale(1.0 / len);
        Self::new(n.dot(p), n.y.atan2(n.x))
    }

    pub fn normal(&self) -> Point {
        Point::new(self.theta.cos(), self.theta.sin())
    }

    /// Unit direction along the line, `normal` rotated by +90°.
    pub fn direction(&self) -> Point {
        Point::new(-self.theta.sin(), self.theta.cos())
    }

    /// Foot of the perpendicular from the origin.
    pub fn origin_point(&self) -> Point {
        self.normal().scale(self.rho)
    }

    pub fn point_at(&self, t: f64) -> Point {
        self.origin_point().add(self.direction().scale(t))
    }

    pub fn signed_distance(&self, p: Point) -> f64 {
        let (s, c) = self.theta.sin_cos();
        p.x * c + p.y * s - self.rho
    }

    pub fn distance(&self, p: Point) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Coordinate of the projection of `p` along [`Self::direction`].
    pub fn project(&self, p: Point) -> f64 {
        p.dot(self.direction())
    }

    pub fn foot(&self, p: Point) -> Point {
        self.point_at(self.project(p))
    }

    /// Same line shifted by `offset` along its normal.
    pub fn offset(&self, offset: f64) -> Self {
        Self {
            rho: self.rho + offset,
            theta: self.theta,
        }
    }
}

/// Intersection point, or `None` when `|sin(θ1 − θ2)| < 1e-6`.
pub fn intersect(l1: &NormalLine, l2: &NormalLine) -> Option<Point> {
    let (s1, c1) = l1.theta.sin_cos();
    let (s2, c2) = l2.theta.sin_cos();
    let det = c1 * s2 - s1 * c2;
    if det.abs() < PARALLEL_EPS {
        return None;
    }
    let x = (l1.rho * s2 - l2.rho * s1) / det;
    let y = (c1 * l2.rho - c2 * l1.rho) / det;
    Some(Point::new(x, y))
}

/// Normal form of the infinite line through a segment.
pub fn segment_to_normal(seg: &LineSegment) -> Result<NormalLine> {
    if seg.is_degenerate() {
        return Err(Error::DegenerateSegment);
    }
    let d = seg.direction();
    Ok(NormalLine::from_normal(Point::new(-d.y, d.x), seg.a))
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = LineSegment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| LineSegment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area; positive for counter-clockwise order in (x, y).
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|e| e.a.cross(e.b)).sum::<f64>() * 0.5
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// Even-odd containment test.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for e in self.edges() {
            if (e.a.y <= p.y) != (e.b.y <= p.y) {
                let x = e.a.x + (p.y - e.a.y) * (e.b.x - e.a.x) / (e.b.y - e.a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges()
            .map(|e| e.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// No two non-adjacent edges touch and no vertex repeats.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            if edges[i].is_degenerate() {
                return false;
            }
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges may only share their common vertex.
                    if n > 3 && collinear_overlap(&edges[i], &edges[j]) {
                        return false;
                    }
                    continue;
                }
                if segments_intersect(&edges[i], &edges[j]) {
                    return false;
                }
            }
        }
        true
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test.
pub fn segments_intersect(s: &LineSegment, t: &LineSegment) -> bool {
    let d1 = orient(t.a, t.b, s.a);
    let d2 = orient(t.a, t.b, s.b);
    let d3 = orient(s.a, s.b, t.a);
    let d4 = orient(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(t.a, t.b, s.a))
        || (d2 == 0.0 && on_segment(t.a, t.b, s.b))
        || (d3 == 0.0 && on_segment(s.a, s.b, t.a))
        || (d4 == 0.0 && on_segment(s.a, s.b, t.b))
}

// Adjacent edges folding back onto each other.
fn collinear_overlap(s: &LineSegment, t: &LineSegment) -> bool {
    let shared = [s.a, s.b].into_iter().find(|p| *p == t.a || *p == t.b);
    let Some(shared) = shared else {
        return segments_intersect(s, t);
    };
    let u = if s.a == shared { s.b } else { s.a };
    let v = if t.a == shared { t.b } else { t.a };
    let du = u.sub(shared);
    let dv = v.sub(shared);
    du.cross(dv) == 0.0 && du.dot(dv) > 0.0
}

/// Counter-clockwise convex hull (Andrew's monotone chain), collinear points dropped.
pub fn convex_hull(points: &[Point]) -> Result<Polygon> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    if hull.len() < 3 {
        return Err(Error::Collinear);
    }
    Ok(Polygon::new(hull))
}

/// Douglas-Peucker on a closed polygon. The tolerance starts at 0.5 px and
/// doubles until at most `max_points` vertices remain. Returns the reduced
/// polygon and the final tolerance (0 when no reduction was needed).
pub fn simplify_with_tolerance(poly: &Polygon, max_points: usize) -> (Polygon, f64) {
    let max_points = max_points.max(3);
    if poly.len() <= max_points {
        return (poly.clone(), 0.0);
    }
    let mut eps = 0.5;
    loop {
        let reduced = douglas_peucker_closed(&poly.vertices, eps);
        if reduced.len() <= max_points {
            return (Polygon::new(reduced), eps);
        }
        eps *= 2.0;
    }
}

pub fn simplify(poly: &Polygon, max_points: usize) -> Polygon {
    simplify_with_tolerance(poly, max_points).0
}

fn douglas_peucker_closed(vertices: &[Point], eps: f64) -> Vec<Point> {
    let n = vertices.len();
    // Split the ring at vertex 0 and the vertex farthest from it.
    let far = (1..n)
        .max_by(|&i, &j| {
            vertices[0]
                .distance_squared(vertices[i])
                .total_cmp(&vertices[0].distance_squared(vertices[j]))
                .then(j.cmp(&i))
        })
        .unwrap_or(0);
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    let ring: Vec<usize> = (0..=n).map(|i| i % n).collect();
    dp_recurse(vertices, &ring[..=far], eps, &mut keep);
    dp_recurse(vertices, &ring[far..], eps, &mut keep);
    let count = keep.iter().filter(|&&k| k).count();
    if count < 3 {
        // Keep the vertex farthest from the chord so the result stays a polygon.
        let chord = LineSegment::new(vertices[0], vertices[far]);
        if let Some(best) = (0..n).filter(|&i| !keep[i]).max_by(|&i, &j| {
            chord
                .distance_to(vertices[i])
                .total_cmp(&chord.distance_to(vertices[j]))
                .then(j.cmp(&i))
        }) {
            keep[best] = true;
        }
    }
    (0..n).filter(|&i| keep[i]).map(|i| vertices[i]).collect()
}

fn dp_recurse(vertices: &[Point], chain: &[usize], eps: f64, keep: &mut [bool]) {
    if chain.len() < 3 {
        return;
    }
    let seg = LineSegment::new(vertices[chain[0]], vertices[*chain.last().unwrap()]);
    let (mut best, mut best_d) = (0, -1.0);
    for (k, &i) in chain.iter().enumerate().take(chain.len() - 1).skip(1) {
        let d = seg.distance_to(vertices[i]);
        if d > best_d {
            best = k;
            best_d = d;
        }
    }
    if best_d > eps {
        keep[chain[best]] = true;
        dp_recurse(vertices, &chain[..=best], eps, keep);
        dp_recurse(vertices, &chain[best..], eps, keep);
    }
}

/// Even-odd scanline fill. A pixel is set when its center `(x, y)` lies inside,
/// using half-open spans so shared edges are not counted twice.
pub fn rasterize(poly: &Polygon, width: u32, height: u32) -> RasterMask {
    let mut mask = RasterMask::empty(width, height);
    if poly.len() < 3 {
        return mask;
    }
    let mut xs: Vec<f64> = Vec::new();
    for y in 0..height {
        let yc = y as f64;
        xs.clear();
        for e in poly.edges() {
            let (lo, hi) = if e.a.y <= e.b.y { (e.a, e.b) } else { (e.b, e.a) };
            if lo.y <= yc && yc < hi.y {
                xs.push(lo.x + (yc - lo.y) * (hi.x - lo.x) / (hi.y - lo.y));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let start = pair[0].ceil().max(0.0);
            let end = pair[1].ceil().min(width as f64);
            if start >= end {
                continue;
            }
            for x in start as u32..end as u32 {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// Integer pixels of the 1-px line between two points (Bresenham on rounded
/// endpoints), including both ends.
pub fn line_pixels(a: Point, b: Point) -> Vec<(i64, i64)> {
    let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
    let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy + 1) as usize);
    loop {
        out.push((x0, y0));
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    out
}

/// `(|Δρ|, |Δθ|)` between two lines, using whichever of the two equivalent
/// parameterizations (`(ρ, θ)` or `(−ρ, θ ± π)`) gives the smaller angle gap.
pub fn line_distance(l1: &NormalLine, l2: &NormalLine) -> (f64, f64) {
    let dt = (l1.theta - l2.theta).abs();
    let direct = ((l1.rho - l2.rho).abs(), dt);
    let wrapped = ((l1.rho + l2.rho).abs(), PI - dt);
    if wrapped.1 < direct.1 {
        wrapped
    } else {
        direct
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, prop_assert_eq, prop_assume, proptest};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn intersect_axis_lines() {
        let p = intersect(&NormalLine::new(5.0, 0.0), &NormalLine::new(3.0, PI / 2.0)).unwrap();
        assert_abs_diff_eq!(p.x, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn intersect_parallel_is_none() {
        assert!(intersect(&NormalLine::new(1.0, 0.3), &NormalLine::new(4.0, 0.3)).is_none());
    }

    #[test]
    fn intersect_diagonals_satisfies_both() {
        let l1 = NormalLine::new(0.0, PI / 4.0);
        let l2 = NormalLine::new(5.0, 3.0 * PI / 4.0);
        let p = intersect(&l1, &l2).unwrap();
        assert!(l1.distance(p) < 1e-9);
        assert!(l2.distance(p) < 1e-9);
    }

    #[test]
    fn segment_to_normal_examples() {
        let v = segment_to_normal(&LineSegment::new(Point::new(0.0, 0.0), Point::new(0.0, 10.0)))
            .unwrap();
        assert_abs_diff_eq!(v.theta, 0.0);
        assert_abs_diff_eq!(v.rho, 0.0);

        let h = segment_to_normal(&LineSegment::new(Point::new(0.0, 5.0), Point::new(10.0, 5.0)))
            .unwrap();
        assert_abs_diff_eq!(h.theta, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(h.rho, 5.0, epsilon = 1e-12);

        let d = segment_to_normal(&LineSegment::new(Point::new(0.0, 0.0), Point::new(10.0, 10.0)))
            .unwrap();
        assert_abs_diff_eq!(d.theta, 3.0 * PI / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.rho.abs(), 0.0, epsilon = 1e-12);

        assert!(matches!(
            segment_to_normal(&LineSegment::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0))),
            Err(Error::DegenerateSegment)
        ));
    }

    #[test]
    fn hull_square_with_center() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
            Point::new(0.0, 4.0),
            Point::new(2.0, 2.0),
        ];
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 4);
        assert!(hull.signed_area() > 0.0);
        assert!(!hull.vertices.contains(&Point::new(2.0, 2.0)));
    }

    #[test]
    fn hull_of_circle_keeps_all_points_in_angular_order() {
        let pts: Vec<Point> = (0..24)
            .map(|i| {
                let a = i as f64 * 2.0 * PI / 24.0;
                Point::new(10.0 * a.cos(), 10.0 * a.sin())
            })
            .collect();
        let hull = convex_hull(&pts).unwrap();
        assert_eq!(hull.len(), 24);
        let start = hull.vertices.iter().position(|p| *p == pts[0]).unwrap();
        for k in 0..24 {
            let p = hull.vertices[(start + k) % 24];
            assert_abs_diff_eq!(p.x, pts[k].x, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, pts[k].y, epsilon = 1e-12);
        }
    }

    #[test]
    fn hull_errors() {
        assert!(matches!(
            convex_hull(&[Point::new(0.0, 0.0), Point::new(1.0, 1.0)]),
            Err(Error::TooFewPoints { .. })
        ));
        let line: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 2.0 * i as f64)).collect();
        assert!(matches!(convex_hull(&line), Err(Error::Collinear)));
    }

    fn dense_square(n_per_side: usize) -> Polygon {
        let s = 10.0;
        let mut v = Vec::new();
        for i in 0..n_per_side {
            v.push(Point::new(s * i as f64 / n_per_side as f64, 0.0));
        }
        for i in 0..n_per_side {
            v.push(Point::new(s, s * i as f64 / n_per_side as f64));
        }
        for i in 0..n_per_side {
            v.push(Point::new(s - s * i as f64 / n_per_side as f64, s));
        }
        for i in 0..n_per_side {
            v.push(Point::new(0.0, s - s * i as f64 / n_per_side as f64));
        }
        Polygon::new(v)
    }

    #[test]
    fn simplify_dense_square_to_corners() {
        let out = simplify(&dense_square(10), 20);
        let mut got = out.vertices.clone();
        got.sort_by(|a, b| a.lex_cmp(b));
        assert_eq!(
            got,
            vec![
                Point::new(0.0, 0.0),
                Point::new(0.0, 10.0),
                Point::new(10.0, 0.0),
                Point::new(10.0, 10.0)
            ]
        );
    }

    #[test]
    fn simplify_leaves_small_polygons() {
        let tri = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(5.0, 0.0),
            Point::new(0.0, 5.0),
        ]);
        assert_eq!(simplify(&tri, 20), tri);
    }

    #[test]
    fn simplify_jagged_contour_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v: Vec<Point> = (0..100)
            .map(|i| {
                let a = i as f64 * 2.0 * PI / 100.0;
                let r = 40.0 + rng.gen_range(-3.0..3.0);
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let poly = Polygon::new(v);
        let (out, eps) = simplify_with_tolerance(&poly, 20);
        assert!(out.len() <= 20 && out.len() >= 3);
        assert!(out.vertices.iter().all(|p| poly.vertices.contains(p)));
        for p in &poly.vertices {
            assert!(out.boundary_distance(*p) <= eps + 1e-9);
        }
    }

    #[test]
    fn rasterize_examples() {
        let rect = Polygon::new(vec![
            Point::new(0.5, 0.5),
            Point::new(3.5, 0.5),
            Point::new(3.5, 2.5),
            Point::new(0.5, 2.5),
        ]);
        assert_eq!(rasterize(&rect, 5, 5).count(), 6);

        let full = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(7.0, 0.0),
            Point::new(7.0, 4.0),
            Point::new(0.0, 4.0),
        ]);
        assert_eq!(rasterize(&full, 7, 4).count(), 28);

        let sliver = Polygon::new(vec![
            Point::new(0.0, 1.2),
            Point::new(6.0, 1.2),
            Point::new(6.0, 1.4),
        ]);
        assert_eq!(rasterize(&sliver, 7, 4).count(), 0);
    }

    #[test]
    fn line_pixels_are_connected() {
        let px = line_pixels(Point::new(0.0, 0.0), Point::new(7.0, 3.0));
        assert_eq!(px.first(), Some(&(0, 0)));
        assert_eq!(px.last(), Some(&(7, 3)));
        assert_eq!(px.len(), 8);
        for w in px.windows(2) {
            assert!((w[0].0 - w[1].0).abs() <= 1 && (w[0].1 - w[1].1).abs() <= 1);
        }
        assert_eq!(line_pixels(Point::new(2.0, 2.0), Point::new(2.0, 2.0)), vec![(2, 2)]);
    }

    #[test]
    fn simple_polygon_checks() {
        let square = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(square.is_simple());
        let bowtie = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(!bowtie.is_simple());
    }

    #[test]
    fn line_distance_wraps() {
        let a = NormalLine::new(10.0, 0.01);
        let b = NormalLine::new(-10.0, PI - 0.01);
        let (dr, dt) = line_distance(&a, &b);
        assert!(dr < 1e-9 && (dt - 0.02).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn segment_normal_round_trip(ax in -500.0..500.0f64, ay in -500.0..500.0f64,
                                     bx in -500.0..500.0f64, by in -500.0..500.0f64) {
            let seg = LineSegment::new(Point::new(ax, ay), Point::new(bx, by));
            prop_assume!(seg.length() > 1e-3);
            let line = segment_to_normal(&seg).unwrap();
            prop_assert!((0.0..PI).contains(&line.theta));
            for p in [seg.a, seg.b] {
                let q = line.point_at(line.project(p));
                prop_assert!(q.distance(p) < 1e-6);
                prop_assert!(line.distance(p) < 1e-9);
            }
        }

        #[test]
        fn simplify_never_exceeds_budget(n in 3usize..80, max in 3usize..25, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<Point> = (0..n)
                .map(|i| {
                    let a = i as f64 * 2.0 * PI / n as f64;
                    let r = 30.0 + rng.gen_range(-5.0..5.0);
                    Point::new(r * a.cos(), r * a.sin())
                })
                .collect();
            let poly = Polygon::new(v);
            let out = simplify(&poly, max);
            if n <= max {
                prop_assert_eq!(&out, &poly);
            } else {
                prop_assert!(out.len() <= max && out.len() >= 3);
            }
            prop_assert!(out.vertices.iter().all(|p| poly.vertices.contains(p)));
        }

        #[test]
        fn hull_absorbs_interior_points(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Point> = (0..30)
                .map(|_| Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
                .collect();
            let hull = convex_hull(&pts).unwrap();
            let mut more = hull.vertices.clone();
            more.extend(pts.iter().copied());
            let again = convex_hull(&more).unwrap();
            let mut a = hull.vertices.clone();
            let mut b = again.vertices.clone();
            a.sort_by(|p, q| p.lex_cmp(q));
            b.sort_by(|p, q| p.lex_cmp(q));
            prop_assert_eq!(a, b);
        }
    }
}
