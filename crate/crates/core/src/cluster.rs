//! Generic learners used by the line extractors: DBSCAN, k-means and RANSAC
//! line regression. All stochastic routines take an explicit seed.

use std::collections::{HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{NormalLine, Point};

/// Per-point cluster ids; `None` marks DBSCAN noise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<Option<usize>>,
    pub k: usize,
}

impl ClusterLabeling {
    /// Indices belonging to each cluster, in cluster-id order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                groups[*c].push(i);
            }
        }
        groups
    }

    pub fn noise(&self) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
    }
}

/// DBSCAN over points with a uniform grid index. A point is core when at least
/// `min_pts` points (itself included) lie within distance `eps`. Clusters are
/// numbered in order of their lowest-index core point; a border point reachable
/// from several clusters joins the lowest-numbered one.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> ClusterLabeling {
    assert!(eps > 0.0, "eps must be positive");
    let grid = Grid::new(points, eps);
    let eps2 = eps * eps;
    dbscan_impl(points.len(), min_pts, |i, out| {
        grid.neighbors(points, i, eps2, out);
    })
}

/// DBSCAN with a caller-supplied symmetric distance, O(n²). Meant for small
/// sets where the metric is not Euclidean.
pub fn dbscan_with(
    n: usize,
    eps: f64,
    min_pts: usize,
    distance: impl Fn(usize, usize) -> f64,
) -> ClusterLabeling {
    dbscan_impl(n, min_pts, |i, out| {
        out.clear();
        out.extend((0..n).filter(|&j| distance(i, j) <= eps));
    })
}

fn dbscan_impl(
    n: usize,
    min_pts: usize,
    mut neighbors: impl FnMut(usize, &mut Vec<usize>),
) -> ClusterLabeling {
    let min_pts = min_pts.max(1);
    let mut adjacency: Vec<Vec<usize>> = Vec::with_capacity(n);
    let mut buf = Vec::new();
    for i in 0..n {
        neighbors(i, &mut buf);
        adjacency.push(buf.clone());
    }
    let core: Vec<bool> = adjacency.iter().map(|a| a.len() >= min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut k = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if labels[seed].is_some() || !core[seed] {
            continue;
        }
        labels[seed] = Some(k);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            if !core[p] {
                continue;
            }
            for &q in &adjacency[p] {
                if labels[q].is_none() {
                    labels[q] = Some(k);
                    queue.push_back(q);
                }
            }
        }
        k += 1;
    }
    ClusterLabeling { labels, k }
}

struct Grid {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut cells: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells
                .entry(Self::key(*p, cell))
                .or_default()
                .push(i);
        }
        Self { cell, cells }
    }

    fn key(p: Point, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn neighbors(&self, points: &[Point], i: usize, eps2: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[i];
        let (cx, cy) = Self::key(p, self.cell);
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(bucket) = self.cells.get(&(cx + dx, cy + dy)) {
                    out.extend(
                        bucket
                            .iter()
                            .copied()
                            .filter(|&j| p.distance_squared(points[j]) <= eps2),
                    );
                }
            }
        }
        // Bucket iteration order depends on the hash map; keep results ordered.
        out.sort_unstable();
    }
}

#[derive(Debug, Clone)]
pub struct KMeans {
    pub labeling: ClusterLabeling,
    pub centroids: Vec<Point>,
    /// Sum of squared distances after each assignment step.
    pub objective_history: Vec<f64>,
}

impl KMeans {
    pub fn objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&0.0)
    }
}

const KMEANS_MAX_ITERS: usize = 100;

/// Lloyd's algorithm from a seeded k-means++ initialization. Stops when the
/// assignment is stable or after 100 iterations. Empty clusters keep their
/// previous centroid; assignment ties go to the lowest centroid index.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<KMeans> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_plus_plus(points, k, &mut rng);
    let mut assignment = vec![usize::MAX; points.len()];
    let mut history = Vec::new();

    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (best, d2) = nearest(&centroids, *p);
            objective += d2;
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        history.push(objective);
        if !changed {
            break;
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (p, &c) in points.iter().zip(&assignment) {
            sums[c].0 += p.x;
            sums[c].1 += p.y;
            sums[c].2 += 1;
        }
        for (c, (sx, sy, n)) in sums.into_iter().enumerate() {
            if n > 0 {
                centroids[c] = Point::new(sx / n as f64, sy / n as f64);
            }
        }
    }

    Ok(KMeans {
        labeling: ClusterLabeling {
            labels: assignment.into_iter().map(Some).collect(),
            k,
        },
        centroids,
        objective_history: history,
    })
}

fn nearest(centroids: &[Point], p: Point) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, q) in centroids.iter().enumerate() {
        let d2 = p.distance_squared(*q);
        if d2 < best.1 {
            best = (c, d2);
        }
    }
    best
}

fn kmeans_plus_plus(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut chosen = vec![false; points.len()];
    let first = rng.gen_range(0..points.len());
    chosen[first] = true;
    let mut centroids = vec![points[first]];
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_squared(points[first])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total weight")
        } else {
            // Only duplicates left: take the first point not yet used.
            chosen.iter().position(|c| !c).unwrap_or(0)
        };
        chosen[next] = true;
        centroids.push(points[next]);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(p.distance_squared(points[next]));
        }
    }
    centroids
}

/// Principal axes of a point set.
#[derive(Debug, Clone, Copy)]
pub struct Pca {
    pub mean: Point,
    /// Largest eigenvalue of the covariance.
    pub major: f64,
    /// Smallest eigenvalue of the covariance.
    pub minor: f64,
    /// Unit eigenvector of `major`.
    pub direction: Point,
}

impl Pca {
    /// `minor / major`, 0 for a degenerate (single-point) set.
    pub fn aspect(&self) -> f64 {
        if self.major <= 0.0 {
            0.0
        } else {
            self.minor / self.major
        }
    }
}

pub fn pca<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<Pca> {
    let pts: Vec<Point> = points.into_iter().copied().collect();
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    let mean = Point::new(
        pts.iter().map(|p| p.x).sum::<f64>() / n,
        pts.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let d = p.sub(mean);
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    sxx /= n;
    sxy /= n;
    syy /= n;
    let half_trace = 0.5 * (sxx + syy);
    let disc = (0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy).sqrt();
    let major = half_trace + disc;
    let minor = (half_trace - disc).max(0.0);
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(Pca {
        mean,
        major,
        minor,
        direction: Point::new(angle.cos(), angle.sin()),
    })
}

/// Total-least-squares line through a set of points.
pub fn fit_line_tls<'a>(points: impl IntoIterator<Item = &'a Point>) -> Option<NormalLine> {
    let p = pca(points)?;
    if p.major <= 0.0 {
        return None;
    }
    Some(NormalLine::from_normal(
        Point::new(-p.direction.y, p.direction.x),
        p.mean,
    ))
}

#[derive(Debug, Clone)]
pub struct FittedLine {
    pub model: NormalLine,
    /// Indices into the input slice, ascending.
    pub inliers: Vec<usize>,
    pub residual_threshold: f64,
}

/// RANSAC over two-point hypotheses, scored by inlier count (ties: lower total
/// residual), followed by a total-least-squares refit on the inliers. When the
/// number of distinct pairs does not exceed `iterations` every pair is tried.
pub fn ransac_line(
    points: &[Point],
    inlier_tol: f64,
    iterations: usize,
    seed: u64,
) -> Result<FittedLine> {
    let n = points.len();
    let distinct = points.iter().skip(1).any(|p| *p != points[0]);
    if n < 2 || !distinct {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: if n == 0 { 0 } else { 1 },
        });
    }

    let score = |line: &NormalLine| -> (Vec<usize>, f64) {
        let mut inliers = Vec::new();
        let mut residual = 0.0;
        for (i, p) in points.iter().enumerate() {
            let d = line.distance(*p);
            if d <= inlier_tol {
                inliers.push(i);
                residual += d;
            }
        }
        (inliers, residual)
    };

    let mut best: Option<(NormalLine, Vec<usize>, f64)> = None;
    let mut consider = |i: usize, j: usize| {
        let (a, b) = (points[i], points[j]);
        if a == b {
            return;
        }
        let d = b.sub(a);
        let line = NormalLine::from_normal(Point::new(-d.y, d.x), a);
        let (inliers, residual) = score(&line);
        let better = match &best {
            None => true,
            Some((_, bi, br)) => {
                inliers.len() > bi.len() || (inliers.len() == bi.len() && residual < *br)
            }
        };
        if better {
            best = Some((line, inliers, residual));
        }
    };

    let pairs = n * (n - 1) / 2;
    if pairs <= iterations {
        for i in 0..n {
            for j in i + 1..n {
                consider(i, j);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..iterations {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            consider(i, j);
        }
    }

    let (hypothesis, hyp_inliers, _) = match best {
        Some(b) => b,
        // Random draws only hit duplicate points; fall back to the first distinct pair.
        None => {
            let j = points.iter().position(|p| *p != points[0]).unwrap();
            let d = points[j].sub(points[0]);
            let line = NormalLine::from_normal(Point::new(-d.y, d.x), points[0]);
            let (inl, r) = score(&line);
            (line, inl, r)
        }
    };

    let refit = fit_line_tls(hyp_inliers.iter().map(|&i| &points[i]));
    if let Some(model) = refit {
        let (inliers, _) = score(&model);
        if inliers.len() >= 2 {
            return Ok(FittedLine {
                model,
                inliers,
                residual_threshold: inlier_tol,
            });
        }
    }
    Ok(FittedLine {
        model: hypothesis,
        inliers: hyp_inliers,
        residual_threshold: inlier_tol,
    })
}
