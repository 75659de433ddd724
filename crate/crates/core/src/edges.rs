//! Edge detection: Sobel gradients, Otsu thresholding, the Otsu-adaptive
//! Canny detector, ingestion of externally computed edge maps, and Harris
//! corners on binary edge rasters.

use std::collections::VecDeque;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::raster::{load_gray, Bitmap, EdgeMap, GrayImage};

/// Per-pixel image derivatives.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)` in `(-π, π]`.
    pub direction: Vec<f64>,
}

impl GradientField {
    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn at(&self, x: u32, y: u32) -> (f64, f64) {
        let i = self.idx(x, y);
        (self.gx[i], self.gy[i])
    }
}

/// 3x3 Sobel derivatives with edge-replication padding.
pub fn sobel(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let data: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    Ok(sobel_f64(w, h, &data))
}

fn sobel_f64(w: u32, h: u32, data: &[f64]) -> GradientField {
    let (wi, hi) = (w as i64, h as i64);
    let at = |x: i64, y: i64| -> f64 {
        let x = x.clamp(0, wi - 1);
        let y = y.clamp(0, hi - 1);
        data[(y * wi + x) as usize]
    };
    let n = (w * h) as usize;
    let mut gx = Vec::with_capacity(n);
    let mut gy = Vec::with_capacity(n);
    for y in 0..hi {
        for x in 0..wi {
            let dx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let dy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            gx.push(dx);
            gy.push(dy);
        }
    }
    let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    let direction = gx.iter().zip(&gy).map(|(a, b)| b.atan2(*a)).collect();
    GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
        direction,
    }
}

// 128x128 -> 256-bit product as (hi, lo).
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let lo = (ll & MASK) | (mid << 64);
    let hi = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (hi, lo)
}

/// Histogram totals beyond this would overflow the exact comparison.
const OTSU_MAX_TOTAL: u64 = 1 << 28;

/// Otsu's threshold: the level `t` maximizing between-class variance, where
/// class 0 holds levels `<= t`. Compared exactly in integer arithmetic; ties go
/// to the smallest `t`.
pub fn otsu_threshold(hist: &[u64; 256]) -> Result<u8> {
    let occupied = hist.iter().filter(|&&c| c > 0).count();
    if occupied < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let total: u64 = hist.iter().sum();
    if total >= OTSU_MAX_TOTAL {
        return Err(Error::InvalidParameter(format!(
            "histogram total {total} exceeds {OTSU_MAX_TOTAL}"
        )));
    }
    let sum: u128 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as u128 * c as u128)
        .sum();
    let n = total as u128;

    // Between-class variance is proportional to (S n0 - N s0)^2 / (n0 n1).
    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut s0) = (0u128, 0u128);
    for t in 0..255usize {
        n0 += hist[t] as u128;
        s0 += t as u128 * hist[t] as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (sum * n0).abs_diff(n * s0);
        let num = diff * diff;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => mul_wide(num, bd) > mul_wide(bn, den),
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t).ok_or(Error::DegenerateHistogram)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CannyConfig {
    /// Gaussian pre-blur standard deviation in pixels.
    pub sigma: f64,
    /// Hysteresis low threshold as a fraction of the Otsu-derived high one.
    pub low_ratio: f64,
}

impl Default for CannyConfig {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low_ratio: 0.5,
        }
    }
}

/// Canny edge detection with the high hysteresis threshold chosen by Otsu's
/// method on the gradient-magnitude histogram.
///
/// Magnitudes are quantized to 256 levels relative to the maximum; with Otsu
/// level `t`, pixels above `(t + 0.5) / 255 * max` are strong edges and
/// pixels above `low_ratio` of that are weak. A flat image (or one whose
/// magnitude histogram is single-valued) produces an empty map.
pub fn adaptive_canny(img: &GrayImage, cfg: &CannyConfig) -> Result<EdgeMap> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: 3,
        });
    }
    let data: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
    let blurred = gaussian_blur(w, h, &data, cfg.sigma);
    let grad = sobel_f64(w, h, &blurred);

    let max = grad.magnitude.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(Bitmap::empty(w, h));
    }
    let mut hist = [0u64; 256];
    for &m in &grad.magnitude {
        hist[quantize(m, max)] += 1;
    }
    let t = match otsu_threshold(&hist) {
        Ok(t) => t,
        Err(Error::DegenerateHistogram) => return Ok(Bitmap::empty(w, h)),
        Err(e) => return Err(e),
    };
    let high = (t as f64 + 0.5) / 255.0 * max;
    let low = cfg.low_ratio * high;

    let thin = non_maximum_suppression(&grad);
    Ok(hysteresis(w, h, &thin, low, high))
}

fn quantize(m: f64, max: f64) -> usize {
    ((m / max * 255.0).round() as usize).min(255)
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

fn gaussian_blur(w: u32, h: u32, data: &[f64], sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (wi, hi) = (w as i64, h as i64);
    let mut tmp = vec![0.0; data.len()];
    for y in 0..hi {
        for x in 0..wi {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let sx = (x + j as i64 - r).clamp(0, wi - 1);
                acc += kv * data[(y * wi + sx) as usize];
            }
            tmp[(y * wi + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0; data.len()];
    for y in 0..hi {
        for x in 0..wi {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                let sy = (y + j as i64 - r).clamp(0, hi - 1);
                acc += kv * tmp[(sy * wi + x) as usize];
            }
            out[(y * wi + x) as usize] = acc;
        }
    }
    out
}

/// Pixel offset toward the positive gradient direction, quantized to 4 bins.
fn gradient_step(gx: f64, gy: f64) -> (i64, i64) {
    let mut angle = gy.atan2(gx).to_degrees();
    if angle < 0.0 {
        angle += 180.0;
    }
    if !(22.5..157.5).contains(&angle) {
        (1, 0)
    } else if angle < 67.5 {
        (1, 1)
    } else if angle < 112.5 {
        (0, 1)
    } else {
        (-1, 1)
    }
}

/// Keeps magnitudes that are a local maximum across the edge. A plateau of two
/// equal values keeps the pixel on the negative-gradient side only.
fn non_maximum_suppression(g: &GradientField) -> Vec<f64> {
    let (w, h) = (g.width as i64, g.height as i64);
    let mut out = vec![0.0; g.magnitude.len()];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let i = (y * w + x) as usize;
            let m = g.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (dx, dy) = gradient_step(g.gx[i], g.gy[i]);
            let fwd = g.magnitude[((y + dy) * w + x + dx) as usize];
            let back = g.magnitude[((y - dy) * w + x - dx) as usize];
            if m >= fwd && m > back {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(w: u32, h: u32, thin: &[f64], low: f64, high: f64) -> EdgeMap {
    let (wi, hi) = (w as i64, h as i64);
    let mut out = Bitmap::empty(w, h);
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > high {
            let (x, y) = ((i as i64) % wi, (i as i64) / wi);
            out.set(x as u32, y as u32, true);
            queue.push_back((x, y));
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= wi || ny >= hi {
                    continue;
                }
                let j = (ny * wi + nx) as usize;
                if thin[j] > low && !out.get(nx as u32, ny as u32) {
                    out.set(nx as u32, ny as u32, true);
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    out
}

/// Loads a grayscale edge-strength map (e.g. from a neural edge detector),
/// optionally bilinear-resized to `resize_to`, then binarized at `threshold`.
pub fn ingest_edge_map(
    path: impl AsRef<Path>,
    threshold: u8,
    resize_to: Option<(u32, u32)>,
) -> Result<EdgeMap> {
    let img = load_gray(path)?;
    binarize_edge_strengths(&img, threshold, resize_to)
}

pub fn binarize_edge_strengths(
    img: &GrayImage,
    threshold: u8,
    resize_to: Option<(u32, u32)>,
) -> Result<EdgeMap> {
    let img = match resize_to {
        Some((w, h)) if (w, h) != img.dimensions() => img.resize_bilinear(w, h)?,
        Some((0, _)) | Some((_, 0)) => {
            return Err(Error::ZeroDimension {
                width: 0,
                height: 0,
            })
        }
        _ => img.clone(),
    };
    Ok(Bitmap::from_gray(&img, threshold))
}

/// Detected corners with their Harris responses.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CornerSet {
    pub points: Vec<Point>,
    pub responses: Vec<f64>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarrisConfig {
    pub k: f64,
    /// Odd side length of the summation window.
    pub window: u32,
    /// Keep responses at least this fraction of the strongest one.
    pub rel_threshold: f64,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        Self {
            k: 0.04,
            window: 5,
            rel_threshold: 0.1,
        }
    }
}

/// Harris corners on a binary map treated as a 0/1 intensity image.
///
/// `R = det(M) - k trace(M)^2` with `M` the box-summed structure tensor of
/// Sobel derivatives. Returned corners are local maxima over the window with
/// `R > 0` and `R >= rel_threshold * max(R)`, in raster order.
pub fn harris_corners(map: &EdgeMap, cfg: &HarrisConfig) -> Result<CornerSet> {
    if !(0.02..=0.2).contains(&cfg.k) {
        return Err(Error::InvalidParameter(format!(
            "harris k {} outside [0.02, 0.2]",
            cfg.k
        )));
    }
    if cfg.window < 3 || cfg.window.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "harris window {} must be odd and >= 3",
            cfg.window
        )));
    }
    let Some((x0, y0, x1, y1)) = bounding_box(map) else {
        return Ok(CornerSet::default());
    };
    let pad = cfg.window as i64 + 2;
    let (w, h) = (map.width() as i64, map.height() as i64);
    let bx0 = (x0 as i64 - pad).max(0);
    let by0 = (y0 as i64 - pad).max(0);
    let bx1 = (x1 as i64 + pad).min(w - 1);
    let by1 = (y1 as i64 + pad).min(h - 1);
    let (cw, ch) = ((bx1 - bx0 + 1) as u32, (by1 - by0 + 1) as u32);
    if cw < 3 || ch < 3 {
        return Ok(CornerSet::default());
    }

    // The crop keeps a zero margin around the content except where it meets
    // the image border, so replicate padding behaves as on the full image.
    let crop_w = cw as i64;
    let mut data = Vec::with_capacity((cw * ch) as usize);
    for y in by0..=by1 {
        for x in bx0..=bx1 {
            data.push(if map.get(x as u32, y as u32) { 1.0 } else { 0.0 });
        }
    }
    let grad = sobel_f64(cw, ch, &data);
    let ixx: Vec<f64> = grad.gx.iter().map(|g| g * g).collect();
    let iyy: Vec<f64> = grad.gy.iter().map(|g| g * g).collect();
    let ixy: Vec<f64> = grad.gx.iter().zip(&grad.gy).map(|(a, b)| a * b).collect();
    let r = (cfg.window / 2) as i64;
    let sxx = box_sum(cw, ch, &ixx, r);
    let syy = box_sum(cw, ch, &iyy, r);
    let sxy = box_sum(cw, ch, &ixy, r);
    let response: Vec<f64> = (0..sxx.len())
        .map(|i| {
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let tr = sxx[i] + syy[i];
            det - cfg.k * tr * tr
        })
        .collect();

    let max = response.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Ok(CornerSet::default());
    }
    let floor = cfg.rel_threshold * max;
    let mut out = CornerSet::default();
    for cy in 0..ch as i64 {
        for cx in 0..crop_w {
            let i = (cy * crop_w + cx) as usize;
            let v = response[i];
            if v <= 0.0 || v < floor {
                continue;
            }
            let mut is_max = true;
            'scan: for ny in (cy - r).max(0)..=(cy + r).min(ch as i64 - 1) {
                for nx in (cx - r).max(0)..=(cx + r).min(crop_w - 1) {
                    let j = (ny * crop_w + nx) as usize;
                    // Earlier raster positions win ties.
                    if response[j] > v || (response[j] == v && j < i) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                out.points
                    .push(Point::new((cx + bx0) as f64, (cy + by0) as f64));
                out.responses.push(v);
            }
        }
    }
    Ok(out)
}

fn bounding_box(map: &Bitmap) -> Option<(u32, u32, u32, u32)> {
    let mut bb: Option<(u32, u32, u32, u32)> = None;
    for (x, y) in map.pixels() {
        bb = Some(match bb {
            None => (x, y, x, y),
            Some((a, b, c, d)) => (a.min(x), b.min(y), c.max(x), d.max(y)),
        });
    }
    bb
}

// Sum over a (2r+1)^2 window, clipped at the borders, via an integral image.
fn box_sum(w: u32, h: u32, data: &[f64], r: i64) -> Vec<f64> {
    let (w, h) = (w as usize, h as usize);
    let mut integral = vec![0.0; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += data[y * w + x];
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let xa = (x - r).max(0) as usize;
            let ya = (y - r).max(0) as usize;
            let xb = ((x + r + 1) as usize).min(w);
            let yb = ((y + r + 1) as usize).min(h);
            out[y as usize * w + x as usize] = integral[yb * (w + 1) + xb]
                - integral[ya * (w + 1) + xb]
                - integral[yb * (w + 1) + xa]
                + integral[ya * (w + 1) + xa];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert_eq, proptest};

    fn step_image(w: u32, h: u32, at: u32) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x < at { 0 } else { 255 }).unwrap()
    }

    // Exhaustive Otsu reference: recompute both class statistics per level.
    fn otsu_oracle(hist: &[u64; 256]) -> u8 {
        let mut best: Option<(u8, u128, u128)> = None;
        for t in 0..256usize {
            let n0: u128 = hist[..=t].iter().map(|&c| c as u128).sum();
            let n1: u128 = hist[t + 1..].iter().map(|&c| c as u128).sum();
            if n0 == 0 || n1 == 0 {
                continue;
            }
            let s0: u128 = (0..=t).map(|i| i as u128 * hist[i] as u128).sum();
            let s1: u128 = (t + 1..256).map(|i| i as u128 * hist[i] as u128).sum();
            // n0 n1 (mu0 - mu1)^2 scaled by n0^2 n1^2: (s0 n1 - s1 n0)^2 / (n0 n1)
            let diff = (s0 * n1).abs_diff(s1 * n0);
            let num = diff * diff;
            let den = n0 * n1;
            match best {
                Some((_, bn, bd)) if num * bd <= bn * den => {}
                _ => best = Some((t as u8, num, den)),
            }
        }
        best.unwrap().0
    }

    #[test]
    fn sobel_constant_image_is_zero() {
        let g = sobel(&GrayImage::filled(6, 5, 90).unwrap()).unwrap();
        assert!(g.gx.iter().chain(&g.gy).all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_vertical_step() {
        let img = step_image(8, 6, 4);
        let g = sobel(&img).unwrap();
        // Hand convolution: columns 3 and 4 straddle the step, 4 * 255 each.
        for y in 0..6 {
            assert_eq!(g.at(3, y).0, 1020.0);
            assert_eq!(g.at(4, y).0, 1020.0);
            assert_eq!(g.at(1, y).0, 0.0);
            assert_eq!(g.at(6, y).0, 0.0);
            for x in 0..8 {
                assert_eq!(g.at(x, y).1, 0.0);
            }
        }
    }

    #[test]
    fn sobel_transpose_swaps_components() {
        let img = GrayImage::from_fn(7, 5, |x, y| ((x * 37 + y * y * 11) % 256) as u8).unwrap();
        let a = sobel(&img).unwrap();
        let b = sobel(&img.transpose()).unwrap();
        for y in 0..5 {
            for x in 0..7 {
                let (ax, ay) = a.at(x, y);
                let (bx, by) = b.at(y, x);
                assert_eq!(ax, by);
                assert_eq!(ay, bx);
            }
        }
    }

    #[test]
    fn sobel_rejects_tiny_images() {
        assert!(matches!(
            sobel(&GrayImage::filled(2, 5, 0).unwrap()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn otsu_two_levels() {
        let mut hist = [0u64; 256];
        hist[10] = 100;
        hist[200] = 100;
        let t = otsu_threshold(&hist).unwrap();
        assert_eq!(t, otsu_oracle(&hist));
        // Every threshold in [10, 199] separates the two levels equally well.
        assert_eq!(t, 10);
    }

    #[test]
    fn otsu_degenerate() {
        let mut hist = [0u64; 256];
        hist[42] = 1000;
        assert!(matches!(
            otsu_threshold(&hist),
            Err(Error::DegenerateHistogram)
        ));
    }

    #[test]
    fn wide_multiply() {
        let a = u128::MAX;
        let (hi, lo) = mul_wide(a, a);
        assert_eq!(hi, u128::MAX - 1);
        assert_eq!(lo, 1);
        assert_eq!(mul_wide(3, 5), (0, 15));
    }

    proptest! {
        #[test]
        fn otsu_matches_exhaustive_sweep(counts in proptest::collection::vec(0u64..1000, 256)) {
            let mut hist = [0u64; 256];
            hist.copy_from_slice(&counts);
            if hist.iter().filter(|&&c| c > 0).count() >= 2 {
                prop_assert_eq!(otsu_threshold(&hist).unwrap(), otsu_oracle(&hist));
            }
        }
    }

    #[test]
    fn canny_constant_image_is_empty() {
        let e = adaptive_canny(&GrayImage::filled(20, 20, 128).unwrap(), &CannyConfig::default())
            .unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn canny_localizes_step() {
        let e = adaptive_canny(&step_image(64, 32, 32), &CannyConfig::default()).unwrap();
        assert!(!e.is_empty());
        for (x, y) in e.pixels() {
            assert!((x as f64 - 31.5).abs() <= 1.0, "edge at ({x}, {y})");
        }
        // One pixel per interior row.
        for y in 1..31 {
            assert_eq!((0..64).filter(|&x| e.get(x, y)).count(), 1);
        }
    }

    #[test]
    fn canny_output_is_thin() {
        let img = GrayImage::from_fn(80, 60, |x, y| {
            let (dx, dy) = (x as f64 - 40.0, y as f64 - 30.0);
            if dx.abs() / 25.0 + dy.abs() / 18.0 <= 1.0 {
                220
            } else {
                30
            }
        })
        .unwrap();
        let cfg = CannyConfig::default();
        let e = adaptive_canny(&img, &cfg).unwrap();
        let data: Vec<f64> = img.data().iter().map(|&v| v as f64).collect();
        let g = sobel_f64(80, 60, &gaussian_blur(80, 60, &data, cfg.sigma));
        for (x, y) in e.pixels() {
            let i = g.idx(x, y);
            let (dx, dy) = gradient_step(g.gx[i], g.gy[i]);
            let (x, y) = (x as i64, y as i64);
            assert!(!(e.get_signed(x + dx, y + dy) && e.get_signed(x - dx, y - dy)));
        }
    }

    #[test]
    fn canny_rejects_tiny_images() {
        assert!(adaptive_canny(&GrayImage::filled(2, 2, 0).unwrap(), &CannyConfig::default()).is_err());
    }

    #[test]
    fn binarize_examples() {
        let white = GrayImage::filled(3, 3, 255).unwrap();
        assert_eq!(binarize_edge_strengths(&white, 128, None).unwrap().count(), 9);
        let black = GrayImage::filled(3, 3, 0).unwrap();
        assert!(binarize_edge_strengths(&black, 128, None).unwrap().is_empty());
        let diag = GrayImage::new(2, 2, vec![200, 100, 100, 200]).unwrap();
        let m = binarize_edge_strengths(&diag, 128, None).unwrap();
        assert_eq!(m.bits(), &[true, false, false, true]);
        let up = binarize_edge_strengths(&white, 128, Some((6, 4))).unwrap();
        assert_eq!(up.dimensions(), (6, 4));
        assert!(binarize_edge_strengths(&white, 128, Some((0, 4))).is_err());
    }

    #[test]
    fn ingest_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.png");
        GrayImage::new(2, 2, vec![200, 100, 100, 200])
            .unwrap()
            .save(&path)
            .unwrap();
        let m = ingest_edge_map(&path, 128, None).unwrap();
        assert_eq!(m.bits(), &[true, false, false, true]);
        assert!(ingest_edge_map(dir.path().join("missing.png"), 128, None).is_err());
    }

    fn l_shape(w: u32, h: u32, cx: u32, cy: u32) -> Bitmap {
        Bitmap::from_fn(w, h, |x, y| (y == cy && x >= cx) || (x == cx && y >= cy))
    }

    #[test]
    fn harris_line_has_no_corners() {
        let m = Bitmap::from_fn(40, 30, |x, y| y == 12 && x < 40);
        assert!(harris_corners(&m, &HarrisConfig::default()).unwrap().is_empty());
        // A diagonal only responds where it runs into the image corners.
        let d = Bitmap::from_fn(40, 40, |x, y| x == y);
        let c = harris_corners(&d, &HarrisConfig::default()).unwrap();
        for p in &c.points {
            let to_end = p.distance(Point::new(0.0, 0.0)).min(p.distance(Point::new(39.0, 39.0)));
            assert!(to_end <= 4.0, "{c:?}");
        }
    }

    #[test]
    fn harris_l_corner() {
        let c = harris_corners(&l_shape(40, 40, 15, 12), &HarrisConfig::default()).unwrap();
        assert_eq!(c.len(), 1, "{c:?}");
        assert!(c.points[0].distance(Point::new(15.0, 12.0)) <= 2.0);
    }

    #[test]
    fn harris_empty_map() {
        assert!(harris_corners(&Bitmap::empty(10, 10), &HarrisConfig::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn harris_rotation_consistent() {
        let m = l_shape(40, 40, 15, 12);
        // Rotate by 90 degrees: (x, y) -> (h - 1 - y, x).
        let rot = Bitmap::from_fn(40, 40, |x, y| m.get(y, 39 - x));
        let a = harris_corners(&m, &HarrisConfig::default()).unwrap();
        let b = harris_corners(&rot, &HarrisConfig::default()).unwrap();
        assert_eq!(a.len(), b.len());
        for p in &a.points {
            let q = Point::new(39.0 - p.y, p.x);
            assert!(b.points.iter().any(|r| r.distance(q) <= 2.0));
        }
    }

    #[test]
    fn harris_parameter_checks() {
        let m = l_shape(20, 20, 5, 5);
        let bad_k = HarrisConfig { k: 0.5, ..Default::default() };
        assert!(harris_corners(&m, &bad_k).is_err());
        let bad_w = HarrisConfig { window: 4, ..Default::default() };
        assert!(harris_corners(&m, &bad_w).is_err());
    }
}
