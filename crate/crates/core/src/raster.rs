//! Raster primitives: grayscale images, binary masks and edge maps, PNG I/O
//! and the small set of morphological operations the pipeline needs.
//!
//! Pixel `(x, y)` is addressed row-major and its center sits at the integer
//! coordinate `(x, y)` when converted to a [`Point`](crate::geom::Point).

use std::path::Path;

use image::{DynamicImage, ImageError};

use crate::error::{Error, Result};

/// 8-bit luminance image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::BufferSize {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    pub fn transpose(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(y, x)).expect("non-zero dimensions")
    }

    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }

    /// Bilinear resampling with pixel-center alignment.
    pub fn resize_bilinear(&self, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if (width, height) == self.dimensions() {
            return Ok(self.clone());
        }
        let sx = self.width as f64 / width as f64;
        let sy = self.height as f64 / height as f64;
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        Self::from_fn(width, height, |x, y| {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
            let (x0, y0) = (fx.floor() as u32, fy.floor() as u32);
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
            let top = self.get(x0, y0) as f64 * (1.0 - tx) + self.get(x1, y0) as f64 * tx;
            let bottom = self.get(x0, y1) as f64 * (1.0 - tx) + self.get(x1, y1) as f64 * tx;
            (top * (1.0 - ty) + bottom * ty).round().clamp(0.0, 255.0) as u8
        })
    }

    pub fn to_image(&self) -> image::GrayImage {
        image::GrayImage::from_raw(self.width, self.height, self.data.clone())
            .expect("buffer length checked at construction")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_image()
            .save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| image_error(path, e))
    }
}

/// Row-major binary raster. Used both for per-plane masks and for edge maps.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitmap {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

/// Binary per-plane segmentation mask.
pub type RasterMask = Bitmap;

/// Binary edge raster (`true` = edge pixel).
pub type EdgeMap = Bitmap;

impl Bitmap {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ZeroDimension { width, height });
        }
        if bits.len() != width as usize * height as usize {
            return Err(Error::BufferSize {
                width,
                height,
                len: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// All-false raster. Panics on a zero dimension.
    pub fn empty(width: u32, height: u32) -> Self {
        assert!(width > 0 && height > 0, "zero-sized bitmap");
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let mut b = Self::empty(width, height);
        b.bits.fill(true);
        b
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut b = Self::empty(width, height);
        for y in 0..height {
            for x in 0..width {
                b.bits[y as usize * width as usize + x as usize] = f(x, y);
            }
        }
        b
    }

    /// Binarizes a grayscale raster: values `>= threshold` become `true`.
    pub fn from_gray(img: &GrayImage, threshold: u8) -> Self {
        Self {
            width: img.width,
            height: img.height,
            bits: img.data.iter().map(|&v| v >= threshold).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Bounds-checked lookup on signed coordinates; outside reads as `false`.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && x < self.width as i64
            && y < self.height as i64
            && self.get(x as u32, y as u32)
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        let w = self.width as usize;
        self.bits[y as usize * w + x as usize] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Coordinates of all set pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let w = self.width as usize;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| ((i % w) as u32, (i / w) as u32))
    }

    pub fn check_same_size(&self, other: &Bitmap) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                found: other.dimensions(),
            });
        }
        Ok(())
    }

    pub fn and(&self, other: &Bitmap) -> Result<Bitmap> {
        self.check_same_size(other)?;
        Ok(self.zip_with(other, |a, b| a && b))
    }

    pub fn or(&self, other: &Bitmap) -> Result<Bitmap> {
        self.check_same_size(other)?;
        Ok(self.zip_with(other, |a, b| a || b))
    }

    /// Pixels set in `self` but not in `other`.
    pub fn minus(&self, other: &Bitmap) -> Result<Bitmap> {
        self.check_same_size(other)?;
        Ok(self.zip_with(other, |a, b| a && !b))
    }

    pub fn not(&self) -> Bitmap {
        Bitmap {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip_with(&self, other: &Bitmap, f: impl Fn(bool, bool) -> bool) -> Bitmap {
        Bitmap {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Mean of set pixel coordinates, `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
        for (x, y) in self.pixels() {
            sx += x as f64;
            sy += y as f64;
            n += 1;
        }
        (n > 0).then(|| (sx / n as f64, sy / n as f64))
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }

    /// Writes an 8-bit PNG with 0 = false and 255 = true.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_gray().save(path)
    }

    /// Reads a PNG mask; any luma value `>= 128` is `true`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::from_gray(&load_gray(path)?, 128))
    }
}

fn image_error(path: &Path, err: ImageError) -> Error {
    match err {
        ImageError::IoError(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Error::MissingFile(path.to_path_buf())
        }
        ImageError::IoError(e) => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
        other => Error::MalformedImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Loads a PNG as luminance. Color inputs use `round(0.299 R + 0.587 G + 0.114 B)`.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let dynamic = image::ImageReader::open(path)
        .map_err(|e| image_error(path, ImageError::IoError(e)))?
        .with_guessed_format()
        .map_err(|e| image_error(path, ImageError::IoError(e)))?
        .decode()
        .map_err(|e| Error::MalformedImage {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let (width, height) = (dynamic.width(), dynamic.height());
    if width == 0 || height == 0 {
        return Err(Error::ZeroDimension { width, height });
    }
    let data = match dynamic {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        d @ (DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)) => d.to_luma8().into_raw(),
        d => d
            .to_rgb8()
            .pixels()
            .map(|p| luma(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    GrayImage::new(width, height, data)
}

#[inline]
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Mask pixels with at least one unset 4-neighbor; the image border counts as outside.
pub fn mask_contour(mask: &RasterMask) -> Result<EdgeMap> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let (w, h) = (mask.width as i64, mask.height as i64);
    Ok(Bitmap::from_fn(mask.width, mask.height, |x, y| {
        let (x, y) = (x as i64, y as i64);
        mask.get(x as u32, y as u32)
            && [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .iter()
                .any(|&(nx, ny)| nx < 0 || ny < 0 || nx >= w || ny >= h || !mask.get_signed(nx, ny))
    }))
}

/// Dilation with a `(2r+1)x(2r+1)` square structuring element (Chebyshev ball).
pub fn dilate(map: &Bitmap, radius: u32) -> Bitmap {
    if radius == 0 {
        return map.clone();
    }
    let (w, h) = (map.width as usize, map.height as usize);
    let r = radius as usize;
    let horizontal = sliding_any(&map.bits, w, h, r, true);
    let bits = sliding_any(&horizontal, w, h, r, false);
    Bitmap {
        width: map.width,
        height: map.height,
        bits,
    }
}

/// Erosion with the same square element; pixels outside the image count as set,
/// so a full mask stays full.
pub fn erode(map: &Bitmap, radius: u32) -> Bitmap {
    dilate(&map.not(), radius).not()
}

// 1-D running "any" over a window of +-r along rows or columns.
fn sliding_any(bits: &[bool], w: usize, h: usize, r: usize, along_rows: bool) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    let (lines, len) = if along_rows { (h, w) } else { (w, h) };
    let idx = |line: usize, i: usize| {
        if along_rows {
            line * w + i
        } else {
            i * w + line
        }
    };
    let mut prefix = vec![0usize; len + 1];
    for line in 0..lines {
        for i in 0..len {
            prefix[i + 1] = prefix[i] + bits[idx(line, i)] as usize;
        }
        for i in 0..len {
            let lo = i.saturating_sub(r);
            let hi = (i + r + 1).min(len);
            out[idx(line, i)] = prefix[hi] > prefix[lo];
        }
    }
    out
}

/// Intersection over union; two empty masks compare as identical (1.0).
pub fn mask_iou(a: &RasterMask, b: &RasterMask) -> Result<f64> {
    a.check_same_size(b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}
