use image::{Rgb, RgbImage};
use planeseg::raster::mask_contour;
use planeseg::{Bitmap, GrayImage, Polygon, Result};

pub const RED: Rgb<u8> = Rgb([230, 40, 40]);
pub const GREEN: Rgb<u8> = Rgb([40, 220, 60]);
pub const BLUE: Rgb<u8> = Rgb([60, 120, 255]);
pub const PALETTE: [Rgb<u8>; 6] = [
    GREEN,
    RED,
    BLUE,
    Rgb([240, 200, 30]),
    Rgb([220, 60, 220]),
    Rgb([40, 220, 220]),
];

/// Dimmed grayscale copy of the image to draw on.
pub fn canvas(img: &GrayImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        let v = (img.get(x, y) as u16 * 3 / 4) as u8;
        Rgb([v, v, v])
    })
}

pub fn draw_contour(canvas: &mut RgbImage, mask: &Bitmap, color: Rgb<u8>) -> Result<()> {
    if mask.is_empty() {
        return Ok(());
    }
    for (x, y) in mask_contour(mask)?.pixels() {
        canvas.put_pixel(x, y, color);
    }
    Ok(())
}

pub fn draw_polygon(canvas: &mut RgbImage, poly: &Polygon, color: Rgb<u8>) {
    let (w, h) = canvas.dimensions();
    for e in poly.edges() {
        for (x, y) in planeseg::geom::line_pixels(e.a, e.b) {
            if x >= 0 && y >= 0 && (x as u32) < w && (y as u32) < h {
                canvas.put_pixel(x as u32, y as u32, color);
            }
        }
    }
}
