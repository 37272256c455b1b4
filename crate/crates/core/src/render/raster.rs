//! Point-view rasterizers and the coordinate-array encoding.

use crate::scene::{Camera, Vec2};

use super::{CoordArray, RasterImage};

pub const LINE_WIDTH: f64 = 2.0;
pub const DISC_RADIUS: f64 = 2.0;
pub const DEFAULT_BINS: usize = 64;

/// Draws consecutive vertices as anti-aliased white lines on black.
///
/// Coverage of a pixel is the box-filtered distance from its center to the
/// segment: full inside half the line width, fading to zero one pixel out.
pub fn render_wireframe(points: &[Vec2], cam: &Camera) -> RasterImage {
    let n = cam.image_size;
    let mut img = RasterImage::black(n, n, 1);
    for seg in points.windows(2) {
        draw_segment(&mut img, seg[0], seg[1], LINE_WIDTH / 2.0);
    }
    img
}

fn draw_segment(img: &mut RasterImage, a: Vec2, b: Vec2, half_width: f64) {
    if !(a.iter().chain(b.iter()).all(|v| v.is_finite())) {
        return;
    }
    let reach = half_width + 0.5;
    let Some((x0, x1, y0, y1)) = pixel_box(
        img,
        a.x.min(b.x) - reach,
        a.x.max(b.x) + reach,
        a.y.min(b.y) - reach,
        a.y.max(b.y) + reach,
    ) else {
        return;
    };
    let d = b - a;
    let len2 = d.norm_squared();
    for py in y0..y1 {
        for px in x0..x1 {
            let p = Vec2::new(px as f64 + 0.5, py as f64 + 0.5);
            let t = if len2 > 0.0 {
                ((p - a).dot(&d) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let dist = (p - (a + d * t)).norm();
            let cov = (reach - dist).clamp(0.0, 1.0);
            if cov > 0.0 {
                let v = (cov * 255.0).round() as u8;
                let px_ref = img.pixel_mut(px, py);
                px_ref[0] = px_ref[0].max(v);
            }
        }
    }
}

/// Clamps a floating bounding box to the image, returning half-open pixel ranges.
fn pixel_box(
    img: &RasterImage,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
) -> Option<(u32, u32, u32, u32)> {
    let w = img.width as f64;
    let h = img.height as f64;
    if xmax < 0.0 || ymax < 0.0 || xmin >= w || ymin >= h {
        return None;
    }
    let x0 = xmin.max(0.0).floor() as u32;
    let y0 = ymin.max(0.0).floor() as u32;
    let x1 = (xmax.min(w - 1.0).floor() as u32 + 1).min(img.width);
    let y1 = (ymax.min(h - 1.0).floor() as u32 + 1).min(img.height);
    Some((x0, x1, y0, y1))
}

/// Draws only the vertices, as filled discs. Each disc lights the
/// `floor(pi r^2)` pixels whose centers are nearest the vertex, so a disc never
/// covers more pixels than its area.
pub fn render_coord_image(points: &[Vec2], cam: &Camera) -> RasterImage {
    let n = cam.image_size;
    let mut img = RasterImage::black(n, n, 1);
    let count = (std::f64::consts::PI * DISC_RADIUS * DISC_RADIUS).floor() as usize;
    let reach = DISC_RADIUS.ceil() as i64 + 1;
    let mut cells: Vec<(f64, i64, i64)> = Vec::new();
    for p in points {
        if !(p.x.is_finite() && p.y.is_finite()) {
            continue;
        }
        let (cx, cy) = (p.x.floor() as i64, p.y.floor() as i64);
        cells.clear();
        for py in cy - reach..=cy + reach {
            for px in cx - reach..=cx + reach {
                let dx = px as f64 + 0.5 - p.x;
                let dy = py as f64 + 0.5 - p.y;
                cells.push((dx * dx + dy * dy, py, px));
            }
        }
        cells.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, py, px) in cells.iter().take(count) {
            if (0..n as i64).contains(&px) && (0..n as i64).contains(&py) {
                img.pixel_mut(px as u32, py as u32)[0] = 255;
            }
        }
    }
    img
}

/// Bin index of a normalized coordinate, or `None` outside [0, 1].
fn bin_of(normalized: f64, bins: usize) -> Option<usize> {
    if !(0.0..=1.0).contains(&normalized) {
        return None;
    }
    Some(((normalized * bins as f64).floor() as usize).min(bins - 1))
}

/// Two concatenated histograms (x then y) of the projected vertices, each
/// vertex adding `1 / points.len()` to one bin per half. Vertices outside the
/// frame contribute nothing.
pub fn coord_array(points: &[Vec2], cam: &Camera, bins: usize) -> CoordArray {
    assert!(bins >= 2, "coordinate array needs at least 2 bins");
    let size = cam.image_size as f64;
    let w = 1.0 / points.len() as f64;
    let mut values = vec![0.0; 2 * bins];
    for p in points {
        if let (Some(bx), Some(by)) = (bin_of(p.x / size, bins), bin_of(p.y / size, bins)) {
            values[bx] += w;
            values[bins + by] += w;
        }
    }
    CoordArray { values }
}
