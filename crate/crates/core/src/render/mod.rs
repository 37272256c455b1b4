//! Rasterization, mesh shading, backgrounds and dataset emission.

mod dataset;
mod mesh;
mod raster;

use std::path::Path;

use image::{imageops::FilterType, DynamicImage, GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{
    emit_dataset, load_geometry, read_manifest, ArrayStorage, DatasetManifest, DatasetSpec,
    GridDesc, ManifestRecord, Representation, SceneObject, Split, MANIFEST_FILE,
};
pub use mesh::{ingest_mesh, parse_obj, render_mesh_flat, Mesh, DEFAULT_LIGHT};
pub use raster::{
    coord_array, render_coord_image, render_wireframe, DEFAULT_BINS, DISC_RADIUS, LINE_WIDTH,
};

/// 8-bit row-major image with 1 (gray) or 3 (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub channels: u8,
    pub pixels: Vec<u8>,
}

impl RasterImage {
    pub fn black(width: u32, height: u32, channels: u8) -> Self {
        assert!(channels == 1 || channels == 3);
        RasterImage {
            width,
            height,
            channels,
            pixels: vec![0; (width * height) as usize * channels as usize],
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let o = self.offset(x, y);
        &self.pixels[o..o + self.channels as usize]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        let c = self.channels as usize;
        &mut self.pixels[o..o + c]
    }

    pub fn dims(&self) -> (u32, u32, u8) {
        (self.width, self.height, self.channels)
    }

    pub fn to_rgb(&self) -> RasterImage {
        if self.channels == 3 {
            return self.clone();
        }
        RasterImage {
            width: self.width,
            height: self.height,
            channels: 3,
            pixels: self.pixels.iter().flat_map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let res = if self.channels == 1 {
            GrayImage::from_raw(self.width, self.height, self.pixels.clone())
                .expect("buffer size matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        } else {
            RgbImage::from_raw(self.width, self.height, self.pixels.clone())
                .expect("buffer size matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        };
        res.map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_dynamic(img))
    }

    fn from_dynamic(img: DynamicImage) -> Self {
        match img {
            DynamicImage::ImageLuma8(g) => RasterImage {
                width: g.width(),
                height: g.height(),
                channels: 1,
                pixels: g.into_raw(),
            },
            other => {
                let rgb = other.into_rgb8();
                RasterImage {
                    width: rgb.width(),
                    height: rgb.height(),
                    channels: 3,
                    pixels: rgb.into_raw(),
                }
            }
        }
    }

    /// Resamples to `width` x `height` (used to fit backgrounds to the frame).
    pub fn resized(&self, width: u32, height: u32) -> RasterImage {
        if (self.width, self.height) == (width, height) {
            return self.clone();
        }
        let dynimg = if self.channels == 1 {
            DynamicImage::ImageLuma8(
                GrayImage::from_raw(self.width, self.height, self.pixels.clone()).unwrap(),
            )
        } else {
            DynamicImage::ImageRgb8(
                RgbImage::from_raw(self.width, self.height, self.pixels.clone()).unwrap(),
            )
        };
        Self::from_dynamic(dynimg.resize_exact(width, height, FilterType::Triangle))
    }
}

/// Two concatenated histograms of length `bins`: x positions then y positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordArray {
    pub values: Vec<f64>,
}

impl CoordArray {
    pub fn bins(&self) -> usize {
        self.values.len() / 2
    }

    pub fn x_half(&self) -> &[f64] {
        &self.values[..self.bins()]
    }

    pub fn y_half(&self) -> &[f64] {
        &self.values[self.bins()..]
    }
}

/// Replaces black foreground pixels with the background. A gray foreground
/// over an RGB background is promoted to RGB.
pub fn composite_background(fg: &RasterImage, bg: &RasterImage) -> Result<RasterImage> {
    if (fg.width, fg.height) != (bg.width, bg.height) {
        return Err(Error::SizeMismatch {
            left: fg.dims(),
            right: bg.dims(),
        });
    }
    let channels = fg.channels.max(bg.channels);
    let fg = if channels == 3 {
        fg.to_rgb()
    } else {
        fg.clone()
    };
    let bg = if channels == 3 {
        bg.to_rgb()
    } else {
        bg.clone()
    };
    let c = channels as usize;
    let mut out = fg.clone();
    for (o, b) in out.pixels.chunks_mut(c).zip(bg.pixels.chunks(c)) {
        if o.iter().all(|&v| v == 0) {
            o.copy_from_slice(b);
        }
    }
    Ok(out)
}
