//! Triangle meshes: minimal OBJ ingest and z-buffered flat shading.

use nalgebra::{Quaternion, UnitQuaternion};
use rand_distr::{Distribution, StandardNormal};

use crate::clipgen::Vec3;
use crate::error::{Error, Result};
use crate::rng;
use crate::scene::{Camera, Composition, PoseSpec, Projection};

use super::RasterImage;

/// Direction *toward* the light, world frame.
pub const DEFAULT_LIGHT: [f64; 3] = [0.3, 0.5, 1.0];

const ALBEDO: f64 = 0.8;
const AMBIENT: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl Mesh {
    /// Drops triangles with (near) zero area.
    pub fn cleanup(&mut self) {
        let v = &self.vertices;
        self.triangles.retain(|t| {
            let [a, b, c] = t.map(|i| v[i as usize]);
            let cross = (b - a).cross(&(c - a)).norm();
            let scale = (b - a).norm_squared().max((c - a).norm_squared());
            cross > 1e-12 * scale.max(f64::MIN_POSITIVE)
        });
    }

    /// Centers on the vertex centroid and scales the farthest vertex to unit norm.
    pub fn normalize(&mut self) {
        if self.vertices.is_empty() {
            return;
        }
        let c = self.vertices.iter().sum::<Vec3>() / self.vertices.len() as f64;
        let m = self
            .vertices
            .iter()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max);
        let s = if m > 0.0 { 1.0 / m } else { 1.0 };
        for v in &mut self.vertices {
            *v = (*v - c) * s;
        }
    }
}

/// Parses `v` and `f` lines of a Wavefront OBJ file; polygons are fan
/// triangulated and everything else is ignored.
pub fn parse_obj(text: &str) -> Result<Mesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Parse(format!("obj line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(Error::Parse(format!(
                        "obj line {}: vertex needs 3 coordinates",
                        lineno + 1
                    )));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|e| Error::Parse(format!("obj line {}: {e}", lineno + 1)))?;
                        let n = vertices.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 || resolved >= n {
                            return Err(Error::Parse(format!(
                                "obj line {}: vertex index {i} out of range",
                                lineno + 1
                            )));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<Result<Vec<u32>>>()?;
                for k in 1..idx.len().saturating_sub(1) {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    let mut mesh = Mesh {
        vertices,
        triangles,
    };
    mesh.cleanup();
    Ok(mesh)
}

/// Loads a mesh for `class_id`: normalizes it and applies a random rotation
/// drawn from the class stream so that no object sits in a canonical pose.
pub fn ingest_mesh(text: &str, seed: u64, class_id: u64) -> Result<Mesh> {
    let mut mesh = parse_obj(text)?;
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyMesh);
    }
    mesh.normalize();
    let mut r = rng::stream_rng(rng::split(seed, rng::tag::MESH), class_id);
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(&mut r));
    let rot = UnitQuaternion::from_quaternion(Quaternion::new(q[0], q[1], q[2], q[3]));
    for v in &mut mesh.vertices {
        *v = rot * *v;
    }
    Ok(mesh)
}

/// Flat-shaded render with a z-buffer, one directional light and a uniform
/// gray albedo on black. Faces are lit two-sided.
pub fn render_mesh_flat(
    mesh: &Mesh,
    pose: &PoseSpec,
    cam: &Camera,
    light_dir: Vec3,
) -> Result<RasterImage> {
    if mesh.triangles.is_empty() || mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let rot = pose.rotation(Composition::Extrinsic);
    let world: Vec<Vec3> = mesh.vertices.iter().map(|v| rot * v).collect();
    let screen = crate::scene::project_points(&world, cam)?;
    // depth along the viewing direction, smaller is nearer
    let depth: Vec<f64> = world
        .iter()
        .map(|p| match cam.mode {
            Projection::Orthographic => -p.z,
            Projection::Perspective => cam.distance - p.z,
        })
        .collect();
    let light = light_dir.try_normalize(0.0).unwrap_or(Vec3::z());

    let n = cam.image_size;
    let mut img = RasterImage::black(n, n, 1);
    let mut zbuf = vec![f64::INFINITY; (n * n) as usize];
    for tri in &mesh.triangles {
        let [ia, ib, ic] = tri.map(|i| i as usize);
        let normal = (world[ib] - world[ia]).cross(&(world[ic] - world[ia]));
        let Some(mut normal) = normal.try_normalize(0.0) else {
            continue;
        };
        let toward_camera = match cam.mode {
            Projection::Orthographic => Vec3::z(),
            Projection::Perspective => Vec3::new(0.0, 0.0, cam.distance) - world[ia],
        };
        if normal.dot(&toward_camera) < 0.0 {
            normal = -normal;
        }
        let shade = ALBEDO * (AMBIENT + (1.0 - AMBIENT) * normal.dot(&light).max(0.0));
        let value = (shade * 255.0).round().clamp(1.0, 255.0) as u8;

        let (a, b, c) = (screen[ia], screen[ib], screen[ic]);
        let area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if area.abs() < 1e-12 {
            continue;
        }
        let xmin = a.x.min(b.x).min(c.x).floor().max(0.0);
        let xmax = a.x.max(b.x).max(c.x).ceil().min(n as f64);
        let ymin = a.y.min(b.y).min(c.y).floor().max(0.0);
        let ymax = a.y.max(b.y).max(c.y).ceil().min(n as f64);
        if xmin >= xmax || ymin >= ymax {
            continue;
        }
        for py in ymin as u32..ymax as u32 {
            for px in xmin as u32..xmax as u32 {
                let p = (px as f64 + 0.5, py as f64 + 0.5);
                let w0 = ((b.x - p.0) * (c.y - p.1) - (b.y - p.1) * (c.x - p.0)) / area;
                let w1 = ((c.x - p.0) * (a.y - p.1) - (c.y - p.1) * (a.x - p.0)) / area;
                let w2 = 1.0 - w0 - w1;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                let z = match cam.mode {
                    Projection::Orthographic => w0 * depth[ia] + w1 * depth[ib] + w2 * depth[ic],
                    Projection::Perspective => {
                        1.0 / (w0 / depth[ia] + w1 / depth[ib] + w2 / depth[ic])
                    }
                };
                let k = (py * n + px) as usize;
                if z < zbuf[k] {
                    zbuf[k] = z;
                    img.pixels[k] = value;
                }
            }
        }
    }
    Ok(img)
}
