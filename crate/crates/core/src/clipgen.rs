//! Procedural paperclip objects.
//!
//! A paperclip is an open polyline of [`NUM_VERTICES`] points. Each vertex is
//! placed at a random direction and distance from the previous one; chains
//! with sharp folds or wires passing too close to each other are rejected and
//! resampled from scratch. Accepted chains are centered on the origin and
//! scaled so that the farthest vertex lies on the unit sphere.

use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Vec3 = Vector3<f64>;

pub const NUM_VERTICES: usize = 8;
pub const NUM_SEGMENTS: usize = NUM_VERTICES - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Paperclip {
    pub class_id: u64,
    pub vertices: [Vec3; NUM_VERTICES],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Segment length interval, object units before normalization.
    pub step_range: [f64; 2],
    pub min_segment_angle_deg: f64,
    /// Minimum distance between non-adjacent segments after normalization.
    pub min_clearance: f64,
    pub max_attempts: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            step_range: [0.3, 1.0],
            min_segment_angle_deg: 30.0,
            min_clearance: 0.05,
            max_attempts: 10_000,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        let [lo, hi] = self.step_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step_range must satisfy 0 < low <= high, got [{lo}, {hi}]"
            )));
        }
        if !(self.min_segment_angle_deg > 0.0 && self.min_segment_angle_deg < 180.0) {
            return Err(Error::InvalidConfig(format!(
                "min_segment_angle_deg must be in (0, 180), got {}",
                self.min_segment_angle_deg
            )));
        }
        if !(self.min_clearance >= 0.0) {
            return Err(Error::InvalidConfig("min_clearance must be >= 0".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Interior angle at `vertex` (between its two segments) is below threshold.
    SharpEdge { vertex: usize, angle_deg: f64 },
    /// Non-adjacent segments `a` and `b` (segment i joins vertex i and i+1)
    /// pass closer than the clearance threshold.
    Clearance { a: usize, b: usize, distance: f64 },
}

/// Generates the paperclip for `class_id`. The result depends only on
/// `(config.seed, class_id)` and the thresholds in `config`.
pub fn generate_paperclip(config: &GenConfig, class_id: u64) -> Result<Paperclip> {
    config.check()?;
    let mut rng = rng::stream_rng(rng::split(config.seed, rng::tag::CLIP), class_id);
    let [lo, hi] = config.step_range;
    for _ in 0..config.max_attempts {
        let mut raw = [Vec3::zeros(); NUM_VERTICES];
        for i in 1..NUM_VERTICES {
            let dir: [f64; 3] = UnitSphere.sample(&mut rng);
            let len = if lo < hi {
                rng.random_range(lo..hi)
            } else {
                lo
            };
            raw[i] = raw[i - 1] + Vec3::from(dir) * len;
        }
        let Ok(mut clip) = normalize(&raw) else {
            continue;
        };
        if validate(&clip, config).is_empty() {
            clip.class_id = class_id;
            return Ok(clip);
        }
    }
    Err(Error::GenerationExhausted {
        class_id,
        attempts: config.max_attempts,
    })
}

/// Checks the sharp-edge and clearance constraints by exhaustive enumeration.
pub fn validate(clip: &Paperclip, config: &GenConfig) -> Vec<Violation> {
    let v = &clip.vertices;
    let mut out = Vec::new();
    for i in 1..NUM_VERTICES - 1 {
        let angle = interior_angle_deg(v[i - 1], v[i], v[i + 1]);
        if angle < config.min_segment_angle_deg {
            out.push(Violation::SharpEdge {
                vertex: i,
                angle_deg: angle,
            });
        }
    }
    for a in 0..NUM_SEGMENTS {
        for b in a + 2..NUM_SEGMENTS {
            let d = segment_distance(v[a], v[a + 1], v[b], v[b + 1]);
            if d < config.min_clearance {
                out.push(Violation::Clearance { a, b, distance: d });
            }
        }
    }
    out
}

/// Centers the points on their centroid and scales the farthest one to unit
/// norm. The returned clip has `class_id` 0.
pub fn normalize(vertices: &[Vec3; NUM_VERTICES]) -> Result<Paperclip> {
    let centroid = vertices.iter().sum::<Vec3>() / NUM_VERTICES as f64;
    let mut out = [Vec3::zeros(); NUM_VERTICES];
    for (o, v) in out.iter_mut().zip(vertices) {
        *o = v - centroid;
    }
    let max_norm = out.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let extent = vertices
        .iter()
        .map(|p| (p - vertices[0]).norm())
        .fold(0.0, f64::max);
    if !(max_norm > 0.0) || extent <= f64::EPSILON * vertices[0].norm().max(1.0) {
        return Err(Error::DegenerateObject);
    }
    for o in out.iter_mut() {
        *o /= max_norm;
    }
    Ok(Paperclip {
        class_id: 0,
        vertices: out,
    })
}

/// Angle at `b` between segments `b -> a` and `b -> c`, in degrees.
/// A straight continuation is 180, a full fold-back is 0.
pub fn interior_angle_deg(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let u = a - b;
    let w = c - b;
    let denom = u.norm() * w.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (u.dot(&w) / denom).clamp(-1.0, 1.0).acos().to_degrees()
}

/// Minimum distance between segments `p0-p1` and `q0-q1`.
pub fn segment_distance(p0: Vec3, p1: Vec3, q0: Vec3, q1: Vec3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    const EPS: f64 = 1e-18;

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// On-disk geometry record: one JSON file per class.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClipFile {
    pub class_id: u64,
    pub vertices: Vec<[f64; 3]>,
}

impl From<&Paperclip> for ClipFile {
    fn from(p: &Paperclip) -> Self {
        ClipFile {
            class_id: p.class_id,
            vertices: p.vertices.iter().map(|v| [v.x, v.y, v.z]).collect(),
        }
    }
}

impl TryFrom<ClipFile> for Paperclip {
    type Error = Error;

    fn try_from(f: ClipFile) -> Result<Self> {
        if f.vertices.len() != NUM_VERTICES {
            return Err(Error::Parse(format!(
                "class {}: expected {NUM_VERTICES} vertices, got {}",
                f.class_id,
                f.vertices.len()
            )));
        }
        let mut vertices = [Vec3::zeros(); NUM_VERTICES];
        for (dst, src) in vertices.iter_mut().zip(&f.vertices) {
            *dst = Vec3::from(*src);
        }
        Ok(Paperclip {
            class_id: f.class_id,
            vertices,
        })
    }
}

/// Run record written next to the per-class geometry files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenRun {
    pub config: GenConfig,
    pub classes: u64,
    pub files: Vec<String>,
}

pub const GEN_RUN_FILE: &str = "run.json";

/// Generates classes `0..classes` and writes `class_NNNNNN.json` per class plus
/// [`GEN_RUN_FILE`].
pub fn write_geometry(config: &GenConfig, classes: u64, dir: &Path) -> Result<GenRun> {
    config.check()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(classes as usize);
    for k in 0..classes {
        let clip = generate_paperclip(config, k)?;
        let name = format!("class_{k:06}.json");
        write_json(&dir.join(&name), &ClipFile::from(&clip))?;
        files.push(name);
    }
    let run = GenRun {
        config: *config,
        classes,
        files,
    };
    write_json(&dir.join(GEN_RUN_FILE), &run)?;
    Ok(run)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
