//! Pure 2D matching with a radial basis function.

use crate::clipgen::NUM_VERTICES;
use crate::error::{Error, Result};
use crate::scene::{Vec2, View2};

use super::{argmin_class, ViewLibrary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match2dConfig {
    /// RBF width in normalized coordinate units.
    pub sigma: f64,
    /// Also match the horizontally mirrored test view.
    pub flip: bool,
    /// Align in-plane rotation as well. Off by default: it would make the
    /// matcher invariant to z-axis rotation.
    pub rotation: bool,
}

impl Default for Match2dConfig {
    fn default() -> Self {
        Match2dConfig {
            sigma: 0.1,
            flip: true,
            rotation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match2dResult {
    /// `(class_id, score)` in class order; score in [0, 1].
    pub scores: Vec<(u64, f64)>,
    /// `(class_id, distance)` of the closest view per class.
    pub distances: Vec<(u64, f64)>,
    pub best: u64,
}

/// Centered, unit-norm 16-dim coordinate vector.
type Normalized = [Vec2; NUM_VERTICES];

fn normalize(v: &View2) -> Normalized {
    let c = v.iter().sum::<Vec2>() / NUM_VERTICES as f64;
    let mut out = v.map(|p| p - c);
    let norm = out.iter().map(|p| p.norm_squared()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for p in &mut out {
            *p /= norm;
        }
    }
    out
}

/// Squared distance between two normalized views, optionally minimized over
/// in-plane rotation of `a`.
fn dist2(a: &Normalized, b: &Normalized, rotation: bool) -> f64 {
    let mut dot = 0.0;
    let mut cross = 0.0;
    for (p, q) in a.iter().zip(b) {
        dot += p.dot(q);
        cross += p.x * q.y - p.y * q.x;
    }
    let na: f64 = a.iter().map(|p| p.norm_squared()).sum();
    let nb: f64 = b.iter().map(|p| p.norm_squared()).sum();
    let align = if rotation { dot.hypot(cross) } else { dot };
    (na + nb - 2.0 * align).max(0.0)
}

/// Library with views pre-normalized for repeated queries.
#[derive(Debug, Clone)]
pub struct Matcher {
    config: Match2dConfig,
    classes: Vec<(u64, Vec<Normalized>)>,
}

impl Matcher {
    pub fn new(lib: &ViewLibrary, config: Match2dConfig) -> Result<Self> {
        if lib.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        if !(config.sigma > 0.0) {
            return Err(Error::InvalidConfig("sigma must be > 0".into()));
        }
        let classes = lib
            .iter()
            .map(|(k, views)| (k, views.iter().map(|v| normalize(&v.points)).collect()))
            .collect();
        Ok(Matcher { config, classes })
    }

    pub fn config(&self) -> &Match2dConfig {
        &self.config
    }

    /// Distance from the test view to the closest stored view of each class.
    pub fn distances(&self, test: &View2) -> Vec<(u64, f64)> {
        let t = normalize(test);
        let flipped = t.map(|p| Vec2::new(-p.x, p.y));
        self.classes
            .iter()
            .map(|(k, views)| {
                let best = views
                    .iter()
                    .map(|v| {
                        let d = dist2(&t, v, self.config.rotation);
                        if self.config.flip {
                            d.min(dist2(&flipped, v, self.config.rotation))
                        } else {
                            d
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                (*k, best.sqrt())
            })
            .collect()
    }

    pub fn classify(&self, test: &View2) -> u64 {
        argmin_class(self.distances(test).into_iter())
            .map(|(k, _)| k)
            .expect("library is non-empty")
    }

    pub fn score(&self, test: &View2) -> Match2dResult {
        let distances = self.distances(test);
        let s2 = 2.0 * self.config.sigma * self.config.sigma;
        let scores = distances
            .iter()
            .map(|&(k, d)| (k, (-d * d / s2).exp()))
            .collect();
        // ranking by distance equals ranking by score but survives underflow
        let best = argmin_class(distances.iter().copied()).unwrap().0;
        Match2dResult {
            scores,
            distances,
            best,
        }
    }
}

/// One-shot convenience wrapper around [`Matcher`].
pub fn match2d(test: &View2, lib: &ViewLibrary, config: Match2dConfig) -> Result<Match2dResult> {
    Ok(Matcher::new(lib, config)?.score(test))
}
