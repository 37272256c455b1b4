//! Classical recognition hypotheses evaluated on exact vertex correspondences.
//!
//! All three oracles consume ordered 8-point views (vertex `i` of every view is
//! the same 3D vertex), never pixels:
//!
//! * [`match2d`]: nearest stored view under a radial basis function, after
//!   normalizing away translation and scale (and optionally mirror/rotation),
//! * [`lincomb`]: residual of the test view against the linear span of the
//!   training views' coordinate vectors,
//! * [`sfm`] + [`align`]: rank-3 factorization of the training views into a 3D
//!   shape, then least-squares alignment of that shape to the test view.

pub mod align;
pub mod lincomb;
pub mod match2d;
pub mod sfm;
pub mod svd;

use std::collections::BTreeMap;

use crate::clipgen::Paperclip;
use crate::error::{Error, Result};
use crate::render::DatasetManifest;
use crate::scene::{view_of, Camera, PoseSpec, Vec2, View2, ViewSelection};

pub use align::{align_classify, AlignModel, AlignScore};
pub use lincomb::{lc_classify, lc_residual, LcClassifier, LcConfig, LcModel};
pub use match2d::{match2d, Match2dConfig, Match2dResult, Matcher};
pub use sfm::{sfm_reconstruct, Shape3D};

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryView {
    pub pose: PoseSpec,
    pub points: View2,
}

/// Training views per class, all sharing the vertex ordering.
#[derive(Debug, Clone, Default)]
pub struct ViewLibrary {
    classes: BTreeMap<u64, Vec<LibraryView>>,
}

impl ViewLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, class_id: u64, pose: PoseSpec, points: View2) {
        self.classes
            .entry(class_id)
            .or_default()
            .push(LibraryView { pose, points });
    }

    /// Renders the selected poses of every clip.
    pub fn from_clips(
        clips: &[Paperclip],
        selection: &ViewSelection,
        cam: &Camera,
    ) -> Result<Self> {
        let mut lib = Self::new();
        for clip in clips {
            for pose in selection.poses() {
                let v = view_of(clip, &pose, cam)?;
                lib.insert(clip.class_id, pose, v);
            }
        }
        Ok(lib)
    }

    /// Collects the selected poses from a manifest's point records.
    pub fn from_manifest(manifest: &DatasetManifest, selection: &ViewSelection) -> Result<Self> {
        let mut lib = Self::new();
        for rec in &manifest.records {
            if !selection.contains(&rec.pose) {
                continue;
            }
            let pts = rec.points.as_ref().ok_or_else(|| {
                Error::Parse(format!(
                    "record {} {} has no points",
                    rec.class_id, rec.pose
                ))
            })?;
            lib.insert(rec.class_id, rec.pose.clone(), view_from_slice(pts)?);
        }
        let classes: std::collections::BTreeSet<u64> =
            manifest.records.iter().map(|r| r.class_id).collect();
        for class_id in classes {
            let have = lib.views(class_id).len();
            if have < selection.angles.len() {
                let missing = selection
                    .poses()
                    .into_iter()
                    .find(|p| {
                        !lib.views(class_id)
                            .iter()
                            .any(|v| crate::scene::angle_dist(v.pose.angles[0], p.angles[0]) < 1e-9)
                    })
                    .map(|p| p.key())
                    .unwrap_or_default();
                return Err(Error::MissingPoses {
                    class_id,
                    pose: missing,
                });
            }
        }
        Ok(lib)
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn class_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.classes.keys().copied()
    }

    pub fn views(&self, class_id: u64) -> &[LibraryView] {
        self.classes
            .get(&class_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[LibraryView])> {
        self.classes.iter().map(|(k, v)| (*k, v.as_slice()))
    }
}

pub fn view_from_slice(points: &[[f64; 2]]) -> Result<View2> {
    if points.len() != crate::clipgen::NUM_VERTICES {
        return Err(Error::Parse(format!(
            "expected {} points, got {}",
            crate::clipgen::NUM_VERTICES,
            points.len()
        )));
    }
    Ok(std::array::from_fn(|i| {
        Vec2::new(points[i][0], points[i][1])
    }))
}

/// Index of the smallest finite score; ties go to the earliest entry.
pub(crate) fn argmin_class(scores: impl Iterator<Item = (u64, f64)>) -> Option<(u64, f64)> {
    let mut best: Option<(u64, f64)> = None;
    for (k, s) in scores {
        match best {
            Some((_, b)) if !(s < b) => {}
            _ if s.is_nan() => {}
            _ => best = Some((k, s)),
        }
    }
    best
}
