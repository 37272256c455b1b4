use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clipgen::Paperclip;
use crate::error::{Error, Result};
use crate::oracles::view_from_slice;
use crate::render::DatasetManifest;
use crate::scene::{
    angle_dist, apply_pose_with, pose_grid, project, wrap_deg, Axes, Camera, Composition, PoseSpec,
    View2,
};

use super::Classifier;

/// Accuracy over a rotation grid: `side` bins for a single axis, `side x side`
/// bins (first angle major) for an axis pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationProfile {
    pub axes: Axes,
    /// Bin width in degrees.
    pub stride: f64,
    pub accuracy: Vec<f64>,
    /// Bins whose pose coincides with a training view.
    pub training: Vec<bool>,
    /// Number of classes evaluated per bin (chance is `1 / classes`).
    pub classes: usize,
}

/// Default bin widths: 1 degree for single axes, 10 for axis pairs.
pub fn default_stride(axes: Axes) -> f64 {
    if axes.is_dual() {
        10.0
    } else {
        1.0
    }
}

fn side_for(stride: f64) -> Result<usize> {
    let n = 360.0 / stride;
    if !(stride > 0.0) || (n - n.round()).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "stride {stride} does not divide 360"
        )));
    }
    Ok(n.round() as usize)
}

impl GeneralizationProfile {
    pub fn zeros(axes: Axes, stride: f64, classes: usize) -> Result<Self> {
        let side = side_for(stride)?;
        let len = if axes.is_dual() { side * side } else { side };
        Ok(GeneralizationProfile {
            axes,
            stride,
            accuracy: vec![0.0; len],
            training: vec![false; len],
            classes,
        })
    }

    pub fn side(&self) -> usize {
        (360.0 / self.stride).round() as usize
    }

    pub fn len(&self) -> usize {
        self.accuracy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accuracy.is_empty()
    }

    /// Poses in bin order.
    pub fn poses(&self) -> Vec<PoseSpec> {
        pose_grid(&[self.axes], self.stride, self.stride).expect("stride validated")
    }

    /// Bin of a pose on this grid, if it lies on a bin center.
    pub fn bin_of(&self, pose: &PoseSpec) -> Option<usize> {
        if pose.axes != self.axes {
            return None;
        }
        let side = self.side();
        let index = |a: f64| {
            let k = wrap_deg(a) / self.stride;
            let r = k.round();
            ((k - r).abs() < 1e-6).then_some(r as usize % side)
        };
        match pose.angles.as_slice() {
            [a] => index(*a),
            [a, b] => Some(index(*a)? * side + index(*b)?),
            _ => None,
        }
    }

    /// Angle(s) of a bin center.
    pub fn angles(&self, bin: usize) -> (f64, Option<f64>) {
        if self.axes.is_dual() {
            let side = self.side();
            (
                (bin / side) as f64 * self.stride,
                Some((bin % side) as f64 * self.stride),
            )
        } else {
            (bin as f64 * self.stride, None)
        }
    }

    pub fn mean(&self) -> f64 {
        self.accuracy.iter().sum::<f64>() / self.len() as f64
    }

    /// Circularly interpolated accuracy at `deg` (single-axis profiles).
    pub fn at(&self, deg: f64) -> f64 {
        assert!(!self.axes.is_dual(), "at() needs a single-axis profile");
        let side = self.side();
        let k = wrap_deg(deg) / self.stride;
        let i = k.floor() as usize % side;
        let t = k - k.floor();
        if t < 1e-9 {
            return self.accuracy[i];
        }
        self.accuracy[i] * (1.0 - t) + self.accuracy[(i + 1) % side] * t
    }

    /// Mean over bins whose angle lies on the arc from `lo` to `hi`
    /// (counter-clockwise, inclusive).
    pub fn arc_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        assert!(
            !self.axes.is_dual(),
            "arc_mean() needs a single-axis profile"
        );
        let span = wrap_deg(hi - lo);
        let vals: Vec<f64> = (0..self.len())
            .filter(|&i| wrap_deg(self.angles(i).0 - lo) <= span + 1e-9)
            .map(|i| self.accuracy[i])
            .collect();
        mean_of(&vals)
    }

    pub fn check(&self) -> Result<()> {
        let side = side_for(self.stride)?;
        let want = if self.axes.is_dual() {
            side * side
        } else {
            side
        };
        if self.accuracy.len() != want || self.training.len() != want {
            return Err(Error::InvalidConfig(format!(
                "profile {} has {} bins, grid needs {want}",
                self.axes,
                self.accuracy.len()
            )));
        }
        if let Some(a) = self.accuracy.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidConfig(format!("accuracy {a} outside [0, 1]")));
        }
        Ok(())
    }

    /// Marks bins whose rotation equals any training pose's rotation.
    pub fn mark_training(&mut self, training: &[PoseSpec], comp: Composition) {
        let rots: Vec<_> = training.iter().map(|p| p.rotation(comp)).collect();
        for (bin, pose) in self.poses().iter().enumerate() {
            let r = pose.rotation(comp);
            self.training[bin] = rots.iter().any(|t| (t - r).abs().max() < 1e-9);
        }
    }
}

fn mean_of(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Supplies the projected view of any class at any pose.
pub trait ViewSource: Sync {
    /// Class ids in ascending order.
    fn class_ids(&self) -> Vec<u64>;
    fn view(&self, class_id: u64, pose: &PoseSpec) -> Result<View2>;
    fn composition(&self) -> Composition {
        Composition::Extrinsic
    }
}

/// Renders views on demand from generated clips.
#[derive(Debug, Clone)]
pub struct ClipSource<'a> {
    pub clips: &'a [Paperclip],
    pub camera: Camera,
    pub composition: Composition,
}

impl<'a> ClipSource<'a> {
    pub fn new(clips: &'a [Paperclip], camera: Camera) -> Self {
        ClipSource {
            clips,
            camera,
            composition: Composition::Extrinsic,
        }
    }
}

impl ViewSource for ClipSource<'_> {
    fn class_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.clips.iter().map(|c| c.class_id).collect();
        ids.sort_unstable();
        ids
    }

    fn view(&self, class_id: u64, pose: &PoseSpec) -> Result<View2> {
        let clip = self
            .clips
            .iter()
            .find(|c| c.class_id == class_id)
            .ok_or_else(|| Error::MissingPoses {
                class_id,
                pose: pose.key(),
            })?;
        project(&apply_pose_with(clip, pose, self.composition), &self.camera)
    }

    fn composition(&self) -> Composition {
        self.composition
    }
}

/// Pose lookup key robust to float formatting: millidegrees after wrapping.
pub(crate) fn pose_key(pose: &PoseSpec) -> (Axes, i64, i64) {
    let q = |a: f64| ((wrap_deg(a) * 1000.0).round() as i64) % 360_000;
    (
        pose.axes,
        pose.angles.first().copied().map_or(0, q),
        pose.angles.get(1).copied().map_or(-1, q),
    )
}

/// Point views read from a dataset manifest.
#[derive(Debug, Clone)]
pub struct ManifestSource {
    views: HashMap<(u64, (Axes, i64, i64)), View2>,
    classes: Vec<u64>,
    composition: Composition,
}

impl ManifestSource {
    pub fn new(manifest: &DatasetManifest) -> Result<Self> {
        let mut views = HashMap::with_capacity(manifest.records.len());
        let mut classes = Vec::new();
        for rec in &manifest.records {
            let pts = rec.points.as_ref().ok_or_else(|| {
                Error::Parse(format!(
                    "record {} {} has no points",
                    rec.class_id, rec.pose
                ))
            })?;
            views.insert((rec.class_id, pose_key(&rec.pose)), view_from_slice(pts)?);
            classes.push(rec.class_id);
        }
        classes.sort_unstable();
        classes.dedup();
        Ok(ManifestSource {
            views,
            classes,
            composition: manifest.grid.composition,
        })
    }

    /// Keeps only the first `n` classes.
    pub fn truncate_classes(&mut self, n: usize) {
        self.classes.truncate(n);
    }
}

impl ViewSource for ManifestSource {
    fn class_ids(&self) -> Vec<u64> {
        self.classes.clone()
    }

    fn view(&self, class_id: u64, pose: &PoseSpec) -> Result<View2> {
        self.views
            .get(&(class_id, pose_key(pose)))
            .copied()
            .ok_or_else(|| Error::MissingPoses {
                class_id,
                pose: pose.key(),
            })
    }

    fn composition(&self) -> Composition {
        self.composition
    }
}

/// Accuracy per bin: the fraction of classes whose view at that pose is
/// classified as its own class.
pub fn evaluate(
    classifier: &dyn Classifier,
    source: &dyn ViewSource,
    axes: Axes,
    stride: f64,
    training: &[PoseSpec],
) -> Result<GeneralizationProfile> {
    let classes = source.class_ids();
    if classes.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let mut profile = GeneralizationProfile::zeros(axes, stride, classes.len())?;
    let accuracy = profile
        .poses()
        .par_iter()
        .map(|pose| {
            let views = classes
                .iter()
                .map(|&k| source.view(k, pose))
                .collect::<Result<Vec<_>>>()?;
            let predicted = classifier.classify_batch(&views);
            let hits = predicted
                .iter()
                .zip(&classes)
                .filter(|(p, k)| p == k)
                .count();
            Ok(hits as f64 / classes.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    profile.accuracy = accuracy;
    profile.mark_training(training, source.composition());
    Ok(profile)
}

/// Expected profile of a pure view matcher: the single-view profile (measured
/// with its training view at 0) shifted to every training angle, pointwise max.
pub fn view_based_baseline(
    single: &GeneralizationProfile,
    training_angles: &[f64],
) -> GeneralizationProfile {
    assert!(
        !single.axes.is_dual(),
        "baseline needs a single-axis profile"
    );
    let mut out = single.clone();
    for bin in 0..out.len() {
        let theta = out.angles(bin).0;
        out.accuracy[bin] = training_angles
            .iter()
            .map(|v| single.at(theta - v))
            .fold(0.0, f64::max);
        out.training[bin] = training_angles.iter().any(|&v| angle_dist(v, theta) < 1e-9);
    }
    out
}

/// Whether `theta` lies in the circular convex hull of `angles`: the whole
/// circle unless the angles fit in a half-circle, otherwise the shortest arc
/// covering them (the complement of the largest gap).
pub fn in_circular_hull(theta: f64, angles: &[f64]) -> bool {
    let mut a: Vec<f64> = angles.iter().map(|&x| wrap_deg(x)).collect();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    a.dedup_by(|x, y| angle_dist(*x, *y) < 1e-9);
    match a.len() {
        0 => false,
        1 => angle_dist(theta, a[0]) < 1e-9,
        n => {
            let (mut gap, mut at) = (0.0, 0);
            for i in 0..n {
                let g = wrap_deg(a[(i + 1) % n] - a[i]);
                let g = if g == 0.0 { 360.0 } else { g };
                if g > gap + 1e-9 {
                    gap = g;
                    at = i;
                }
            }
            if gap < 180.0 {
                return true;
            }
            // hull runs counter-clockwise from the end of the gap to its start
            let start = a[(at + 1) % n];
            let span = 360.0 - gap;
            wrap_deg(theta - start) <= span + 1e-9
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetrics {
    pub axes: Axes,
    pub mean: f64,
    /// Mean over bins inside the circular hull of the training angles.
    pub intermediate: Option<f64>,
    /// Mean over bins outside it.
    pub extrapolation: Option<f64>,
    /// Mean of `profile - baseline`.
    pub gap_to_baseline: Option<f64>,
}

/// Summary of one profile. `training_angles` are angles along this profile's
/// axis; pass an empty slice for axes that carry no training views.
pub fn metrics(
    profile: &GeneralizationProfile,
    training_angles: &[f64],
    baseline: Option<&GeneralizationProfile>,
) -> ProfileMetrics {
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    if !profile.axes.is_dual() && !training_angles.is_empty() {
        for bin in 0..profile.len() {
            let theta = profile.angles(bin).0;
            if in_circular_hull(theta, training_angles) {
                inside.push(profile.accuracy[bin]);
            } else {
                outside.push(profile.accuracy[bin]);
            }
        }
    }
    let gap = baseline.map(|b| {
        assert_eq!(b.len(), profile.len(), "baseline grid differs");
        profile
            .accuracy
            .iter()
            .zip(&b.accuracy)
            .map(|(p, q)| p - q)
            .sum::<f64>()
            / profile.len() as f64
    });
    ProfileMetrics {
        axes: profile.axes,
        mean: profile.mean(),
        intermediate: mean_of(&inside),
        extrapolation: mean_of(&outside),
        gap_to_baseline: gap,
    }
}
