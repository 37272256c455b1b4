//! CSV formats: per-bin result rows and per-view prediction records.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::{Axes, Composition, PoseSpec};

use super::{Classifier, GeneralizationProfile, ViewSource};

/// One accuracy bin of one condition and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub condition: String,
    pub axis_pair: Axes,
    pub angle1: f64,
    pub angle2: Option<f64>,
    pub accuracy: f64,
    pub is_training_view: bool,
    pub seed: u64,
}

pub fn profile_rows(profile: &GeneralizationProfile, condition: &str, seed: u64) -> Vec<ResultRow> {
    (0..profile.len())
        .map(|bin| {
            let (angle1, angle2) = profile.angles(bin);
            ResultRow {
                condition: condition.to_string(),
                axis_pair: profile.axes,
                angle1,
                angle2,
                accuracy: profile.accuracy[bin],
                is_training_view: profile.training[bin],
                seed,
            }
        })
        .collect()
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let label = Path::new("<csv>");
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err(label))?;
    }
    w.flush().map_err(|e| Error::io(label, e))
}

pub fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    read_all(csv::Reader::from_reader(input), Path::new("<csv>"))
}

/// Deserializes every row, naming the offending column on type errors.
fn read_all<R: Read, T: for<'de> Deserialize<'de>>(
    mut reader: csv::Reader<R>,
    path: &Path,
) -> Result<Vec<T>> {
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    let mut out = Vec::new();
    for row in reader.deserialize() {
        match row {
            Ok(r) => out.push(r),
            Err(e) => {
                if let csv::ErrorKind::Deserialize { pos, err } = e.kind() {
                    if let Some(name) = err.field().and_then(|i| headers.get(i as usize)) {
                        let line = pos.as_ref().map_or(0, |p| p.line());
                        return Err(Error::Parse(format!(
                            "{}: line {line}, column {name}: {}",
                            path.display(),
                            err.kind()
                        )));
                    }
                }
                return Err(csv_err(path)(e));
            }
        }
    }
    Ok(out)
}

pub fn write_rows_file<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for r in rows {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_rows_file<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_all(csv::Reader::from_path(path).map_err(csv_err(path))?, path)
}

/// One classified evaluation view, as produced by an external trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub class_id: u64,
    pub axes: Axes,
    pub angle1: f64,
    pub angle2: Option<f64>,
    pub predicted_class: u64,
    pub correct: bool,
}

impl PredictionRecord {
    pub fn pose(&self) -> PoseSpec {
        PoseSpec {
            axes: self.axes,
            angles: std::iter::once(self.angle1).chain(self.angle2).collect(),
        }
    }
}

/// Predictions of a native classifier over a whole grid, in (pose, class) order.
pub fn predictions(
    classifier: &dyn Classifier,
    source: &dyn ViewSource,
    axes: Axes,
    stride: f64,
) -> Result<Vec<PredictionRecord>> {
    let classes = source.class_ids();
    let grid = GeneralizationProfile::zeros(axes, stride, classes.len())?;
    let per_pose = grid
        .poses()
        .par_iter()
        .map(|pose| {
            let views = classes
                .iter()
                .map(|&k| source.view(k, pose))
                .collect::<Result<Vec<_>>>()?;
            let predicted = classifier.classify_batch(&views);
            Ok(classes
                .iter()
                .zip(predicted)
                .map(|(&k, p)| PredictionRecord {
                    class_id: k,
                    axes,
                    angle1: pose.angles[0],
                    angle2: pose.angles.get(1).copied(),
                    predicted_class: p,
                    correct: p == k,
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_pose.into_iter().flatten().collect())
}

/// Builds the profile for `axes` from prediction records. Records on other
/// axes are ignored; the class set is every class id seen on `axes`.
pub fn profile_from_predictions(
    records: &[PredictionRecord],
    axes: Axes,
    stride: f64,
    training: &[PoseSpec],
    comp: Composition,
) -> Result<GeneralizationProfile> {
    let on_axes: Vec<&PredictionRecord> = records.iter().filter(|r| r.axes == axes).collect();
    let classes: BTreeSet<u64> = on_axes.iter().map(|r| r.class_id).collect();
    if classes.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let mut profile = GeneralizationProfile::zeros(axes, stride, classes.len())?;
    let mut seen: HashMap<(usize, u64), bool> = HashMap::with_capacity(on_axes.len());
    for r in &on_axes {
        if r.correct != (r.predicted_class == r.class_id) {
            return Err(Error::Parse(format!(
                "prediction for class {} at {}: correct={} disagrees with predicted_class={}",
                r.class_id,
                r.pose(),
                r.correct,
                r.predicted_class
            )));
        }
        let pose = r.pose();
        pose.check()?;
        let bin = profile.bin_of(&pose).ok_or_else(|| {
            Error::Parse(format!(
                "pose {pose} is not on the {stride} degree {axes} grid"
            ))
        })?;
        if seen.insert((bin, r.class_id), r.correct).is_some() {
            return Err(Error::Parse(format!(
                "duplicate prediction for class {} at {pose}",
                r.class_id
            )));
        }
    }
    let poses = profile.poses();
    for (bin, pose) in poses.iter().enumerate() {
        let mut hits = 0usize;
        for &k in &classes {
            match seen.get(&(bin, k)) {
                Some(true) => hits += 1,
                Some(false) => {}
                None => {
                    return Err(Error::MissingPoses {
                        class_id: k,
                        pose: pose.key(),
                    })
                }
            }
        }
        profile.accuracy[bin] = hits as f64 / classes.len() as f64;
    }
    profile.mark_training(training, comp);
    Ok(profile)
}
