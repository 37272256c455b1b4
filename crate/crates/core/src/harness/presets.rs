use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clipgen::{generate_paperclip, GenConfig, Paperclip};
use crate::error::{Error, Result};
use crate::mlp::{train, AugmentConfig, TrainConfig, TrainExample};
use crate::oracles::{LcClassifier, LcConfig, Match2dConfig, Matcher, ViewLibrary};
use crate::render::{read_manifest, DEFAULT_BINS};
use crate::scene::{Axes, Axis, Camera, ViewSelection};

use super::records::{profile_rows, read_rows_file, write_rows_file, PredictionRecord, ResultRow};
use super::{
    default_stride, evaluate, metrics, plot, profile_from_predictions, view_based_baseline,
    AlignClassifier, Classifier, ClassifierKind, ClipSource, GeneralizationProfile, ManifestSource,
    MlpClassifier, PlotPanel, ProfileMetrics, ViewSource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 1, 2, 3, 4, 6 and 12 equidistant y-views.
    UniformViews,
    /// Two views at -15 and 15 degrees.
    Intermediate,
    /// 12 y-views with and without in-plane rotation augmentation.
    InplaneAug,
    /// 3, 5 and 7 views spread over [-30, 30].
    RangeLimited,
    /// 10-degree spaced views over [-r, r] for growing r.
    ExtendedRange,
    /// Views at -60, 0, 60 for several class counts.
    ClassesSweep,
}

impl Preset {
    pub const ALL: [Preset; 6] = [
        Preset::UniformViews,
        Preset::Intermediate,
        Preset::InplaneAug,
        Preset::RangeLimited,
        Preset::ExtendedRange,
        Preset::ClassesSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::UniformViews => "uniform-views",
            Preset::Intermediate => "intermediate",
            Preset::InplaneAug => "inplane-aug",
            Preset::RangeLimited => "range-limited",
            Preset::ExtendedRange => "extended-range",
            Preset::ClassesSweep => "classes-sweep",
        }
    }

    pub fn conditions(self, config: &ExperimentConfig) -> Vec<Condition> {
        let y = Axis::Y;
        let n = config.classes;
        let plain = |name: String, views: ViewSelection| Condition {
            name,
            train_views: views,
            classes: n,
            augment: None,
        };
        match self {
            Preset::UniformViews => [1, 2, 3, 4, 6, 12]
                .into_iter()
                .map(|k| {
                    plain(
                        format!("views={k}"),
                        ViewSelection::uniform(y, k, config.view_offset),
                    )
                })
                .collect(),
            Preset::Intermediate => vec![plain(
                "views=-15,15".into(),
                ViewSelection::new(y, [-15.0, 15.0]),
            )],
            Preset::InplaneAug => {
                let views = ViewSelection::uniform(y, 12, config.view_offset);
                let rotated = AugmentConfig {
                    inplane_rotation_deg: Some([-180.0, 180.0]),
                    ..config.train.augment.clone()
                };
                vec![
                    plain("views=12".into(), views.clone()),
                    Condition {
                        name: "views=12+inplane".into(),
                        train_views: views,
                        classes: n,
                        augment: Some(rotated),
                    },
                ]
            }
            Preset::RangeLimited => [3, 5, 7]
                .into_iter()
                .map(|k| {
                    plain(
                        format!("range=30,views={k}"),
                        ViewSelection::range(y, -30.0, 30.0, k),
                    )
                })
                .collect(),
            Preset::ExtendedRange => [30, 60, 90, 120, 150]
                .into_iter()
                .map(|r| {
                    let k = r / 5 + 1;
                    plain(
                        format!("range={r},views={k}"),
                        ViewSelection::range(y, -(r as f64), r as f64, k),
                    )
                })
                .collect(),
            Preset::ClassesSweep => config
                .sweep_classes
                .iter()
                .map(|&c| Condition {
                    name: format!("classes={c}"),
                    train_views: ViewSelection::new(y, [-60.0, 0.0, 60.0]),
                    classes: c,
                    augment: None,
                })
                .collect(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
                Error::Parse(format!(
                    "unknown preset {s:?} (one of {})",
                    names.join(", ")
                ))
            })
    }
}

/// One training setup inside a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub name: String,
    pub train_views: ViewSelection,
    pub classes: usize,
    /// Replaces the configured MLP augmentation.
    pub augment: Option<AugmentConfig>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub classifier: ClassifierKind,
    pub classes: usize,
    /// One replicate per seed; each seed draws its own objects and training run.
    pub seeds: Vec<u64>,
    pub out_dir: Option<PathBuf>,
    pub camera: Camera,
    pub eval_axes: Vec<Axes>,
    pub bins: usize,
    pub view_offset: f64,
    pub sweep_classes: Vec<usize>,
    pub train: TrainConfig,
    pub match2d: Match2dConfig,
    pub lc: LcConfig,
    /// Reads views from this manifest instead of generating clips.
    pub dataset: Option<PathBuf>,
    /// Prediction CSV scored when `classifier` is external.
    pub predictions: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Desk-scale defaults: 100 classes, 3 seeds, every axis and axis pair.
    /// The network sees a perspective camera; the oracles an orthographic one.
    pub fn new(preset: Preset, classifier: ClassifierKind) -> Self {
        let camera = match classifier {
            ClassifierKind::Mlp => Camera::perspective(224),
            _ => Camera::orthographic(224),
        };
        ExperimentConfig {
            preset,
            classifier,
            classes: 100,
            seeds: vec![0, 1, 2],
            out_dir: None,
            camera,
            eval_axes: Axes::ALL.to_vec(),
            bins: DEFAULT_BINS,
            view_offset: 0.0,
            sweep_classes: vec![10, 100, 1000],
            train: TrainConfig::default(),
            match2d: Match2dConfig::default(),
            lc: LcConfig::default(),
            dataset: None,
            predictions: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if self.classes == 0 || self.sweep_classes.contains(&0) {
            return Err(Error::InvalidConfig("class counts must be positive".into()));
        }
        if self.eval_axes.is_empty() {
            return Err(Error::InvalidConfig("no evaluation axes".into()));
        }
        if self.classifier == ClassifierKind::External && self.predictions.is_none() {
            return Err(Error::InvalidConfig(
                "external classifier needs a predictions CSV".into(),
            ));
        }
        self.camera.check()?;
        self.train.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_loss: f64,
    pub final_train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub condition: String,
    pub seed: u64,
    pub classes: usize,
    pub train_views: ViewSelection,
    pub profiles: Vec<GeneralizationProfile>,
    pub metrics: Vec<ProfileMetrics>,
    /// Profile on the training axis expected from a pure view matcher, when a
    /// single-view condition at 0 degrees exists for the same seed.
    pub baseline: Option<GeneralizationProfile>,
    pub train: Option<TrainSummary>,
}

impl ConditionResult {
    pub fn profile(&self, axes: Axes) -> Option<&GeneralizationProfile> {
        self.profiles.iter().find(|p| p.axes == axes)
    }

    pub fn metric(&self, axes: Axes) -> Option<&ProfileMetrics> {
        self.metrics.iter().find(|m| m.axes == axes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub preset: Preset,
    pub classifier: ClassifierKind,
    /// Condition-major, then seed, in preset order.
    pub conditions: Vec<ConditionResult>,
}

impl ResultBundle {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.conditions
            .iter()
            .flat_map(|c| {
                c.profiles
                    .iter()
                    .flat_map(|p| profile_rows(p, &c.condition, c.seed))
            })
            .collect()
    }

    /// Seed-averaged mean accuracy of `axes` per condition, in preset order.
    pub fn mean_by_condition(&self, axes: Axes) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64, usize)> = Vec::new();
        for c in &self.conditions {
            let Some(m) = c.metric(axes) else { continue };
            match out.iter_mut().find(|(n, _, _)| *n == c.condition) {
                Some(e) => {
                    e.1 += m.mean;
                    e.2 += 1;
                }
                None => out.push((c.condition.clone(), m.mean, 1)),
            }
        }
        out.into_iter().map(|(n, s, k)| (n, s / k as f64)).collect()
    }
}

fn clips_for(seed: u64, classes: usize) -> Result<Vec<Paperclip>> {
    let cfg = GenConfig::with_seed(seed);
    (0..classes as u64)
        .into_par_iter()
        .map(|k| generate_paperclip(&cfg, k))
        .collect()
}

/// Keeps the first `classes` ids of a source.
struct Subset<'a> {
    inner: &'a dyn ViewSource,
    classes: usize,
}

impl ViewSource for Subset<'_> {
    fn class_ids(&self) -> Vec<u64> {
        let mut ids = self.inner.class_ids();
        ids.truncate(self.classes);
        ids
    }

    fn view(&self, class_id: u64, pose: &crate::scene::PoseSpec) -> Result<crate::scene::View2> {
        self.inner.view(class_id, pose)
    }

    fn composition(&self) -> crate::scene::Composition {
        self.inner.composition()
    }
}

fn library(source: &dyn ViewSource, views: &ViewSelection) -> Result<ViewLibrary> {
    let mut lib = ViewLibrary::new();
    for k in source.class_ids() {
        for pose in views.poses() {
            let v = source.view(k, &pose)?;
            lib.insert(k, pose, v);
        }
    }
    Ok(lib)
}

/// Trains or builds the classifier for one condition.
pub fn build_classifier(
    config: &ExperimentConfig,
    condition: &Condition,
    seed: u64,
    lib: &ViewLibrary,
    camera: &Camera,
) -> Result<(Box<dyn Classifier>, Option<TrainSummary>)> {
    Ok(match config.classifier {
        ClassifierKind::Match2d => (Box::new(Matcher::new(lib, config.match2d)?), None),
        ClassifierKind::Lc => (Box::new(LcClassifier::new(lib, config.lc)?), None),
        ClassifierKind::Align3d => (Box::new(AlignClassifier::from_library(lib)?), None),
        ClassifierKind::Mlp => {
            let mut tc = config.train.clone();
            tc.seed = seed;
            if let Some(a) = &condition.augment {
                tc.augment = a.clone();
            }
            let class_ids: Vec<u64> = lib.class_ids().collect();
            let examples: Vec<TrainExample> = lib
                .iter()
                .enumerate()
                .flat_map(|(label, (_, views))| {
                    views.iter().map(move |v| TrainExample {
                        points: v.points,
                        label,
                    })
                })
                .collect();
            let (model, log) = train(&examples, class_ids, camera, config.bins, &tc)?;
            let summary = TrainSummary {
                epochs: log.epochs.len(),
                final_loss: log.epochs.last().map_or(f64::NAN, |e| e.loss),
                final_train_accuracy: log.final_train_accuracy,
            };
            (
                Box::new(MlpClassifier {
                    model,
                    camera: *camera,
                }),
                Some(summary),
            )
        }
        ClassifierKind::External => {
            return Err(Error::InvalidConfig(
                "external predictions are scored, not built".into(),
            ))
        }
    })
}

fn run_condition(
    config: &ExperimentConfig,
    condition: &Condition,
    seed: u64,
    source: &dyn ViewSource,
    camera: &Camera,
) -> Result<ConditionResult> {
    let source = Subset {
        inner: source,
        classes: condition.classes,
    };
    let classes = source.class_ids().len();
    if classes < condition.classes {
        return Err(Error::InvalidConfig(format!(
            "dataset has {classes} classes, condition needs {}",
            condition.classes
        )));
    }
    let training = condition.train_views.poses();
    let (profiles, train) = if config.classifier == ClassifierKind::External {
        let path = config.predictions.as_ref().expect("checked");
        let recs: Vec<PredictionRecord> = read_rows_file(path)?;
        let profiles = config
            .eval_axes
            .iter()
            .map(|&a| {
                profile_from_predictions(
                    &recs,
                    a,
                    default_stride(a),
                    &training,
                    source.composition(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        (profiles, None)
    } else {
        let lib = library(&source, &condition.train_views)?;
        let (classifier, train) = build_classifier(config, condition, seed, &lib, camera)?;
        let profiles = config
            .eval_axes
            .iter()
            .map(|&a| {
                evaluate(
                    classifier.as_ref(),
                    &source,
                    a,
                    default_stride(a),
                    &training,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        (profiles, train)
    };
    let axis: Axes = condition.train_views.axis.into();
    let metrics = profiles
        .iter()
        .map(|p| {
            let angles: &[f64] = if p.axes == axis {
                &condition.train_views.angles
            } else {
                &[]
            };
            metrics(p, angles, None)
        })
        .collect();
    Ok(ConditionResult {
        condition: condition.name.clone(),
        seed,
        classes,
        train_views: condition.train_views.clone(),
        profiles,
        metrics,
        baseline: None,
        train,
    })
}

/// Fills in baselines and gaps from the single-view condition of each seed.
fn attach_baselines(results: &mut [ConditionResult]) {
    let singles: Vec<(u64, GeneralizationProfile)> = results
        .iter()
        .filter(|r| r.train_views.angles == [0.0])
        .filter_map(|r| {
            let axis: Axes = r.train_views.axis.into();
            r.profile(axis).map(|p| (r.seed, p.clone()))
        })
        .collect();
    for r in results.iter_mut() {
        let axis: Axes = r.train_views.axis.into();
        let Some((_, single)) = singles.iter().find(|(s, _)| *s == r.seed) else {
            continue;
        };
        let Some(idx) = r.profiles.iter().position(|p| p.axes == axis) else {
            continue;
        };
        let base = view_based_baseline(single, &r.train_views.angles);
        r.metrics[idx] = metrics(&r.profiles[idx], &r.train_views.angles, Some(&base));
        r.baseline = Some(base);
    }
}

/// Runs every condition of the preset for every seed. Conditions run
/// concurrently; results come back in preset order.
pub fn run_preset(config: &ExperimentConfig) -> Result<ResultBundle> {
    config.check()?;
    let conditions = config.preset.conditions(config);
    let max_classes = conditions.iter().map(|c| c.classes).max().unwrap_or(0);

    let manifest_source = match &config.dataset {
        Some(path) => Some(ManifestSource::new(&read_manifest(path)?)?),
        None => None,
    };
    let camera = match &config.dataset {
        Some(path) => read_manifest(path)?.camera,
        None => config.camera,
    };
    let clip_sets: Vec<Vec<Paperclip>> = if manifest_source.is_some() {
        Vec::new()
    } else {
        config
            .seeds
            .iter()
            .map(|&s| clips_for(s, max_classes))
            .collect::<Result<_>>()?
    };

    let jobs: Vec<(usize, usize)> = (0..conditions.len())
        .flat_map(|c| (0..config.seeds.len()).map(move |s| (c, s)))
        .collect();
    let mut results = jobs
        .par_iter()
        .map(|&(c, s)| {
            let seed = config.seeds[s];
            let cond = &conditions[c];
            let out = match &manifest_source {
                Some(src) => run_condition(config, cond, seed, src, &camera),
                None => {
                    let src = ClipSource::new(&clip_sets[s], camera);
                    run_condition(config, cond, seed, &src, &camera)
                }
            };
            out.map_err(|e| Error::Condition {
                condition: cond.name.clone(),
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    attach_baselines(&mut results);
    let bundle = ResultBundle {
        preset: config.preset,
        classifier: config.classifier,
        conditions: results,
    };
    if let Some(dir) = &config.out_dir {
        write_bundle(&bundle, dir)?;
    }
    Ok(bundle)
}

fn file_stem(condition: &str, seed: u64) -> String {
    let clean: String = condition
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{clean}_seed{seed}")
}

/// Writes `results.csv`, `summary.json` and one SVG per condition and seed.
pub fn write_bundle(bundle: &ResultBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows_file(&dir.join("results.csv"), &bundle.rows())?;
    #[derive(Serialize)]
    struct Entry<'a> {
        condition: &'a str,
        seed: u64,
        classes: usize,
        train_views: &'a ViewSelection,
        metrics: &'a [ProfileMetrics],
        train: &'a Option<TrainSummary>,
    }
    let entries: Vec<Entry> = bundle
        .conditions
        .iter()
        .map(|c| Entry {
            condition: &c.condition,
            seed: c.seed,
            classes: c.classes,
            train_views: &c.train_views,
            metrics: &c.metrics,
            train: &c.train,
        })
        .collect();
    let summary = serde_json::json!({
        "preset": bundle.preset,
        "classifier": bundle.classifier,
        "conditions": entries,
    });
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Json {
        path: path.clone(),
        source: e,
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    for c in &bundle.conditions {
        let panels: Vec<PlotPanel> = c
            .profiles
            .iter()
            .map(|p| {
                let mut panel = PlotPanel::new(p);
                if c.baseline.as_ref().is_some_and(|b| b.axes == p.axes) {
                    panel.baseline = c.baseline.as_ref();
                }
                panel
            })
            .collect();
        let title = format!(
            "{} / {} / {} (seed {})",
            bundle.preset, bundle.classifier, c.condition, c.seed
        );
        let path = dir.join(format!("{}.svg", file_stem(&c.condition, c.seed)));
        fs::write(&path, plot(&title, &panels)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(preset: Preset, kind: ClassifierKind) -> ExperimentConfig {
        let mut c = ExperimentConfig::new(preset, kind);
        c.classes = 6;
        c.seeds = vec![3];
        c.eval_axes = vec![Axes::Y, Axes::X];
        c
    }

    #[test]
    fn preset_names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig3".parse::<Preset>().is_err());
    }

    #[test]
    fn preset_conditions() {
        let c = ExperimentConfig::new(Preset::UniformViews, ClassifierKind::Lc);
        let conds = Preset::UniformViews.conditions(&c);
        let counts: Vec<usize> = conds.iter().map(|c| c.train_views.angles.len()).collect();
        assert_eq!(counts, [1, 2, 3, 4, 6, 12]);
        let r = Preset::RangeLimited.conditions(&c);
        assert_eq!(
            r[2].train_views.angles,
            [330.0, 340.0, 350.0, 0.0, 10.0, 20.0, 30.0]
        );
        let s = Preset::ClassesSweep.conditions(&c);
        assert_eq!(
            s.iter().map(|c| c.classes).collect::<Vec<_>>(),
            [10, 100, 1000]
        );
        let e = Preset::ExtendedRange.conditions(&c);
        assert_eq!(e[0].train_views.angles.len(), 7);
        assert!(Preset::InplaneAug.conditions(&c)[1].augment.is_some());
    }

    #[test]
    fn lc_uniform_views_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(Preset::UniformViews, ClassifierKind::Lc);
        cfg.out_dir = Some(dir.path().to_path_buf());
        // LC rejects a single view, which must surface with its condition
        let err = run_preset(&cfg).unwrap_err();
        assert!(
            matches!(err, Error::Condition { ref condition, .. } if condition == "views=1"),
            "{err}"
        );

        let mut cfg = small(Preset::RangeLimited, ClassifierKind::Lc);
        cfg.out_dir = Some(dir.path().to_path_buf());
        let bundle = run_preset(&cfg).unwrap();
        assert_eq!(bundle.conditions.len(), 3);
        for c in &bundle.conditions {
            // orthographic exactness: every y view is recognized
            assert_eq!(c.metric(Axes::Y).unwrap().mean, 1.0);
        }
        let rows: Vec<ResultRow> = read_rows_file(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows, bundle.rows());
        assert_eq!(rows.len(), 3 * 720);
        assert!(dir.path().join("summary.json").exists());
        assert!(dir.path().join("range_30_views_7_seed3.svg").exists());
    }

    #[test]
    fn match2d_baseline_of_single_view_is_itself() {
        let mut cfg = small(Preset::UniformViews, ClassifierKind::Match2d);
        cfg.eval_axes = vec![Axes::Y];
        let bundle = run_preset(&cfg).unwrap();
        let one = &bundle.conditions[0];
        assert_eq!(one.condition, "views=1");
        assert_eq!(one.metric(Axes::Y).unwrap().gap_to_baseline, Some(0.0));
        let means = bundle.mean_by_condition(Axes::Y);
        assert_eq!(means.len(), 6);
        assert!(means[5].1 > means[0].1, "{means:?}");
    }

    #[test]
    fn config_checks() {
        let mut c = small(Preset::Intermediate, ClassifierKind::External);
        assert!(c.check().is_err());
        c.predictions = Some("p.csv".into());
        assert!(c.check().is_ok());
        c.seeds.clear();
        assert!(c.check().is_err());
    }
}
