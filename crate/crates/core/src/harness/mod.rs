//! Experiment protocols: evaluation over rotation grids, view-based baselines,
//! summary metrics, presets, and CSV / SVG output.

mod classifiers;
mod plot;
mod presets;
mod profile;
pub mod records;

pub use classifiers::{AlignClassifier, Classifier, ClassifierKind, MlpClassifier};
pub use plot::{plot, PlotPanel};
pub use presets::{
    build_classifier, run_preset, write_bundle, Condition, ConditionResult, ExperimentConfig,
    Preset, ResultBundle, TrainSummary,
};
pub use profile::{
    default_stride, evaluate, in_circular_hull, metrics, view_based_baseline, ClipSource,
    GeneralizationProfile, ManifestSource, ProfileMetrics, ViewSource,
};
pub use records::{
    predictions, profile_from_predictions, profile_rows, PredictionRecord, ResultRow,
};
