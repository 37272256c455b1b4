use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::oracles::{
    align_classify, sfm_reconstruct, AlignModel, LcClassifier, Matcher, ViewLibrary,
};
use crate::scene::{Camera, View2};

/// Anything that maps a point view to a class id.
pub trait Classifier: Sync {
    fn classify(&self, view: &View2) -> u64;

    fn classify_batch(&self, views: &[View2]) -> Vec<u64> {
        views.iter().map(|v| self.classify(v)).collect()
    }
}

impl Classifier for Matcher {
    fn classify(&self, view: &View2) -> u64 {
        Matcher::classify(self, view)
    }
}

impl Classifier for LcClassifier {
    fn classify(&self, view: &View2) -> u64 {
        LcClassifier::classify(self, view)
    }
}

/// Per-class shapes reconstructed from the training views, matched by alignment.
#[derive(Debug, Clone)]
pub struct AlignClassifier {
    pub models: Vec<AlignModel>,
}

impl AlignClassifier {
    pub fn from_library(lib: &ViewLibrary) -> Result<Self> {
        if lib.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        let models = lib
            .iter()
            .map(|(k, views)| {
                let pts: Vec<View2> = views.iter().map(|v| v.points).collect();
                AlignModel::new(k, &sfm_reconstruct(&pts)?)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AlignClassifier { models })
    }
}

impl Classifier for AlignClassifier {
    fn classify(&self, view: &View2) -> u64 {
        align_classify(view, &self.models)
            .expect("non-empty model set")
            .0
    }
}

/// A trained network plus the camera whose frame defines the array bins.
#[derive(Debug, Clone)]
pub struct MlpClassifier {
    pub model: MlpModel,
    pub camera: Camera,
}

impl Classifier for MlpClassifier {
    fn classify(&self, view: &View2) -> u64 {
        self.model.classify(view, &self.camera)
    }

    fn classify_batch(&self, views: &[View2]) -> Vec<u64> {
        self.model.classify_batch(views, &self.camera)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mlp,
    Match2d,
    Lc,
    Align3d,
    External,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Mlp => "mlp",
            ClassifierKind::Match2d => "match2d",
            ClassifierKind::Lc => "lc",
            ClassifierKind::Align3d => "align3d",
            ClassifierKind::External => "external",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "mlp" => ClassifierKind::Mlp,
            "match2d" => ClassifierKind::Match2d,
            "lc" => ClassifierKind::Lc,
            "align3d" => ClassifierKind::Align3d,
            "external" => ClassifierKind::External,
            _ => return Err(Error::Parse(format!("unknown classifier {s:?}"))),
        })
    }
}
