use std::f64::consts::PI;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracles::ViewLibrary;
use crate::render::{coord_array, DatasetManifest, Representation};
use crate::rng;
use crate::scene::{Camera, Vec2, View2, ViewSelection};

use super::{backprop, default_sizes, init, predict, Gradients, MlpParams, HIDDEN};

/// On-the-fly augmentations, applied to projected points before binning.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    /// Mirror horizontally with probability 1/2.
    pub flip: bool,
    /// Uniform scale factor range about the image center.
    pub scale_jitter: Option<[f64; 2]>,
    /// Random shift keeping every point inside the frame.
    pub translate: bool,
    /// Uniform in-plane rotation range in degrees about the image center.
    pub inplane_rotation_deg: Option<[f64; 2]>,
}

impl AugmentConfig {
    pub fn none() -> Self {
        AugmentConfig {
            flip: false,
            scale_jitter: None,
            translate: false,
            inplane_rotation_deg: None,
        }
    }

    /// The image-model crop recipe: flip, scale in [0.5, 1] and an in-frame shift.
    pub fn crop() -> Self {
        AugmentConfig {
            flip: true,
            scale_jitter: Some([0.5, 1.0]),
            translate: true,
            inplane_rotation_deg: None,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::none()
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub grad_clip_norm: f64,
    pub seed: u64,
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub augment: AugmentConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 300,
            batch_size: 128,
            lr: 0.01,
            momentum: 0.9,
            weight_decay: 1e-4,
            grad_clip_norm: 10.0,
            seed: 0,
            hidden: vec![HIDDEN; 3],
            augment: AugmentConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 {
            return bad("epochs and batch_size must be positive");
        }
        if !(self.lr > 0.0) || !(self.grad_clip_norm > 0.0) {
            return bad("lr and grad_clip_norm must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return bad("momentum must be in [0, 1) and weight_decay >= 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be positive");
        }
        if let Some([lo, hi]) = self.augment.scale_jitter {
            if !(lo > 0.0 && lo <= hi) {
                return bad("scale jitter needs 0 < low <= high");
            }
        }
        if let Some([lo, hi]) = self.augment.inplane_rotation_deg {
            if !(lo <= hi) {
                return bad("rotation range needs low <= high");
            }
        }
        Ok(())
    }

    /// Learning rate at optimizer step `t` of `total`, reaching zero at the last step.
    pub fn lr_at(&self, t: usize, total: usize) -> f64 {
        if total <= 1 {
            return self.lr;
        }
        0.5 * self.lr * (1.0 + (PI * t as f64 / (total - 1) as f64).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub points: View2,
    /// Dense label in `0..classes`.
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Accuracy on the (augmented) batches seen during the epoch.
    pub accuracy: f64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    /// Accuracy on the un-augmented training views after the last epoch.
    pub final_train_accuracy: f64,
}

/// Trained parameters plus the mapping from output index to class id.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub params: MlpParams,
    pub class_ids: Vec<u64>,
}

impl MlpModel {
    pub fn bins(&self) -> usize {
        self.params.input_len() / 2
    }

    pub fn classify(&self, points: &[Vec2], cam: &Camera) -> u64 {
        let arr = coord_array(points, cam, self.bins());
        self.class_ids[predict(&self.params, &arr.values).0]
    }

    /// Classifies many views at once.
    pub fn classify_batch(&self, views: &[View2], cam: &Camera) -> Vec<u64> {
        let bins = self.bins();
        let mut out = Vec::with_capacity(views.len());
        for chunk in views.chunks(512) {
            let mut x = Array2::zeros((chunk.len(), 2 * bins));
            for (row, v) in chunk.iter().enumerate() {
                let arr = coord_array(v, cam, bins);
                x.row_mut(row)
                    .assign(&ndarray::ArrayView1::from(&arr.values));
            }
            let logits = self.params.forward(x.view());
            for row in logits.rows() {
                out.push(self.class_ids[super::argmax(row.as_slice().unwrap())]);
            }
        }
        out
    }
}

/// Applies one random draw of the augmentations to `points`.
pub fn augment_points<R: Rng>(
    points: &[Vec2],
    cam: &Camera,
    aug: &AugmentConfig,
    rng: &mut R,
) -> Vec<Vec2> {
    let size = cam.image_size as f64;
    let c = cam.center();
    let mut out: Vec<Vec2> = points.to_vec();
    if aug.flip && rng.random_bool(0.5) {
        for p in &mut out {
            p.x = size - p.x;
        }
    }
    if let Some([lo, hi]) = aug.inplane_rotation_deg {
        let a = rng.random_range(lo..=hi).to_radians();
        let (s, co) = a.sin_cos();
        for p in &mut out {
            let d = *p - c;
            // image v points down, so a counter-clockwise turn flips the sign of s
            *p = c + Vec2::new(co * d.x + s * d.y, -s * d.x + co * d.y);
        }
    }
    if let Some([lo, hi]) = aug.scale_jitter {
        let k = rng.random_range(lo..=hi);
        for p in &mut out {
            *p = c + (*p - c) * k;
        }
    }
    if aug.translate && !out.is_empty() {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for p in &out {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let shift = |lo: f64, hi: f64, rng: &mut R| {
            let (a, b) = (-lo, size - hi);
            if a < b {
                rng.random_range(a..=b)
            } else {
                0.0
            }
        };
        let t = Vec2::new(shift(lo.x, hi.x, rng), shift(lo.y, hi.y, rng));
        for p in &mut out {
            *p += t;
        }
    }
    out
}

/// Dense labels follow ascending class id.
pub fn examples_from_library(lib: &ViewLibrary) -> (Vec<TrainExample>, Vec<u64>) {
    let class_ids: Vec<u64> = lib.class_ids().collect();
    let mut examples = Vec::new();
    for (label, (_, views)) in lib.iter().enumerate() {
        for v in views {
            examples.push(TrainExample {
                points: v.points,
                label,
            });
        }
    }
    (examples, class_ids)
}

/// Trains on the selected views of a point-bearing dataset, optionally keeping
/// only the first `classes` class ids.
pub fn train_on_manifest(
    manifest: &DatasetManifest,
    selection: &ViewSelection,
    classes: Option<usize>,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainLog)> {
    if manifest.representation == Representation::Shaded {
        return Err(Error::InvalidConfig(
            "mlp training needs a point-bearing dataset".into(),
        ));
    }
    let mut lib = ViewLibrary::from_manifest(manifest, selection)?;
    if let Some(n) = classes {
        let keep: Vec<u64> = lib.class_ids().take(n).collect();
        let mut sub = ViewLibrary::new();
        for k in keep {
            for v in lib.views(k) {
                sub.insert(k, v.pose.clone(), v.points);
            }
        }
        lib = sub;
    }
    if lib.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let (examples, class_ids) = examples_from_library(&lib);
    train(
        &examples,
        class_ids,
        &manifest.camera,
        manifest.bins,
        config,
    )
}

/// Minibatch SGD with momentum, per-step cosine decay and global-norm clipping.
pub fn train(
    examples: &[TrainExample],
    class_ids: Vec<u64>,
    cam: &Camera,
    bins: usize,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainLog)> {
    config.check()?;
    if examples.is_empty() || class_ids.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if bins < 2 {
        return Err(Error::InvalidConfig("bins must be >= 2".into()));
    }
    let classes = class_ids.len();
    let mut sizes = vec![2 * bins];
    sizes.extend(&config.hidden);
    sizes.push(classes);
    if config.hidden.len() == 3 && config.hidden.iter().all(|&h| h == HIDDEN) {
        debug_assert_eq!(sizes, default_sizes(2 * bins, classes));
    }
    let mut params = init(&sizes, config.seed);
    let mut velocity = Gradients::zeros_like(&params);
    let mut rng: ChaCha8Rng = rng::stream_rng(config.seed, rng::tag::TRAIN);

    // clean inputs are reused whenever augmentation is off
    let clean: Vec<Vec<f64>> = examples
        .iter()
        .map(|e| coord_array(&e.points, cam, bins).values)
        .collect();
    let steps_per_epoch = examples.len().div_ceil(config.batch_size);
    let total = steps_per_epoch * config.epochs;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut log = TrainLog::default();
    let mut step = 0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut hits, mut lr) = (0.0, 0usize, config.lr);
        for batch in order.chunks(config.batch_size) {
            let mut x = Array2::zeros((batch.len(), 2 * bins));
            let mut labels = Vec::with_capacity(batch.len());
            for (row, &i) in batch.iter().enumerate() {
                let values = if config.augment.is_identity() {
                    clean[i].clone()
                } else {
                    let pts = augment_points(&examples[i].points, cam, &config.augment, &mut rng);
                    coord_array(&pts, cam, bins).values
                };
                x.row_mut(row).assign(&ndarray::ArrayView1::from(&values));
                labels.push(examples[i].label);
            }
            let (loss, mut grads, correct) =
                backprop(&params, x.view(), &labels, config.weight_decay);
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch });
            }
            let norm = grads.global_norm();
            if norm > config.grad_clip_norm {
                grads.scale(config.grad_clip_norm / norm);
            }
            lr = config.lr_at(step, total);
            for ((p, v), g) in params
                .layers
                .iter_mut()
                .zip(&mut velocity.layers)
                .zip(&grads.layers)
            {
                v.w *= config.momentum;
                v.w += &g.w;
                v.b *= config.momentum;
                v.b += &g.b;
                p.w.scaled_add(-lr, &v.w);
                p.b.scaled_add(-lr, &v.b);
            }
            loss_sum += loss * batch.len() as f64;
            hits += correct;
            step += 1;
        }
        if !params.is_finite() {
            return Err(Error::DivergedLoss { epoch });
        }
        log.epochs.push(EpochLog {
            epoch,
            loss: loss_sum / examples.len() as f64,
            accuracy: hits as f64 / examples.len() as f64,
            lr,
        });
    }
    let model = MlpModel { params, class_ids };
    let hits = examples
        .iter()
        .zip(&clean)
        .filter(|(e, x)| predict(&model.params, x).0 == e.label)
        .count();
    log.final_train_accuracy = hits as f64 / examples.len() as f64;
    Ok((model, log))
}
