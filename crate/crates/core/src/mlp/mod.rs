//! Fully connected ReLU classifier on coordinate arrays, trained natively with
//! hand-written backpropagation.

mod io;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Normal};

use crate::rng;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};
pub use train::{
    augment_points, examples_from_library, train, train_on_manifest, AugmentConfig, EpochLog,
    MlpModel, TrainConfig, TrainExample, TrainLog,
};

/// Hidden width used by the default 4-layer network.
pub const HIDDEN: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`, so a batch forward is `x.dot(w) + b`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

/// Layer sizes `input -> 256 -> 256 -> 256 -> classes`.
pub fn default_sizes(input: usize, classes: usize) -> Vec<usize> {
    vec![input, HIDDEN, HIDDEN, HIDDEN, classes]
}

impl MlpParams {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].w.nrows()];
        s.extend(self.layers.iter().map(|l| l.w.ncols()));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].w.nrows()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().unwrap().w.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    /// Logits for a batch of row inputs.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut h = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            h = h.dot(&l.w) + &l.b;
            if i < last {
                h.mapv_inplace(|v| v.max(0.0));
            }
        }
        h
    }
}

/// He-normal weights (variance 2 / fan_in) and zero biases.
pub fn init(sizes: &[usize], seed: u64) -> MlpParams {
    assert!(sizes.len() >= 2 && sizes.iter().all(|&s| s > 0));
    let mut r = rng::stream_rng(seed, rng::tag::INIT);
    let layers = sizes
        .windows(2)
        .map(|pair| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
            Layer {
                w: Array2::from_shape_simple_fn((fan_in, fan_out), || normal.sample(&mut r)),
                b: Array1::zeros(fan_out),
            }
        })
        .collect();
    MlpParams { layers }
}

/// Row-wise softmax, numerically stabilized by the row max.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

/// Gradients with the same layout as [`MlpParams`].
pub type Gradients = MlpParams;

impl Gradients {
    pub fn zeros_like(p: &MlpParams) -> Self {
        MlpParams {
            layers: p
                .layers
                .iter()
                .map(|l| Layer {
                    w: Array2::zeros(l.w.raw_dim()),
                    b: Array1::zeros(l.b.raw_dim()),
                })
                .collect(),
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.w.iter().chain(l.b.iter()).map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.w *= s;
            l.b *= s;
        }
    }
}

/// Mean softmax cross-entropy over the batch plus `weight_decay / 2 * |W|^2`
/// (weights only), with gradients for every parameter.
pub fn loss_and_grad(
    params: &MlpParams,
    x: ArrayView2<f64>,
    labels: &[usize],
    weight_decay: f64,
) -> (f64, Gradients) {
    let (loss, grads, _) = backprop(params, x, labels, weight_decay);
    (loss, grads)
}

/// Loss, gradients and the number of argmax hits in the batch.
pub(crate) fn backprop(
    params: &MlpParams,
    x: ArrayView2<f64>,
    labels: &[usize],
    weight_decay: f64,
) -> (f64, Gradients, usize) {
    let n = x.nrows();
    assert_eq!(n, labels.len());
    let classes = params.classes();
    assert!(labels.iter().all(|&y| y < classes), "label out of range");

    // forward, keeping every layer's input
    let last = params.layers.len() - 1;
    let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(params.layers.len());
    let mut h = x.to_owned();
    for (i, l) in params.layers.iter().enumerate() {
        let z = h.dot(&l.w) + &l.b;
        inputs.push(h);
        h = if i < last { z.mapv(|v| v.max(0.0)) } else { z };
    }
    let probs = softmax_rows(&h);
    let correct = labels
        .iter()
        .enumerate()
        .filter(|&(row, &y)| argmax(probs.row(row).as_slice().unwrap()) == y)
        .count();
    let mut loss = 0.0;
    for (row, &y) in labels.iter().enumerate() {
        loss -= probs[(row, y)].max(f64::MIN_POSITIVE).ln();
    }
    loss /= n as f64;
    if weight_decay != 0.0 {
        let sq: f64 = params
            .layers
            .iter()
            .map(|l| l.w.iter().map(|v| v * v).sum::<f64>())
            .sum();
        loss += 0.5 * weight_decay * sq;
    }

    // backward
    let mut delta = probs;
    for (row, &y) in labels.iter().enumerate() {
        delta[(row, y)] -= 1.0;
    }
    delta /= n as f64;
    let mut grads = Gradients::zeros_like(params);
    for i in (0..params.layers.len()).rev() {
        let input = &inputs[i];
        let g = &mut grads.layers[i];
        g.w = input.t().dot(&delta);
        if weight_decay != 0.0 {
            g.w.scaled_add(weight_decay, &params.layers[i].w);
        }
        g.b = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut back = delta.dot(&params.layers[i].w.t());
            // ReLU mask from the previous layer's output (= this layer's input)
            ndarray::Zip::from(&mut back).and(input).for_each(|d, &a| {
                if a <= 0.0 {
                    *d = 0.0
                }
            });
            delta = back;
        }
    }
    (loss, grads, correct)
}

/// Class index with the highest probability and the softmax vector.
pub fn predict(params: &MlpParams, input: &[f64]) -> (usize, Vec<f64>) {
    let x = ArrayView2::from_shape((1, input.len()), input).expect("row input");
    let p = softmax_rows(&params.forward(x));
    let probs: Vec<f64> = p.row(0).to_vec();
    (argmax(&probs), probs)
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
