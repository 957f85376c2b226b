//! Plain mini-batch SGD on categorical cross-entropy.
//!
//! Only used to produce small fixture networks; anything serious should be
//! trained elsewhere and imported through the network file format.

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{Activation, DenseLayer, NetworkModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(units: usize, activation: Activation) -> Self {
        LayerSpec { units, activation }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            learning_rate: 0.05,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: NetworkModel,
    pub train_accuracy: f64,
    pub final_loss: f64,
}

/// Per-layer `(dL/dW, dL/db)` of the mean cross-entropy.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

fn check_labels(data: &Dataset, num_classes: usize) -> Result<&[usize]> {
    if data.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let labels = data
        .labels()
        .ok_or_else(|| Error::InvalidArgument("training dataset has no labels".into()))?;
    if let Some(index) = labels.iter().position(|&l| l >= num_classes) {
        return Err(Error::LabelOutOfRange {
            index,
            label: labels[index],
            num_classes,
        });
    }
    Ok(labels)
}

fn init_network(
    input_dim: usize,
    hidden: &[LayerSpec],
    num_classes: usize,
    rng: &mut impl Rng,
) -> Result<NetworkModel> {
    let mut sizes = vec![input_dim];
    sizes.extend(hidden.iter().map(|h| h.units));
    sizes.push(num_classes);
    let mut acts: Vec<Activation> = hidden.iter().map(|h| h.activation).collect();
    acts.push(Activation::Softmax);

    let layers = sizes
        .windows(2)
        .zip(acts)
        .map(|(w, act)| {
            let (fan_in, fan_out) = (w[0] as f64, w[1] as f64);
            let limit = match act {
                Activation::Relu => (6.0 / fan_in).sqrt(),
                _ => (6.0 / (fan_in + fan_out)).sqrt(),
            };
            let weights = Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-limit..limit));
            DenseLayer::new(weights, Array1::zeros(w[1]), act)
        })
        .collect();
    NetworkModel::new(layers)
}

pub fn cross_entropy_loss(net: &NetworkModel, samples: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (x, &y) in samples.iter().zip(labels) {
        let trace = net.forward(x)?;
        total -= trace.output[y].max(f64::MIN_POSITIVE).ln();
    }
    Ok(total / samples.len() as f64)
}

/// Backpropagated gradients of [`cross_entropy_loss`].
pub fn gradients(net: &NetworkModel, samples: &[Vec<f64>], labels: &[usize]) -> Result<Gradients> {
    let mut acc: Vec<(Array2<f64>, Array1<f64>)> = net
        .layers()
        .iter()
        .map(|l| (Array2::zeros(l.weights.raw_dim()), Array1::zeros(l.out_size())))
        .collect();
    for (x, &y) in samples.iter().zip(labels) {
        let trace = net.forward(x)?;
        // softmax + cross-entropy
        let mut delta = trace.output.clone();
        delta[y] -= 1.0;
        for idx in (0..net.num_layers()).rev() {
            let input = &trace.activations[idx];
            let (gw, gb) = &mut acc[idx];
            let outer = input
                .view()
                .insert_axis(Axis(1))
                .dot(&delta.view().insert_axis(Axis(0)));
            *gw += &outer;
            *gb += &delta;
            if idx == 0 {
                break;
            }
            let back = net.layers()[idx].weights.dot(&delta);
            // `input` is the post-activation output of the previous layer.
            delta = match net.layers()[idx - 1].activation {
                Activation::Relu => {
                    ndarray::Zip::from(&back)
                        .and(input)
                        .map_collect(|b, a| if *a > 0.0 { *b } else { 0.0 })
                }
                Activation::Sigmoid => {
                    ndarray::Zip::from(&back).and(input).map_collect(|b, a| b * a * (1.0 - a))
                }
                Activation::Identity => back,
                Activation::Softmax => unreachable!("hidden softmax rejected by NetworkModel::new"),
            };
        }
    }
    let scale = 1.0 / samples.len() as f64;
    for (gw, gb) in &mut acc {
        *gw *= scale;
        *gb *= scale;
    }
    Ok(Gradients { layers: acc })
}

fn accuracy(net: &NetworkModel, samples: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut hits = 0usize;
    for (x, &y) in samples.iter().zip(labels) {
        if net.predict(x)?.0 == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Trains a fresh network with hidden layers `hidden` and a softmax output of
/// `num_classes` units. Deterministic for a given `hyper.seed`.
pub fn train_toy(
    hidden: &[LayerSpec],
    num_classes: usize,
    data: &Dataset,
    hyper: &Hyper,
) -> Result<TrainOutcome> {
    let labels = check_labels(data, num_classes)?;
    if hyper.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    if let Some(h) = hidden.iter().find(|h| h.activation == Activation::Softmax || h.units == 0) {
        return Err(Error::InvalidArgument(format!(
            "invalid hidden layer {} units / {}",
            h.units, h.activation
        )));
    }
    let mut init_rng = stream_rng(hyper.seed, streams::TRAIN_INIT);
    let mut shuffle_rng = stream_rng(hyper.seed, streams::TRAIN_SHUFFLE);
    let mut net = init_network(data.dim(), hidden, num_classes, &mut init_rng)?;

    let samples = data.samples();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut batch_x = Vec::with_capacity(hyper.batch_size);
    let mut batch_y = Vec::with_capacity(hyper.batch_size);
    for _ in 0..hyper.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(hyper.batch_size) {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(samples[i].clone());
                batch_y.push(labels[i]);
            }
            let grads = gradients(&net, &batch_x, &batch_y)?;
            for (layer, (gw, gb)) in net.layers.iter_mut().zip(&grads.layers) {
                layer.weights.scaled_add(-hyper.learning_rate, gw);
                layer.bias.scaled_add(-hyper.learning_rate, gb);
            }
        }
    }
    if net
        .layers
        .iter()
        .any(|l| l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()))
    {
        return Err(Error::InvalidArgument(
            "training diverged to non-finite parameters; lower the learning rate".into(),
        ));
    }
    let train_accuracy = accuracy(&net, samples, labels)?;
    let final_loss = cross_entropy_loss(&net, samples, labels)?;
    Ok(TrainOutcome {
        network: net,
        train_accuracy,
        final_loss,
    })
}
