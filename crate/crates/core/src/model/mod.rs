//! Sequential dense networks: representation, evaluation and file IO.
//!
//! A network is a stack of dense layers `x_{l+1} = act_l(W_l^T x_l + b_l)` where
//! `W_l` has one row per input unit and one column per output unit. The last
//! layer always uses softmax so the output is a probability vector.

mod io;
mod train;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_network, network_fingerprint, parse_network, render_network, save_network};
pub use train::{
    cross_entropy_loss, gradients, train_toy, Gradients, Hyper, LayerSpec, TrainOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
            Activation::Softmax => "softmax",
        }
    }

    fn apply_inplace(self, z: &mut Array1<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
            Activation::Identity => {}
            Activation::Softmax => softmax_inplace(z),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation '{other}'"
            ))),
        }
    }
}

pub(crate) fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Max-subtracted softmax.
pub(crate) fn softmax_inplace(z: &mut Array1<f64>) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    z.mapv_inplace(|v| (v - max).exp());
    let total: f64 = z.sum();
    z.mapv_inplace(|v| v / total);
}

/// One dense block. `weights` is `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Self {
        DenseLayer {
            weights,
            bias,
            activation,
        }
    }

    pub fn in_size(&self) -> usize {
        self.weights.nrows()
    }

    pub fn out_size(&self) -> usize {
        self.weights.ncols()
    }

    /// Pre-activation `W^T x + b`.
    pub fn affine(&self, x: ArrayView1<f64>) -> Array1<f64> {
        x.dot(&self.weights) + &self.bias
    }

    /// Largest column-wise sum of `|W|`: the sup-norm Lipschitz constant of
    /// `x -> act(W^T x + b)` for 1-Lipschitz activations.
    pub fn lipschitz_constant(&self) -> f64 {
        self.weights
            .columns()
            .into_iter()
            .map(|c| c.iter().map(|w| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    layers: Vec<DenseLayer>,
}

impl NetworkModel {
    /// Validates shapes, finiteness and activation placement.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidNetwork("network has no layers".into()));
        }
        let last = layers.len() - 1;
        for (idx, layer) in layers.iter().enumerate() {
            let number = idx + 1;
            if layer.in_size() == 0 || layer.out_size() == 0 {
                return Err(Error::DimensionMismatch {
                    layer: number,
                    message: format!(
                        "empty weight matrix {}x{}",
                        layer.in_size(),
                        layer.out_size()
                    ),
                });
            }
            if layer.bias.len() != layer.out_size() {
                return Err(Error::DimensionMismatch {
                    layer: number,
                    message: format!(
                        "bias length {} does not match output size {}",
                        layer.bias.len(),
                        layer.out_size()
                    ),
                });
            }
            if idx > 0 {
                let prev = layers[idx - 1].out_size();
                if prev != layer.in_size() {
                    return Err(Error::DimensionMismatch {
                        layer: number,
                        message: format!(
                            "input size {} does not match previous output size {}",
                            layer.in_size(),
                            prev
                        ),
                    });
                }
            }
            if let Some(pos) = layer.weights.iter().position(|w| !w.is_finite()) {
                return Err(Error::NonFinite {
                    layer: number,
                    what: format!(
                        "weight ({}, {})",
                        pos / layer.out_size(),
                        pos % layer.out_size()
                    ),
                });
            }
            if let Some(pos) = layer.bias.iter().position(|b| !b.is_finite()) {
                return Err(Error::NonFinite {
                    layer: number,
                    what: format!("bias {pos}"),
                });
            }
            let softmax = layer.activation == Activation::Softmax;
            if idx == last && !softmax {
                return Err(Error::InvalidNetwork(format!(
                    "final layer {number} must use softmax, found {}",
                    layer.activation
                )));
            }
            if idx != last && softmax {
                return Err(Error::InvalidNetwork(format!(
                    "hidden layer {number} cannot use softmax"
                )));
            }
        }
        Ok(NetworkModel { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Layer by 1-based index.
    pub fn layer(&self, index: usize) -> Result<&DenseLayer> {
        if index == 0 || index > self.layers.len() {
            return Err(Error::LayerOutOfRange {
                layer: index,
                max: self.layers.len(),
            });
        }
        Ok(&self.layers[index - 1])
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_size()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].out_size()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::InputLength {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput(pos));
        }
        Ok(())
    }

    /// Full forward pass, keeping every layer input.
    pub fn forward(&self, x: &[f64]) -> Result<ActivationTrace> {
        self.check_input(x)?;
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = Array1::from(x.to_vec());
        for layer in &self.layers {
            let mut next = layer.affine(current.view());
            layer.activation.apply_inplace(&mut next);
            activations.push(current);
            current = next;
        }
        Ok(ActivationTrace::from_output(activations, current))
    }

    /// `(predicted class, confidence)`.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, f64)> {
        let trace = self.forward(x)?;
        Ok((trace.predicted, trace.confidence))
    }

    /// Cumulative sup-norm Lipschitz constants: entry `l-1` is the product of
    /// the per-layer constants of layers `1..=l`.
    pub fn cumulative_lipschitz(&self) -> Vec<f64> {
        let mut acc = 1.0;
        self.layers
            .iter()
            .map(|l| {
                acc *= l.lipschitz_constant();
                acc
            })
            .collect()
    }
}

/// Everything one forward pass produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    /// `activations[l]` is the input of layer `l + 1`; the first entry is the
    /// network input.
    pub activations: Vec<Array1<f64>>,
    pub output: Array1<f64>,
    pub predicted: usize,
    pub confidence: f64,
}

impl ActivationTrace {
    fn from_output(activations: Vec<Array1<f64>>, output: Array1<f64>) -> Self {
        let (predicted, confidence) = argmax(output.view());
        ActivationTrace {
            activations,
            output,
            predicted,
            confidence,
        }
    }

    /// Input vector of the 1-based layer `index`.
    pub fn layer_input(&self, index: usize) -> Option<&Array1<f64>> {
        index.checked_sub(1).and_then(|i| self.activations.get(i))
    }
}

/// Index and value of the maximum; lowest index wins ties.
pub fn argmax(v: ArrayView1<f64>) -> (usize, f64) {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &val) in v.iter().enumerate() {
        if val > best_val {
            best = i;
            best_val = val;
        }
    }
    (best, best_val)
}
