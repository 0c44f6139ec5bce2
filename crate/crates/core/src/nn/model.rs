use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => super::sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    pub(crate) fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

/// Layer shapes and activations, validated before any weights exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl Architecture {
    /// `sizes = [input, hidden..., 1]`; hidden layers use ReLU, the head sigmoid.
    pub fn mlp(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Config(
                "architecture needs at least an input and an output size".into(),
            ));
        }
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec {
                inputs: w[0],
                outputs: w[1],
                activation: if i == last {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                },
            })
            .collect();
        let arch = Architecture {
            input_dim: sizes[0],
            layers,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// Input dimension plus ReLU hidden widths, with the sigmoid head appended.
    pub fn with_hidden(input_dim: usize, hidden: &[usize]) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self::mlp(&sizes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        let Some(last) = self.layers.last() else {
            return Err(Error::Config("architecture has no layers".into()));
        };
        let mut expected = self.input_dim;
        for (i, l) in self.layers.iter().enumerate() {
            if l.inputs != expected {
                return Err(Error::Config(format!(
                    "layer {i} expects {} inputs but receives {expected}",
                    l.inputs
                )));
            }
            if l.outputs == 0 {
                return Err(Error::Config(format!("layer {i} has zero outputs")));
            }
            expected = l.outputs;
        }
        if last.outputs != 1 || last.activation != Activation::Sigmoid {
            return Err(Error::Config("final layer must be a single sigmoid unit".into()));
        }
        Ok(())
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1].iter().map(|l| l.outputs).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major, `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(spec: LayerSpec) -> Self {
        Layer {
            inputs: spec.inputs,
            outputs: spec.outputs,
            activation: spec.activation,
            weights: vec![0.0; spec.inputs * spec.outputs],
            bias: vec![0.0; spec.outputs],
        }
    }

    pub fn spec(&self) -> LayerSpec {
        LayerSpec {
            inputs: self.inputs,
            outputs: self.outputs,
            activation: self.activation,
        }
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }

    /// Pre-activations `W·x + b` written into `z`.
    pub(crate) fn affine(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| row.iter().zip(x).fold(*b, |acc, (w, xi)| acc + w * xi)),
        );
    }
}

/// Dense feed-forward binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    input_dim: usize,
    layers: Vec<Layer>,
}

/// Per-layer pre-activations and outputs of one forward pass.
pub(crate) struct Trace {
    pub input: Vec<f64>,
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let input_dim = layers.first().map(|l| l.inputs).unwrap_or(0);
        let arch = Architecture {
            input_dim,
            layers: layers.iter().map(Layer::spec).collect(),
        };
        arch.validate()?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Config(format!("layer {i} parameter shape mismatch")));
            }
            if !l.weights.iter().chain(&l.bias).all(|v| v.is_finite()) {
                return Err(Error::Config(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(MlpModel { input_dim, layers })
    }

    /// All-zero parameters; predicts 0.5 everywhere.
    pub fn zeros(arch: &Architecture) -> Result<Self> {
        arch.validate()?;
        Ok(MlpModel {
            input_dim: arch.input_dim,
            layers: arch.layers.iter().copied().map(Layer::zeros).collect(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            input_dim: self.input_dim,
            layers: self.layers.iter().map(Layer::spec).collect(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Input(format!(
                "expected {} features, got {}",
                self.input_dim,
                x.len()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Input("input contains non-finite values".into()));
        }
        Ok(())
    }

    /// Returns `(prob, logit)` for class 1.
    pub fn forward(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_input(x)?;
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let mut last_z = 0.0;
        for layer in &self.layers {
            layer.affine(&a, &mut z);
            a.clear();
            a.extend(z.iter().map(|&v| layer.activation.apply(v)));
            last_z = z[0];
        }
        (a[0], last_z)
    }

    pub fn prob(&self, x: &[f64]) -> Result<f64> {
        self.forward(x).map(|(p, _)| p)
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        self.forward(x).map(|(p, _)| u8::from(p >= 0.5))
    }

    pub(crate) fn trace(&self, x: &[f64]) -> Trace {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let input = post.last().map(Vec::as_slice).unwrap_or(x);
            let mut z = Vec::with_capacity(layer.outputs);
            layer.affine(input, &mut z);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Trace {
            input: x.to_vec(),
            pre,
            post,
        }
    }

    /// Same weights, labels flipped: `logit ↦ −logit`.
    pub fn negated(&self) -> MlpModel {
        let mut m = self.clone();
        if let Some(last) = m.layers.last_mut() {
            last.weights.iter_mut().for_each(|w| *w = -*w);
            last.bias.iter_mut().for_each(|b| *b = -*b);
        }
        m
    }
}

/// Uniform(±1/√fan_in) initialization from a seeded generator.
pub fn mlp_init(arch: &Architecture, seed: u64) -> Result<MlpModel> {
    arch.validate()?;
    let mut rng = rng::seeded(seed);
    let layers = arch
        .layers
        .iter()
        .map(|&spec| {
            let bound = 1.0 / (spec.inputs as f64).sqrt();
            let mut layer = Layer::zeros(spec);
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = rng.gen_range(-bound..bound);
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        input_dim: arch.input_dim,
        layers,
    })
}
