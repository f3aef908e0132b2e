//! Dense feed-forward layers with analytic backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::Validation(format!(
                "layer dims must be >= 1, got {input_dim}->{output_dim}"
            )));
        }
        Ok(Self {
            input_dim,
            output_dim,
            activation,
        })
    }

    /// Relu hidden layers followed by a linear output layer, e.g. `[8, 16, 8]`
    /// gives `8->16 (relu), 16->8 (linear)`.
    pub fn stack(dims: &[usize]) -> Result<Vec<Self>> {
        if dims.len() < 2 {
            return Err(Error::Validation(format!(
                "a layer stack needs at least two dims, got {dims:?}"
            )));
        }
        let last = dims.len() - 2;
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Linear
                } else {
                    Activation::Relu
                };
                LayerSpec::new(w[0], w[1], act)
            })
            .collect()
    }
}

/// Weights are stored `input_dim x output_dim` so a batch forward is `X·W + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: DenseMatrix,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub layers: Vec<Layer>,
}

impl ParameterSet {
    /// He-uniform for relu layers, Xavier-uniform for linear layers, zero biases.
    pub fn init<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        check_chain(specs)?;
        let layers = specs
            .iter()
            .map(|&spec| {
                let (fan_in, fan_out) = (spec.input_dim as f64, spec.output_dim as f64);
                let limit = match spec.activation {
                    Activation::Relu => (6.0 / fan_in).sqrt(),
                    Activation::Linear => (6.0 / (fan_in + fan_out)).sqrt(),
                };
                let data = (0..spec.input_dim * spec.output_dim)
                    .map(|_| rng.random_range(-limit..limit))
                    .collect();
                Layer {
                    spec,
                    weights: DenseMatrix::from_vec(spec.input_dim, spec.output_dim, data)
                        .expect("shape built from spec"),
                    biases: vec![0.0; spec.output_dim],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    /// A zero-valued set with the same shapes as `specs`.
    pub fn zeros(specs: &[LayerSpec]) -> Result<Self> {
        check_chain(specs)?;
        Ok(Self {
            layers: specs
                .iter()
                .map(|&spec| Layer {
                    spec,
                    weights: DenseMatrix::zeros(spec.input_dim, spec.output_dim),
                    biases: vec![0.0; spec.output_dim],
                })
                .collect(),
        })
    }

    /// Builds a set from explicit weights and biases, checking every shape.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        check_chain(&specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.weights.shape() != (l.spec.input_dim, l.spec.output_dim) {
                return Err(Error::dim(
                    format!("layer {i} weights"),
                    format!("{}x{}", l.spec.input_dim, l.spec.output_dim),
                    format!("{}x{}", l.weights.rows(), l.weights.cols()),
                ));
            }
            if l.biases.len() != l.spec.output_dim {
                return Err(Error::dim(
                    format!("layer {i} biases"),
                    l.spec.output_dim,
                    l.biases.len(),
                ));
            }
        }
        Ok(Self { layers })
    }

    pub fn specs(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].spec.output_dim
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.biases.len())
            .sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(&self.specs()).expect("specs of a valid set")
    }

    /// True when both sets have identical layer specs and buffer shapes.
    pub fn same_shape(&self, other: &ParameterSet) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.spec == b.spec && a.weights.shape() == b.weights.shape() && a.biases.len() == b.biases.len()
            })
    }

    /// Visits every scalar as `(layer index, value)`, weights before biases.
    pub fn for_each_param(&self, mut f: impl FnMut(usize, f64)) {
        for (i, l) in self.layers.iter().enumerate() {
            l.weights.as_slice().iter().for_each(|&v| f(i, v));
            l.biases.iter().for_each(|&v| f(i, v));
        }
    }

    pub fn param_mut(&mut self, flat_index: usize) -> &mut f64 {
        let mut idx = flat_index;
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            if idx < nw {
                return &mut l.weights.as_mut_slice()[idx];
            }
            idx -= nw;
            if idx < l.biases.len() {
                return &mut l.biases[idx];
            }
            idx -= l.biases.len();
        }
        panic!("parameter index {flat_index} out of range");
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.for_each_param(|_, v| out.push(v));
        out
    }
}

fn check_chain(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Validation("network has no layers".into()));
    }
    for (i, s) in specs.iter().enumerate() {
        if s.input_dim == 0 || s.output_dim == 0 {
            return Err(Error::Validation(format!("layer {i} has a zero dim")));
        }
    }
    for (i, w) in specs.windows(2).enumerate() {
        if w[0].output_dim != w[1].input_dim {
            return Err(Error::dim(
                format!("layer {} input", i + 1),
                w[0].output_dim,
                w[1].input_dim,
            ));
        }
    }
    Ok(())
}

/// Values kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Input to each layer (the first entry is the network input).
    pub inputs: Vec<DenseMatrix>,
    /// Pre-activation of each layer.
    pub pre_activations: Vec<DenseMatrix>,
}

impl ForwardTrace {
    pub fn depth(&self) -> usize {
        self.pre_activations.len()
    }
}

pub fn forward(params: &ParameterSet, input: &DenseMatrix) -> Result<(DenseMatrix, ForwardTrace)> {
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre_activations = Vec::with_capacity(params.layers.len());
    let mut current = input.clone();
    for (i, layer) in params.layers.iter().enumerate() {
        if current.cols() != layer.spec.input_dim {
            return Err(Error::dim(
                format!("forward input to layer {i}"),
                layer.spec.input_dim,
                current.cols(),
            ));
        }
        let mut z = current.matmul(&layer.weights)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&layer.biases) {
                *v += b;
            }
        }
        let act = layer.spec.activation;
        let a = z.map(|v| act.apply(v));
        inputs.push(current);
        pre_activations.push(z);
        current = a;
    }
    Ok((
        current,
        ForwardTrace {
            inputs,
            pre_activations,
        },
    ))
}

/// Output only, without retaining a trace.
pub fn predict(params: &ParameterSet, input: &DenseMatrix) -> Result<DenseMatrix> {
    forward(params, input).map(|(out, _)| out)
}

/// Returns parameter gradients shaped like `params`, and the gradient with
/// respect to the network input.
pub fn backward(
    params: &ParameterSet,
    trace: &ForwardTrace,
    output_grad: &DenseMatrix,
) -> Result<(ParameterSet, DenseMatrix)> {
    if trace.depth() != params.layers.len() {
        return Err(Error::dim("backward trace depth", params.layers.len(), trace.depth()));
    }
    let last = trace.pre_activations.last().expect("non-empty network");
    if output_grad.shape() != last.shape() {
        return Err(Error::dim(
            "backward output_grad",
            format!("{:?}", last.shape()),
            format!("{:?}", output_grad.shape()),
        ));
    }
    let mut grads = params.zeros_like();
    let mut upstream = output_grad.clone();
    for i in (0..params.layers.len()).rev() {
        let layer = &params.layers[i];
        let z = &trace.pre_activations[i];
        let act = layer.spec.activation;
        let mut dz = upstream;
        for (g, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
            *g *= act.derivative(zv);
        }
        grads.layers[i].weights = trace.inputs[i].transpose_matmul(&dz)?;
        grads.layers[i].biases = dz.column_sums();
        upstream = dz.matmul_transpose(&layer.weights)?;
    }
    Ok((grads, upstream))
}
