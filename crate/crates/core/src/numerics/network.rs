use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::{self, LayerSpec, Params};
use super::{NumericsError, Tensor};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub spec: LayerSpec,
    pub params: Option<Params>,
}

/// A feed-forward stack of layers with a fixed input shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
}

/// Input plus one output per layer, as produced by [`Network::forward`].
#[derive(Clone, Debug)]
pub struct Activations {
    pub input: Tensor,
    pub outputs: Vec<Tensor>,
}

impl Activations {
    pub fn output(&self) -> &Tensor {
        self.outputs.last().unwrap_or(&self.input)
    }
}

/// Per-layer parameter gradients; `None` for parameter-free layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Option<Params>>,
}

impl Gradients {
    pub fn zeros_for(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| l.params.as_ref().map(Params::zeros_like))
                .collect(),
        }
    }

    pub fn accumulate(&mut self, other: &Gradients, scale: f64) -> Result<(), NumericsError> {
        if self.layers.len() != other.layers.len() {
            return Err(NumericsError::Consistency("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    a.weights.add_scaled(&b.weights, scale)?;
                    a.bias.add_scaled(&b.bias, scale)?;
                }
                (None, None) => {}
                _ => return Err(NumericsError::Consistency("gradient layouts differ".into())),
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for p in self.layers.iter_mut().flatten() {
            p.weights.scale(factor);
            p.bias.scale(factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().flatten().all(Params::is_finite)
    }

    /// Flat view in declared order: per layer, weights then bias.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in self.layers.iter().flatten() {
            out.extend_from_slice(p.weights.values());
            out.extend_from_slice(p.bias.values());
        }
        out
    }
}

impl Network {
    /// Builds a network, checking that every layer accepts its predecessor's
    /// output, and initializes parameters from `rng`.
    pub fn new<R: Rng + ?Sized>(
        input_shape: Vec<usize>,
        specs: &[LayerSpec],
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        Self::check_shapes(&input_shape, specs)?;
        let layers = specs
            .iter()
            .map(|spec| Layer {
                spec: *spec,
                params: spec.init_params(rng),
            })
            .collect();
        Ok(Self { input_shape, layers })
    }

    pub fn from_layers(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self, NumericsError> {
        let specs: Vec<LayerSpec> = layers.iter().map(|l| l.spec).collect();
        Self::check_shapes(&input_shape, &specs)?;
        for (i, l) in layers.iter().enumerate() {
            if l.spec.has_params() != l.params.is_some() {
                return Err(NumericsError::Config {
                    layer: i,
                    message: "parameter presence does not match layer kind".into(),
                });
            }
        }
        Ok(Self { input_shape, layers })
    }

    /// Returns the shape after each layer.
    pub fn check_shapes(input: &[usize], specs: &[LayerSpec]) -> Result<Vec<Vec<usize>>, NumericsError> {
        let mut shape = input.to_vec();
        let mut shapes = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            shape = spec
                .output_shape(&shape)
                .map_err(|message| NumericsError::Config {
                    layer: i,
                    message: format!("{}: {message}", spec.name()),
                })?;
            shapes.push(shape.clone());
        }
        Ok(shapes)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| l.params.as_ref())
            .map(|p| p.weights.len() + p.bias.len())
            .sum()
    }

    pub fn forward(&self, input: &Tensor) -> Result<Activations, NumericsError> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(NumericsError::Config {
                layer: 0,
                message: format!(
                    "input shape {:?} does not match declared {:?}",
                    input.shape(),
                    self.input_shape
                ),
            });
        }
        let mut outputs: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let x = if i == 0 { input } else { &outputs[i - 1] };
            let y = layer::forward(&l.spec, l.params.as_ref(), x).map_err(|e| match e {
                NumericsError::Shape(message) => NumericsError::Config { layer: i, message },
                other => other,
            })?;
            outputs.push(y);
        }
        Ok(Activations {
            input: input.clone(),
            outputs,
        })
    }

    /// Network output only.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor, NumericsError> {
        let mut acts = self.forward(input)?;
        Ok(acts.outputs.pop().unwrap_or(acts.input))
    }

    pub fn backward(
        &self,
        acts: &Activations,
        output_grad: &Tensor,
    ) -> Result<(Gradients, Tensor), NumericsError> {
        if acts.outputs.len() != self.layers.len() {
            return Err(NumericsError::Consistency(format!(
                "{} activations for {} layers",
                acts.outputs.len(),
                self.layers.len()
            )));
        }
        let mut grads = vec![None; self.layers.len()];
        let mut g = output_grad.clone();
        for i in (0..self.layers.len()).rev() {
            let l = &self.layers[i];
            let x = if i == 0 { &acts.input } else { &acts.outputs[i - 1] };
            let (pg, gin) = layer::backward(&l.spec, l.params.as_ref(), x, &acts.outputs[i], &g)?;
            grads[i] = pg;
            g = gin;
        }
        Ok((Gradients { layers: grads }, g))
    }

    /// Plain gradient descent: `p <- p - learning_rate * g`.
    pub fn sgd_step(&mut self, grads: &Gradients, learning_rate: f64) -> Result<(), NumericsError> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(NumericsError::Config {
                layer: 0,
                message: format!("learning rate must be positive, got {learning_rate}"),
            });
        }
        if !grads.is_finite() {
            return Err(NumericsError::NonFinite("gradient passed to sgd_step".into()));
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NumericsError::Consistency("gradient layer counts differ".into()));
        }
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            match (l.params.as_mut(), g) {
                (Some(p), Some(g)) => {
                    p.weights.add_scaled(&g.weights, -learning_rate)?;
                    p.bias.add_scaled(&g.bias, -learning_rate)?;
                }
                (None, None) => {}
                _ => return Err(NumericsError::Consistency("gradient layout differs".into())),
            }
        }
        Ok(())
    }

    /// Flat parameter vector in declared order (weights then bias per layer).
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for p in self.layers.iter().filter_map(|l| l.params.as_ref()) {
            out.extend_from_slice(p.weights.values());
            out.extend_from_slice(p.bias.values());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<(), NumericsError> {
        if flat.len() != self.param_count() {
            return Err(NumericsError::Consistency(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut off = 0;
        for l in &mut self.layers {
            if let Some(p) = l.params.as_mut() {
                for t in [&mut p.weights, &mut p.bias] {
                    let n = t.len();
                    t.values_mut().copy_from_slice(&flat[off..off + n]);
                    off += n;
                }
            }
        }
        Ok(())
    }
}
