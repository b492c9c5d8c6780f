use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NumericsError, Tensor};

/// Declarative description of one layer.
///
/// Convolutions follow the cross-correlation convention (kernels are not
/// flipped). Tensors flowing through image layers are `[channels, rows, cols]`;
/// `Affine` flattens whatever it receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv {
        in_channels: usize,
        filters: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    MaxPool {
        size: usize,
        stride: usize,
    },
    Rectifier,
    Affine {
        inputs: usize,
        outputs: usize,
    },
    Softmax,
}

impl LayerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            LayerSpec::Conv { .. } => "conv",
            LayerSpec::MaxPool { .. } => "maxpool",
            LayerSpec::Rectifier => "rectifier",
            LayerSpec::Affine { .. } => "affine",
            LayerSpec::Softmax => "softmax",
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::Affine { .. })
    }

    /// Output shape for a given input shape, or a description of why the
    /// input does not fit.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match *self {
            LayerSpec::Conv {
                in_channels,
                filters,
                kernel,
                stride,
                padding,
            } => {
                let [c, h, w] = image_dims(input)?;
                if c != in_channels {
                    return Err(format!("expected {in_channels} channels, got {c}"));
                }
                if kernel == 0 || stride == 0 || filters == 0 {
                    return Err("kernel, stride and filters must be positive".into());
                }
                if h + 2 * padding < kernel || w + 2 * padding < kernel {
                    return Err(format!("kernel {kernel} larger than padded input {h}x{w}"));
                }
                Ok(vec![
                    filters,
                    (h + 2 * padding - kernel) / stride + 1,
                    (w + 2 * padding - kernel) / stride + 1,
                ])
            }
            LayerSpec::MaxPool { size, stride } => {
                let [c, h, w] = image_dims(input)?;
                if size == 0 || stride == 0 {
                    return Err("pool size and stride must be positive".into());
                }
                if h < size || w < size {
                    return Err(format!("pool {size} larger than input {h}x{w}"));
                }
                Ok(vec![c, (h - size) / stride + 1, (w - size) / stride + 1])
            }
            LayerSpec::Rectifier | LayerSpec::Softmax => Ok(input.to_vec()),
            LayerSpec::Affine { inputs, outputs } => {
                let n: usize = input.iter().product();
                if n != inputs {
                    return Err(format!("expected {inputs} inputs, got {n} ({input:?})"));
                }
                Ok(vec![outputs])
            }
        }
    }

    /// Scaled-uniform weights in ±sqrt(6 / (fan_in + fan_out)) and zero biases.
    pub fn init_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Params> {
        let (wshape, fan_in, fan_out, nbias) = match *self {
            LayerSpec::Conv {
                in_channels,
                filters,
                kernel,
                ..
            } => (
                vec![filters, in_channels, kernel, kernel],
                in_channels * kernel * kernel,
                filters * kernel * kernel,
                filters,
            ),
            LayerSpec::Affine { inputs, outputs } => (vec![outputs, inputs], inputs, outputs, outputs),
            _ => return None,
        };
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut weights = Tensor::zeros(wshape);
        for v in weights.values_mut() {
            *v = rng.gen_range(-limit..=limit);
        }
        Some(Params {
            weights,
            bias: Tensor::zeros(vec![nbias]),
        })
    }
}

fn image_dims(input: &[usize]) -> Result<[usize; 3], String> {
    match input {
        &[c, h, w] => Ok([c, h, w]),
        other => Err(format!("expected [channels, rows, cols], got {other:?}")),
    }
}

/// Trainable parameters of a conv or affine layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Params {
    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Tensor::zeros(self.weights.shape().to_vec()),
            bias: Tensor::zeros(self.bias.shape().to_vec()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.is_finite()
    }
}

pub(crate) fn forward(
    spec: &LayerSpec,
    params: Option<&Params>,
    input: &Tensor,
) -> Result<Tensor, NumericsError> {
    let out_shape = spec
        .output_shape(input.shape())
        .map_err(|m| NumericsError::Shape(format!("{}: {m}", spec.name())))?;
    let mut out = Tensor::zeros(out_shape.clone());
    match *spec {
        LayerSpec::Conv {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
        } => {
            let p = params.ok_or_else(|| missing(spec))?;
            let (h, w) = (input.shape()[1], input.shape()[2]);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let x = input.values();
            let wt = p.weights.values();
            let y = out.values_mut();
            for o in 0..filters {
                let plane = &mut y[o * oh * ow..(o + 1) * oh * ow];
                plane.fill(p.bias.values()[o]);
                for c in 0..in_channels {
                    let xin = &x[c * h * w..(c + 1) * h * w];
                    for ky in 0..kernel {
                        for kx in 0..kernel {
                            let k = wt[((o * in_channels + c) * kernel + ky) * kernel + kx];
                            let (ox0, ox1) = valid_range(kx, padding, stride, w, ow);
                            for oy in 0..oh {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let row = &xin[iy as usize * w..(iy as usize + 1) * w];
                                let orow = &mut plane[oy * ow..(oy + 1) * ow];
                                if stride == 1 {
                                    let ix0 = ox0 + kx - padding;
                                    let src = &row[ix0..ix0 + (ox1 - ox0)];
                                    for (o, &v) in orow[ox0..ox1].iter_mut().zip(src) {
                                        *o += k * v;
                                    }
                                    continue;
                                }
                                for ox in ox0..ox1 {
                                    let ix = ox * stride + kx - padding;
                                    orow[ox] += k * row[ix];
                                }
                            }
                        }
                    }
                }
            }
        }
        LayerSpec::MaxPool { size, stride } => {
            let [c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2]];
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let x = input.values();
            let y = out.values_mut();
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let idx = pool_argmax(x, ch, h, w, oy * stride, ox * stride, size);
                        y[(ch * oh + oy) * ow + ox] = x[idx];
                    }
                }
            }
        }
        LayerSpec::Rectifier => {
            for (o, &i) in out.values_mut().iter_mut().zip(input.values()) {
                *o = i.max(0.0);
            }
        }
        LayerSpec::Affine { inputs, outputs } => {
            let p = params.ok_or_else(|| missing(spec))?;
            let x = input.values();
            let wt = p.weights.values();
            for (j, o) in out.values_mut().iter_mut().enumerate().take(outputs) {
                let row = &wt[j * inputs..(j + 1) * inputs];
                *o = p.bias.values()[j] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        LayerSpec::Softmax => {
            let x = input.values();
            let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let y = out.values_mut();
            let mut z = 0.0;
            for (o, &i) in y.iter_mut().zip(x) {
                *o = (i - m).exp();
                z += *o;
            }
            y.iter_mut().for_each(|o| *o /= z);
        }
    }
    if !out.is_finite() {
        return Err(NumericsError::NonFinite(format!(
            "{} forward output",
            spec.name()
        )));
    }
    Ok(out)
}

/// Returns (parameter gradients, input gradient).
pub(crate) fn backward(
    spec: &LayerSpec,
    params: Option<&Params>,
    input: &Tensor,
    output: &Tensor,
    grad_out: &Tensor,
) -> Result<(Option<Params>, Tensor), NumericsError> {
    let expected = spec
        .output_shape(input.shape())
        .map_err(|m| NumericsError::Consistency(format!("{}: {m}", spec.name())))?;
    if expected != output.shape() || expected != grad_out.shape() {
        return Err(NumericsError::Consistency(format!(
            "{}: activation {:?} / gradient {:?} do not match declared output {expected:?}",
            spec.name(),
            output.shape(),
            grad_out.shape()
        )));
    }
    let mut grad_in = Tensor::zeros(input.shape().to_vec());
    let g = grad_out.values();
    let param_grads = match *spec {
        LayerSpec::Conv {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
        } => {
            let p = params.ok_or_else(|| missing(spec))?;
            let mut pg = p.zeros_like();
            let (h, w) = (input.shape()[1], input.shape()[2]);
            let (oh, ow) = (expected[1], expected[2]);
            let x = input.values();
            let wt = p.weights.values();
            let dx = grad_in.values_mut();
            {
                let db = pg.bias.values_mut();
                for o in 0..filters {
                    db[o] = g[o * oh * ow..(o + 1) * oh * ow].iter().sum();
                }
            }
            let dw = pg.weights.values_mut();
            for o in 0..filters {
                let gplane = &g[o * oh * ow..(o + 1) * oh * ow];
                for c in 0..in_channels {
                    let xin = &x[c * h * w..(c + 1) * h * w];
                    let dxin = &mut dx[c * h * w..(c + 1) * h * w];
                    for ky in 0..kernel {
                        for kx in 0..kernel {
                            let widx = ((o * in_channels + c) * kernel + ky) * kernel + kx;
                            let k = wt[widx];
                            let (ox0, ox1) = valid_range(kx, padding, stride, w, ow);
                            let mut acc = 0.0;
                            for oy in 0..oh {
                                let iy = (oy * stride + ky) as isize - padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                let base = iy as usize * w;
                                let grow = &gplane[oy * ow..(oy + 1) * ow];
                                if stride == 1 {
                                    let ix0 = base + ox0 + kx - padding;
                                    let n = ox1 - ox0;
                                    let gs = &grow[ox0..ox1];
                                    acc += gs.iter().zip(&xin[ix0..ix0 + n]).map(|(a, b)| a * b).sum::<f64>();
                                    for (d, &gv) in dxin[ix0..ix0 + n].iter_mut().zip(gs) {
                                        *d += k * gv;
                                    }
                                    continue;
                                }
                                for ox in ox0..ox1 {
                                    let ix = base + ox * stride + kx - padding;
                                    acc += grow[ox] * xin[ix];
                                    dxin[ix] += k * grow[ox];
                                }
                            }
                            dw[widx] += acc;
                        }
                    }
                }
            }
            Some(pg)
        }
        LayerSpec::MaxPool { size, stride } => {
            let [c, h, w] = [input.shape()[0], input.shape()[1], input.shape()[2]];
            let (oh, ow) = (expected[1], expected[2]);
            let x = input.values();
            let dx = grad_in.values_mut();
            for ch in 0..c {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let idx = pool_argmax(x, ch, h, w, oy * stride, ox * stride, size);
                        dx[idx] += g[(ch * oh + oy) * ow + ox];
                    }
                }
            }
            None
        }
        LayerSpec::Rectifier => {
            for ((d, &x), &gv) in grad_in.values_mut().iter_mut().zip(input.values()).zip(g) {
                *d = if x > 0.0 { gv } else { 0.0 };
            }
            None
        }
        LayerSpec::Affine { inputs, outputs } => {
            let p = params.ok_or_else(|| missing(spec))?;
            let mut pg = p.zeros_like();
            let x = input.values();
            let wt = p.weights.values();
            pg.bias.values_mut().copy_from_slice(g);
            let dw = pg.weights.values_mut();
            let dx = grad_in.values_mut();
            for j in 0..outputs {
                let gj = g[j];
                if gj == 0.0 {
                    continue;
                }
                let row = &wt[j * inputs..(j + 1) * inputs];
                let drow = &mut dw[j * inputs..(j + 1) * inputs];
                for i in 0..inputs {
                    drow[i] = gj * x[i];
                    dx[i] += gj * row[i];
                }
            }
            Some(pg)
        }
        LayerSpec::Softmax => {
            let y = output.values();
            let dot: f64 = y.iter().zip(g).map(|(a, b)| a * b).sum();
            for ((d, &yi), &gi) in grad_in.values_mut().iter_mut().zip(y).zip(g) {
                *d = yi * (gi - dot);
            }
            None
        }
    };
    if !grad_in.is_finite() || param_grads.as_ref().is_some_and(|p| !p.is_finite()) {
        return Err(NumericsError::NonFinite(format!("{} backward", spec.name())));
    }
    Ok((param_grads, grad_in))
}

fn missing(spec: &LayerSpec) -> NumericsError {
    NumericsError::Consistency(format!("{} layer has no parameters", spec.name()))
}

/// Output columns `[lo, hi)` whose input column `ox*stride + kx - padding`
/// lies inside `0..width`.
fn valid_range(kx: usize, padding: usize, stride: usize, width: usize, ow: usize) -> (usize, usize) {
    let lo = if kx >= padding {
        0
    } else {
        (padding - kx).div_ceil(stride)
    };
    let hi = if width + padding > kx {
        ((width + padding - kx - 1) / stride + 1).min(ow)
    } else {
        0
    };
    (lo.min(hi), hi)
}

/// Flat index of the window maximum; ties go to the first row-major index.
fn pool_argmax(x: &[f64], ch: usize, h: usize, w: usize, y0: usize, x0: usize, size: usize) -> usize {
    let mut best = (ch * h + y0) * w + x0;
    for dy in 0..size {
        for dx in 0..size {
            let idx = (ch * h + y0 + dy) * w + x0 + dx;
            if x[idx] > x[best] {
                best = idx;
            }
        }
    }
    best
}
