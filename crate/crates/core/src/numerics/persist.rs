//! Flat binary model format.
//!
//! Layout (all integers little-endian `u32`, all values little-endian `f64`):
//!
//! ```text
//! magic  b"NOUGHTS\0"
//! version
//! tag length, tag bytes (utf-8 model kind, e.g. "perception")
//! input rank, input dims...
//! layer count, then per layer: kind code, five kind-specific integers
//! parameter tensors in declared order: per parameterized layer, weights then bias
//! ```

use std::io::{Read, Write};

use super::layer::{LayerSpec, Params};
use super::network::{Layer, Network};
use super::{NumericsError, Tensor};

pub const MAGIC: &[u8; 8] = b"NOUGHTS\0";
pub const FORMAT_VERSION: u32 = 1;

fn encode_spec(spec: &LayerSpec) -> (u32, [u32; 5]) {
    match *spec {
        LayerSpec::Conv {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
        } => (
            1,
            [in_channels, filters, kernel, stride, padding].map(|v| v as u32),
        ),
        LayerSpec::MaxPool { size, stride } => (2, [size as u32, stride as u32, 0, 0, 0]),
        LayerSpec::Rectifier => (3, [0; 5]),
        LayerSpec::Affine { inputs, outputs } => (4, [inputs as u32, outputs as u32, 0, 0, 0]),
        LayerSpec::Softmax => (5, [0; 5]),
    }
}

fn decode_spec(code: u32, a: [u32; 5]) -> Result<LayerSpec, NumericsError> {
    let a = a.map(|v| v as usize);
    Ok(match code {
        1 => LayerSpec::Conv {
            in_channels: a[0],
            filters: a[1],
            kernel: a[2],
            stride: a[3],
            padding: a[4],
        },
        2 => LayerSpec::MaxPool {
            size: a[0],
            stride: a[1],
        },
        3 => LayerSpec::Rectifier,
        4 => LayerSpec::Affine {
            inputs: a[0],
            outputs: a[1],
        },
        5 => LayerSpec::Softmax,
        other => return Err(NumericsError::Format(format!("unknown layer kind code {other}"))),
    })
}

pub fn write_network<W: Write>(w: &mut W, tag: &str, net: &Network) -> Result<(), NumericsError> {
    w.write_all(MAGIC)?;
    put_u32(w, FORMAT_VERSION)?;
    put_u32(w, tag.len() as u32)?;
    w.write_all(tag.as_bytes())?;
    put_u32(w, net.input_shape().len() as u32)?;
    for &d in net.input_shape() {
        put_u32(w, d as u32)?;
    }
    put_u32(w, net.layers().len() as u32)?;
    for l in net.layers() {
        let (code, args) = encode_spec(&l.spec);
        put_u32(w, code)?;
        for a in args {
            put_u32(w, a)?;
        }
    }
    for v in net.flat_params() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a network and returns it with its model tag.
pub fn read_network<R: Read>(r: &mut R) -> Result<(String, Network), NumericsError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NumericsError::Format("bad magic".into()));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(NumericsError::Format(format!(
            "unsupported format version {version}"
        )));
    }
    let tag_len = get_u32(r)? as usize;
    if tag_len > 256 {
        return Err(NumericsError::Format("tag too long".into()));
    }
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag)?;
    let tag = String::from_utf8(tag).map_err(|_| NumericsError::Format("tag not utf-8".into()))?;
    let rank = get_u32(r)? as usize;
    if rank == 0 || rank > 8 {
        return Err(NumericsError::Format(format!("implausible input rank {rank}")));
    }
    let input_shape = (0..rank)
        .map(|_| get_u32(r).map(|v| v as usize))
        .collect::<Result<Vec<_>, _>>()?;
    let n_layers = get_u32(r)? as usize;
    if n_layers > 1024 {
        return Err(NumericsError::Format("implausible layer count".into()));
    }
    let mut specs = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let code = get_u32(r)?;
        let mut args = [0u32; 5];
        for a in &mut args {
            *a = get_u32(r)?;
        }
        specs.push(decode_spec(code, args)?);
    }
    Network::check_shapes(&input_shape, &specs)?;
    let mut layers = Vec::with_capacity(n_layers);
    for spec in specs {
        let params = match spec {
            LayerSpec::Conv {
                in_channels,
                filters,
                kernel,
                ..
            } => Some(Params {
                weights: read_tensor(r, vec![filters, in_channels, kernel, kernel])?,
                bias: read_tensor(r, vec![filters])?,
            }),
            LayerSpec::Affine { inputs, outputs } => Some(Params {
                weights: read_tensor(r, vec![outputs, inputs])?,
                bias: read_tensor(r, vec![outputs])?,
            }),
            _ => None,
        };
        layers.push(Layer { spec, params });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(NumericsError::Format("trailing bytes after parameters".into()));
    }
    Ok((tag, Network::from_layers(input_shape, layers)?))
}

fn read_tensor<R: Read>(r: &mut R, shape: Vec<usize>) -> Result<Tensor, NumericsError> {
    let n: usize = shape.iter().product();
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        let v = f64::from_le_bytes(buf);
        if !v.is_finite() {
            return Err(NumericsError::Format("non-finite parameter".into()));
        }
        values.push(v);
    }
    Tensor::new(shape, values)
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32, NumericsError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}
