//! On-disk model container.
//!
//! A model directory holds `model.json` (the layer manifest) plus one
//! tensor file per weight stack. Tensor files are little-endian binary:
//! magic `RDTN`, a version byte, a rank byte, `rank` u32 dims, then the
//! payload as f32 values in row-major channel-innermost order. Input
//! feature maps use the same container.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{Activation, Layer, LayerKind, LayerSpec, Network};
use crate::tensor::Tensor;

pub const TENSOR_MAGIC: &[u8; 4] = b"RDTN";
pub const TENSOR_VERSION: u8 = 1;
pub const MANIFEST_NAME: &str = "model.json";

pub fn write_tensor(path: &Path, tensor: &Tensor) -> Result<()> {
    let mut buf = Vec::with_capacity(10 + tensor.len() * 4);
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.push(TENSOR_VERSION);
    buf.push(tensor.dims().len() as u8);
    for &d in tensor.dims() {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for &v in tensor.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let name = path.display();
    if bytes.len() < 6 || &bytes[0..4] != TENSOR_MAGIC {
        return Err(Error::Model(format!("{name}: missing RDTN magic")));
    }
    if bytes[4] != TENSOR_VERSION {
        return Err(Error::Model(format!(
            "{name}: unsupported container version {}",
            bytes[4]
        )));
    }
    let rank = bytes[5] as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::Model(format!("{name}: rank {rank} out of range")));
    }
    let header = 6 + rank * 4;
    if bytes.len() < header {
        return Err(Error::Model(format!("{name}: truncated dim table")));
    }
    let mut dims = Vec::with_capacity(rank);
    for i in 0..rank {
        let off = 6 + i * 4;
        dims.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
    }
    let count: usize = dims.iter().map(|&d| d as usize).product();
    if bytes.len() != header + count * 4 {
        return Err(Error::Model(format!(
            "{name}: payload is {} bytes, dims {dims:?} need {}",
            bytes.len() - header,
            count * 4
        )));
    }
    let data: Vec<f32> = bytes[header..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(dims, data)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestLayer {
    pub kind: LayerKind,
    #[serde(default = "one")]
    pub r: usize,
    #[serde(default = "one")]
    pub s: usize,
    #[serde(default)]
    pub c: usize,
    #[serde(default)]
    pub k: usize,
    #[serde(default = "one")]
    pub stride: usize,
    #[serde(default)]
    pub padding: usize,
    #[serde(default = "default_activation")]
    pub activation: Activation,
    /// Tensor file name relative to the model directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub add_from: Option<usize>,
}

fn one() -> usize {
    1
}

fn default_activation() -> Activation {
    Activation::None
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub version: u32,
    pub input_dims: [u32; 3],
    pub layers: Vec<ManifestLayer>,
}

pub fn load_model(dir: &Path) -> Result<Network> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| Error::Model(format!("{}: {e}", manifest_path.display())))?;
    let manifest: ModelManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Model(format!("{}: {e}", manifest_path.display())))?;
    if manifest.version != 1 {
        return Err(Error::Model(format!(
            "unsupported manifest version {}",
            manifest.version
        )));
    }
    let mut layers = Vec::with_capacity(manifest.layers.len());
    for (i, ml) in manifest.layers.iter().enumerate() {
        let mut spec = LayerSpec {
            kind: ml.kind,
            r: ml.r,
            s: ml.s,
            c: ml.c,
            k: ml.k,
            stride: ml.stride,
            padding: ml.padding,
            activation: ml.activation,
            add_from: ml.add_from,
        };
        let weights = match (spec.kind, &ml.weights) {
            (LayerKind::Conv | LayerKind::Fc, Some(file)) => Some(read_tensor(&dir.join(file))?),
            (LayerKind::Conv | LayerKind::Fc, None) => {
                return Err(Error::Model(format!("layer {i} needs a weight tensor")));
            }
            (_, Some(_)) => {
                return Err(Error::Model(format!(
                    "layer {i} ({:?}) cannot carry weights",
                    spec.kind
                )));
            }
            (_, None) => None,
        };
        if spec.kind == LayerKind::Fc {
            spec.r = 1;
            spec.s = 1;
        }
        layers.push(Layer { spec, weights });
    }
    let dims = manifest.input_dims;
    Network::new((dims[0] as usize, dims[1] as usize, dims[2] as usize), layers)
}

/// Writes `model.json` plus one `layer<N>.rdtn` per weighted layer.
pub fn save_model(dir: &Path, net: &Network) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut layers = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        let spec = &layer.spec;
        let weights = match &layer.weights {
            Some(t) => {
                let file = format!("layer{i}.rdtn");
                write_tensor(&dir.join(&file), t)?;
                Some(file)
            }
            None => None,
        };
        layers.push(ManifestLayer {
            kind: spec.kind,
            r: spec.r,
            s: spec.s,
            c: spec.c,
            k: spec.k,
            stride: spec.stride,
            padding: spec.padding,
            activation: spec.activation,
            weights,
            add_from: spec.add_from,
        });
    }
    let manifest = ModelManifest {
        version: 1,
        input_dims: [
            net.input_dims.0 as u32,
            net.input_dims.1 as u32,
            net.input_dims.2 as u32,
        ],
        layers,
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Model(e.to_string()))?;
    fs::write(dir.join(MANIFEST_NAME), text)?;
    Ok(())
}
