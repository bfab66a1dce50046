//! Network description, float reference forward pass and group extraction.
//!
//! Layers form a linear chain; a layer may additionally add the output of an
//! earlier layer to its own (additive skip connection, applied in the real
//! domain). FC layers are the 1x1xC special case of CONV: the incoming
//! feature map is flattened to `1 x 1 x (w*h*c)` before the dot products.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::quant::ValueRange;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Fc,
    PoolMax,
    PoolAvg,
    Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Sigmoid,
    None,
}

impl Activation {
    #[inline]
    pub fn apply(self, v: f32) -> f32 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
            Activation::None => v,
        }
    }
}

/// Shape and behavior of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Kernel height along the width axis.
    pub r: usize,
    /// Kernel height along the height axis.
    pub s: usize,
    /// Input channels (group depth). Ignored for pool/activation layers.
    pub c: usize,
    /// Output channels / kernel count. Ignored for pool/activation layers.
    pub k: usize,
    pub stride: usize,
    pub padding: usize,
    pub activation: Activation,
    /// Optional additive skip: index of an earlier layer whose output is
    /// added to this layer's output.
    #[serde(default)]
    pub add_from: Option<usize>,
}

impl LayerSpec {
    pub fn conv(r: usize, s: usize, c: usize, k: usize, stride: usize, padding: usize, activation: Activation) -> Self {
        Self { kind: LayerKind::Conv, r, s, c, k, stride, padding, activation, add_from: None }
    }

    pub fn fc(c: usize, k: usize, activation: Activation) -> Self {
        Self { kind: LayerKind::Fc, r: 1, s: 1, c, k, stride: 1, padding: 0, activation, add_from: None }
    }

    pub fn pool_max(r: usize, s: usize, stride: usize) -> Self {
        Self { kind: LayerKind::PoolMax, r, s, c: 0, k: 0, stride, padding: 0, activation: Activation::None, add_from: None }
    }

    pub fn pool_avg(r: usize, s: usize, stride: usize) -> Self {
        Self { kind: LayerKind::PoolAvg, r, s, c: 0, k: 0, stride, padding: 0, activation: Activation::None, add_from: None }
    }

    pub fn activation(activation: Activation) -> Self {
        Self { kind: LayerKind::Activation, r: 1, s: 1, c: 0, k: 0, stride: 1, padding: 0, activation, add_from: None }
    }

    pub fn is_analog(&self) -> bool {
        matches!(self.kind, LayerKind::Conv | LayerKind::Fc)
    }

    /// Output spatial dims for an input of `w x h`; errors when the stride
    /// does not evenly tile the padded extent.
    pub fn out_dims(&self, w: usize, h: usize) -> Result<(usize, usize)> {
        let ext_w = w + 2 * self.padding;
        let ext_h = h + 2 * self.padding;
        if ext_w < self.r || ext_h < self.s {
            return Err(Error::DimMismatch(format!(
                "kernel {}x{} larger than padded input {ext_w}x{ext_h}",
                self.r, self.s
            )));
        }
        if (ext_w - self.r) % self.stride != 0 || (ext_h - self.s) % self.stride != 0 {
            return Err(Error::DimMismatch(format!(
                "stride {} does not tile input {w}x{h} with kernel {}x{} pad {}",
                self.stride, self.r, self.s, self.padding
            )));
        }
        Ok(((ext_w - self.r) / self.stride + 1, (ext_h - self.s) / self.stride + 1))
    }
}

/// One layer of a loaded network: spec plus (for conv/fc) its weights.
#[derive(Debug, Clone)]
pub struct Layer {
    pub spec: LayerSpec,
    pub weights: Option<Tensor>,
}

/// A linear chain of layers with optional additive skips.
#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
    /// Width/height/channels the network expects at its input.
    pub input_dims: (usize, usize, usize),
}

impl Network {
    pub fn new(input_dims: (usize, usize, usize), layers: Vec<Layer>) -> Result<Self> {
        let net = Self { layers, input_dims };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        let (mut w, mut h, mut c) = self.input_dims;
        for (i, layer) in self.layers.iter().enumerate() {
            let spec = &layer.spec;
            if let Some(from) = spec.add_from {
                if from >= i {
                    return Err(Error::Model(format!(
                        "layer {i} skip source {from} is not an earlier layer"
                    )));
                }
            }
            match spec.kind {
                LayerKind::Conv => {
                    if spec.c != c {
                        return Err(Error::Model(format!(
                            "layer {i} expects {} input channels, got {c}",
                            spec.c
                        )));
                    }
                    let weights = layer.weights.as_ref().ok_or_else(|| {
                        Error::Model(format!("conv layer {i} has no weight tensor"))
                    })?;
                    let dims = weights.kernel_dims()?;
                    if dims != (spec.r, spec.s, spec.c, spec.k) {
                        return Err(Error::Model(format!(
                            "layer {i} weight dims {dims:?} do not match spec ({}, {}, {}, {})",
                            spec.r, spec.s, spec.c, spec.k
                        )));
                    }
                    let (ow, oh) = spec.out_dims(w, h)?;
                    w = ow;
                    h = oh;
                    c = spec.k;
                }
                LayerKind::Fc => {
                    if spec.c != w * h * c {
                        return Err(Error::Model(format!(
                            "fc layer {i} expects {} inputs, got {}",
                            spec.c,
                            w * h * c
                        )));
                    }
                    let weights = layer.weights.as_ref().ok_or_else(|| {
                        Error::Model(format!("fc layer {i} has no weight tensor"))
                    })?;
                    let dims = weights.kernel_dims()?;
                    if dims != (1, 1, spec.c, spec.k) {
                        return Err(Error::Model(format!(
                            "fc layer {i} weight dims {dims:?} do not match (1, 1, {}, {})",
                            spec.c, spec.k
                        )));
                    }
                    w = 1;
                    h = 1;
                    c = spec.k;
                }
                LayerKind::PoolMax | LayerKind::PoolAvg => {
                    if spec.padding != 0 {
                        return Err(Error::Model(format!("pool layer {i} must use zero padding")));
                    }
                    let (ow, oh) = spec.out_dims(w, h)?;
                    w = ow;
                    h = oh;
                }
                LayerKind::Activation => {}
            }
        }
        Ok(())
    }

    /// Per-layer input shapes implied by `input_dims`.
    pub fn layer_input_dims(&self) -> Vec<(usize, usize, usize)> {
        let mut dims = Vec::with_capacity(self.layers.len());
        let (mut w, mut h, mut c) = self.input_dims;
        for layer in &self.layers {
            dims.push((w, h, c));
            let spec = &layer.spec;
            match spec.kind {
                LayerKind::Conv => {
                    let (ow, oh) = spec.out_dims(w, h).expect("validated");
                    w = ow;
                    h = oh;
                    c = spec.k;
                }
                LayerKind::Fc => {
                    w = 1;
                    h = 1;
                    c = spec.k;
                }
                LayerKind::PoolMax | LayerKind::PoolAvg => {
                    let (ow, oh) = spec.out_dims(w, h).expect("validated");
                    w = ow;
                    h = oh;
                }
                LayerKind::Activation => {}
            }
        }
        dims
    }
}

/// CONV forward pass in f32. Each output element is reduced by its own
/// sequential loop, so the result does not depend on the thread count.
pub fn conv_forward_float(ifmap: &Tensor, weights: &Tensor, spec: &LayerSpec) -> Result<Tensor> {
    let (w, h, c) = ifmap.fmap_dims()?;
    let (r, s, kc, k) = weights.kernel_dims()?;
    if (r, s, kc) != (spec.r, spec.s, spec.c) || kc != c {
        return Err(Error::DimMismatch(format!(
            "kernel dims ({r}, {s}, {kc}) do not match ifmap channels {c} and spec"
        )));
    }
    let (ox, oy) = spec.out_dims(w, h)?;
    let pad = spec.padding as isize;
    let stride = spec.stride;

    let rows = par::map_indexed(oy, |y| {
        let mut row = vec![0.0f32; ox * k];
        for x in 0..ox {
            for ki in 0..k {
                let mut acc = 0.0f64;
                for ri in 0..r {
                    for si in 0..s {
                        let ix = (x * stride) as isize + ri as isize - pad;
                        let iy = (y * stride) as isize + si as isize - pad;
                        for ci in 0..c {
                            let a = ifmap.at_padded(w, h, c, ix, iy, ci);
                            let wv = weights.weight_at(s, c, k, ri, si, ci, ki);
                            acc += f64::from(a) * f64::from(wv);
                        }
                    }
                }
                row[x * k + ki] = spec.activation.apply(acc as f32);
            }
        }
        row
    });

    let mut data = Vec::with_capacity(ox * oy * k);
    for row in rows {
        data.extend_from_slice(&row);
    }
    Tensor::new(vec![ox as u32, oy as u32, k as u32], data)
}

/// Max/avg pooling over `r x s` windows.
pub fn pool_forward(ifmap: &Tensor, spec: &LayerSpec) -> Result<Tensor> {
    let (w, h, c) = ifmap.fmap_dims()?;
    let (ox, oy) = spec.out_dims(w, h)?;
    let mut data = vec![0.0f32; ox * oy * c];
    for y in 0..oy {
        for x in 0..ox {
            for ci in 0..c {
                let mut best = f32::NEG_INFINITY;
                let mut sum = 0.0f64;
                for ri in 0..spec.r {
                    for si in 0..spec.s {
                        let v = ifmap.at(w, c, x * spec.stride + ri, y * spec.stride + si, ci);
                        best = best.max(v);
                        sum += f64::from(v);
                    }
                }
                data[(y * ox + x) * c + ci] = match spec.kind {
                    LayerKind::PoolMax => best,
                    LayerKind::PoolAvg => (sum / (spec.r * spec.s) as f64) as f32,
                    _ => unreachable!("pool_forward on non-pool layer"),
                };
            }
        }
    }
    Tensor::new(vec![ox as u32, oy as u32, c as u32], data)
}

/// Float forward pass; returns the tensors flowing *into* each layer plus
/// the final output (so `activations[i]` is layer i's input).
pub fn forward_float(net: &Network, input: &Tensor) -> Result<Vec<Tensor>> {
    let mut flow = Vec::with_capacity(net.layers.len() + 1);
    flow.push(input.clone());
    let mut outputs: Vec<Tensor> = Vec::with_capacity(net.layers.len());
    for (i, layer) in net.layers.iter().enumerate() {
        let cur = flow.last().unwrap();
        let spec = &layer.spec;
        let mut out = match spec.kind {
            LayerKind::Conv => conv_forward_float(cur, layer.weights.as_ref().unwrap(), spec)?,
            LayerKind::Fc => {
                conv_forward_float(&cur.flattened(), layer.weights.as_ref().unwrap(), spec)?
            }
            LayerKind::PoolMax | LayerKind::PoolAvg => pool_forward(cur, spec)?,
            LayerKind::Activation => {
                let mut t = cur.clone();
                for v in t.data_mut() {
                    *v = spec.activation.apply(*v);
                }
                t
            }
        };
        if let Some(from) = spec.add_from {
            let skip = &outputs[from];
            if skip.dims() != out.dims() {
                return Err(Error::DimMismatch(format!(
                    "skip from layer {from} has dims {:?}, layer {i} produces {:?}",
                    skip.dims(),
                    out.dims()
                )));
            }
            for (o, sv) in out.data_mut().iter_mut().zip(skip.data()) {
                *o += sv;
            }
        }
        outputs.push(out.clone());
        flow.push(out);
    }
    Ok(flow)
}

/// How a layer's activations are laid out over crossbar rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mapping {
    /// One group per kernel coordinate `(r, s)`: the C activations sharing
    /// that coordinate across input channels.
    Channelwise,
    /// Whole window unrolled into a single vector of length `r*s*c`.
    Conventional,
}

/// Identity of one activation group within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupId {
    pub layer: u32,
    pub window_x: u32,
    pub window_y: u32,
    pub r: u8,
    pub s: u8,
}

/// One extracted group of activations.
#[derive(Debug, Clone)]
pub struct Group {
    pub id: GroupId,
    pub values: Vec<f32>,
}

/// Extracts the activation groups of one layer in window-major order, then
/// `(r, s)` row-major within a window. Channel-wise groups of one window
/// concatenated in that order reproduce the conventional window vector.
pub fn extract_groups(
    ifmap: &Tensor,
    spec: &LayerSpec,
    mapping: Mapping,
    layer: u32,
) -> Result<Vec<Group>> {
    let (w, h, c) = ifmap.fmap_dims()?;
    let (ox, oy) = spec.out_dims(w, h)?;
    let pad = spec.padding as isize;
    let mut groups = Vec::new();
    for y in 0..oy {
        for x in 0..ox {
            match mapping {
                Mapping::Channelwise => {
                    for ri in 0..spec.r {
                        for si in 0..spec.s {
                            let ix = (x * spec.stride) as isize + ri as isize - pad;
                            let iy = (y * spec.stride) as isize + si as isize - pad;
                            let values = (0..c)
                                .map(|ci| ifmap.at_padded(w, h, c, ix, iy, ci))
                                .collect();
                            groups.push(Group {
                                id: GroupId {
                                    layer,
                                    window_x: x as u32,
                                    window_y: y as u32,
                                    r: ri as u8,
                                    s: si as u8,
                                },
                                values,
                            });
                        }
                    }
                }
                Mapping::Conventional => {
                    let mut values = Vec::with_capacity(spec.r * spec.s * c);
                    for ri in 0..spec.r {
                        for si in 0..spec.s {
                            let ix = (x * spec.stride) as isize + ri as isize - pad;
                            let iy = (y * spec.stride) as isize + si as isize - pad;
                            for ci in 0..c {
                                values.push(ifmap.at_padded(w, h, c, ix, iy, ci));
                            }
                        }
                    }
                    groups.push(Group {
                        id: GroupId {
                            layer,
                            window_x: x as u32,
                            window_y: y as u32,
                            r: 0,
                            s: 0,
                        },
                        values,
                    });
                }
            }
        }
    }
    Ok(groups)
}

/// Observed per-layer input ranges over a set of calibration inputs
/// (exact min/max of every activation that flows into each layer).
pub fn calibrate_ranges(net: &Network, calibration_inputs: &[Tensor]) -> Result<Vec<ValueRange>> {
    if calibration_inputs.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let per_input = par::try_map_indexed(calibration_inputs.len(), |i| {
        let flow = forward_float(net, &calibration_inputs[i])?;
        let ranges: Vec<ValueRange> = flow[..net.layers.len()]
            .iter()
            .map(|t| {
                let (lo, hi) = t.min_max();
                ValueRange { lo, hi }
            })
            .collect();
        Ok(ranges)
    })?;
    let mut merged = per_input[0].clone();
    for ranges in &per_input[1..] {
        for (m, r) in merged.iter_mut().zip(ranges) {
            *m = m.union(*r);
        }
    }
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ident_kernel() -> Tensor {
        // 3x3x1x1 kernel with a single 1 at the center.
        let mut data = vec![0.0; 9];
        data[4] = 1.0; // r=1, s=1
        Tensor::new(vec![3, 3, 1, 1], data).unwrap()
    }

    #[test]
    fn conv_single_element() {
        let ifmap = Tensor::fmap(1, 1, 1, vec![2.0]).unwrap();
        let weights = Tensor::new(vec![1, 1, 1, 1], vec![3.0]).unwrap();
        let spec = LayerSpec::conv(1, 1, 1, 1, 1, 0, Activation::None);
        let out = conv_forward_float(&ifmap, &weights, &spec).unwrap();
        assert_eq!(out.data(), &[6.0]);
    }

    #[test]
    fn conv_identity_kernel_crops() {
        let data: Vec<f32> = (0..25).map(|i| i as f32).collect();
        let ifmap = Tensor::fmap(5, 5, 1, data).unwrap();
        let spec = LayerSpec::conv(3, 3, 1, 1, 1, 0, Activation::None);
        let out = conv_forward_float(&ifmap, &ident_kernel(), &spec).unwrap();
        // Center crop of the 5x5 map.
        let expect: Vec<f32> = vec![6., 7., 8., 11., 12., 13., 16., 17., 18.];
        assert_eq!(out.data(), expect.as_slice());
    }

    #[test]
    fn channelwise_group_count_and_depth() {
        let ifmap = Tensor::fmap(3, 3, 4, (0..36).map(|i| i as f32).collect()).unwrap();
        let spec = LayerSpec::conv(3, 3, 4, 2, 1, 0, Activation::None);
        let groups = extract_groups(&ifmap, &spec, Mapping::Channelwise, 0).unwrap();
        assert_eq!(groups.len(), 9); // one window, 3x3 kernel coordinates
        assert!(groups.iter().all(|g| g.values.len() == 4));
    }

    #[test]
    fn one_by_one_kernel_mappings_agree() {
        let ifmap = Tensor::fmap(2, 2, 5, (0..20).map(|i| i as f32).collect()).unwrap();
        let spec = LayerSpec::conv(1, 1, 5, 1, 1, 0, Activation::None);
        let cw = extract_groups(&ifmap, &spec, Mapping::Channelwise, 0).unwrap();
        let conv = extract_groups(&ifmap, &spec, Mapping::Conventional, 0).unwrap();
        assert_eq!(cw.len(), conv.len());
        for (a, b) in cw.iter().zip(&conv) {
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn groups_concatenate_to_conventional_vector() {
        let ifmap = Tensor::fmap(4, 4, 3, (0..48).map(|i| i as f32 * 0.5).collect()).unwrap();
        let spec = LayerSpec::conv(3, 3, 3, 1, 1, 1, Activation::None);
        let cw = extract_groups(&ifmap, &spec, Mapping::Channelwise, 0).unwrap();
        let conv = extract_groups(&ifmap, &spec, Mapping::Conventional, 0).unwrap();
        let per_window = spec.r * spec.s;
        for (wi, window) in conv.iter().enumerate() {
            let concat: Vec<f32> = cw[wi * per_window..(wi + 1) * per_window]
                .iter()
                .flat_map(|g| g.values.iter().copied())
                .collect();
            assert_eq!(concat, window.values);
        }
    }

    #[test]
    fn calibration_single_identity_layer() {
        let net = Network::new(
            (2, 2, 1),
            vec![Layer {
                spec: LayerSpec::activation(Activation::None),
                weights: None,
            }],
        )
        .unwrap();
        let input = Tensor::fmap(2, 2, 1, vec![-1.5, 0.0, 2.5, 0.25]).unwrap();
        let ranges = calibrate_ranges(&net, &[input]).unwrap();
        assert_eq!(ranges.len(), 1);
        assert_eq!((ranges[0].lo, ranges[0].hi), (-1.5, 2.5));
    }

    #[test]
    fn calibration_unions_inputs() {
        let net = Network::new(
            (2, 1, 1),
            vec![Layer {
                spec: LayerSpec::activation(Activation::None),
                weights: None,
            }],
        )
        .unwrap();
        let a = Tensor::fmap(2, 1, 1, vec![-1.0, 0.5]).unwrap();
        let b = Tensor::fmap(2, 1, 1, vec![0.0, 3.0]).unwrap();
        let ranges = calibrate_ranges(&net, &[a, b]).unwrap();
        assert_eq!((ranges[0].lo, ranges[0].hi), (-1.0, 3.0));
    }

    #[test]
    fn fc_equals_conv_on_flattened_input() {
        let ifmap = Tensor::fmap(2, 2, 2, vec![1., 2., 3., 4., 5., 6., 7., 8.]).unwrap();
        let weights =
            Tensor::new(vec![1, 1, 8, 2], (0..16).map(|i| (i as f32) * 0.1 - 0.4).collect())
                .unwrap();
        let spec = LayerSpec::fc(8, 2, Activation::None);
        let out = conv_forward_float(&ifmap.flattened(), &weights, &spec).unwrap();
        // Direct dot products.
        let flat = ifmap.flattened();
        for ki in 0..2 {
            let mut acc = 0.0f64;
            for ci in 0..8 {
                acc += f64::from(flat.data()[ci]) * f64::from(weights.data()[ci * 2 + ki]);
            }
            assert!((f64::from(out.data()[ki]) - acc).abs() < 1e-5);
        }
    }
}
