//! Quantized forward pass over the crossbar model.
//!
//! Per analog layer the flow is: extract groups, assign a bitwidth per group
//! (policy-dependent), quantize over the layer range, stream the codes
//! bit-serially through the programmed arrays, shift each group's partial
//! sums up to the 8-bit domain, accumulate across kernel coordinates, then
//! dequantize and apply the activation in the real domain. Rescaling is an
//! exact left shift because the per-bitwidth scales are powers of two apart,
//! so with an ideal ADC the only error against the float path is
//! quantization itself.
//!
//! Windows are independent (disjoint outputs, private counters) and run in
//! parallel; counters merge by integer addition afterwards, keeping every
//! result bitwise identical for any thread count.

use serde::{Deserialize, Serialize};

use crate::accel::{build_floorplan, Floorplan, Hierarchy};
use crate::counters::{ActivityCounters, LayerCounters};
use crate::error::{Error, Result};
use crate::net::{
    pool_forward, GroupId, LayerKind, LayerSpec, Mapping, Network,
};
use crate::par;
use crate::quant::{self, QuantParams, ValueRange};
use crate::redy::{
    decide_group, derive_seed, random_precision_baseline, HistogramConfig, HistogramMode,
    PrecisionDecision, PrecisionThresholds,
};
use crate::tensor::Tensor;
use crate::xbar::{mvm_group, program_weights, CrossbarConfig, ProgrammedArray};

/// Activation quantization policy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Policy {
    /// Static 8-bit uniform quantization (the baseline accelerator).
    #[serde(rename = "static8")]
    Static8,
    /// Per-group dynamic precision.
    #[serde(rename = "redy")]
    Redy,
    /// Dynamic decisions randomly reassigned within each layer; keeps every
    /// per-layer precision multiset, destroys the group correspondence.
    #[serde(rename = "random")]
    RandomBaseline,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Static8 => "static8",
            Policy::Redy => "redy",
            Policy::RandomBaseline => "random",
        }
    }

    fn runs_heuristic(self) -> bool {
        matches!(self, Policy::Redy | Policy::RandomBaseline)
    }
}

/// Everything the engine needs besides the network and ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    pub crossbar: CrossbarConfig,
    pub hierarchy: Hierarchy,
    pub bins: usize,
    pub subsample_ratio: f64,
    pub thresholds: PrecisionThresholds,
    pub histogram_mode: HistogramMode,
    /// Governs the random-baseline permutations only.
    pub seed: u64,
}

struct PositionArrays {
    arrays: Vec<ProgrammedArray>,
    /// Per kernel: sum of signed weight codes, used to fold the activation
    /// zero point into the integer accumulation.
    code_sums: Vec<i64>,
}

struct CompiledAnalog {
    mapping: Mapping,
    excluded: bool,
    hist_cfg: HistogramConfig,
    weight_scale: f64,
    kernels: usize,
    arrays_per_position: u64,
    /// Rows streamed per bit plane across a position's arrays.
    row_units_per_group: u64,
    /// Samples one histogram pass bins (same for every group of the layer).
    samples_per_group: u64,
    positions: Vec<PositionArrays>,
    /// Activation quantizers per bitwidth (index = bits, 1..=8 populated).
    act_params: [QuantParams; 9],
}

/// RRMSE aggregation for one layer of one run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RrmseAgg {
    pub sum: f64,
    pub max: f64,
    pub count: u64,
}

impl RrmseAgg {
    fn add(&mut self, v: f64) {
        self.sum += v;
        if v > self.max {
            self.max = v;
        }
        self.count += 1;
    }

    pub fn merge(&mut self, other: &RrmseAgg) {
        self.sum += other.sum;
        if other.max > self.max {
            self.max = other.max;
        }
        self.count += other.count;
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Result of one input through the quantized path.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub output: Tensor,
    pub decisions: Vec<PrecisionDecision>,
    pub counters: ActivityCounters,
    pub rrmse: Vec<RrmseAgg>,
}

/// Result of a batch of inputs.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub outputs: Vec<Tensor>,
    pub per_input_decisions: Vec<Vec<PrecisionDecision>>,
    pub counters: ActivityCounters,
    pub rrmse: Vec<RrmseAgg>,
    /// Mean precision variation between consecutive inputs (None for a
    /// single input).
    pub precision_variation: Option<f64>,
}

/// A network compiled onto crossbar arrays, ready to run inputs.
pub struct QuantizedEngine {
    net: Network,
    ranges: Vec<ValueRange>,
    settings: EngineSettings,
    compiled: Vec<Option<CompiledAnalog>>,
    floorplan: Floorplan,
}

impl QuantizedEngine {
    pub fn new(net: Network, ranges: Vec<ValueRange>, settings: EngineSettings) -> Result<Self> {
        settings.crossbar.validate()?;
        settings.thresholds.validate(settings.bins)?;
        if ranges.len() != net.layers.len() {
            return Err(Error::MissingCalibration(ranges.len()));
        }
        let floorplan = build_floorplan(&net, &settings.crossbar, &settings.hierarchy, settings.bins)?;
        let input_dims = net.layer_input_dims();
        let mut compiled = Vec::with_capacity(net.layers.len());
        for (li, layer) in net.layers.iter().enumerate() {
            if !layer.spec.is_analog() {
                compiled.push(None);
                continue;
            }
            compiled.push(Some(compile_analog(
                &layer.spec,
                layer.weights.as_ref().expect("validated"),
                input_dims[li],
                ranges[li],
                &settings,
            )?));
        }
        Ok(Self {
            net,
            ranges,
            settings,
            compiled,
            floorplan,
        })
    }

    pub fn net(&self) -> &Network {
        &self.net
    }

    pub fn ranges(&self) -> &[ValueRange] {
        &self.ranges
    }

    pub fn settings(&self) -> &EngineSettings {
        &self.settings
    }

    pub fn floorplan(&self) -> &Floorplan {
        &self.floorplan
    }

    /// Runs one input. `input_index` salts the random-baseline permutation
    /// so batched inputs draw independent reassignments.
    pub fn run(&self, input: &Tensor, policy: Policy, input_index: u64) -> Result<RunResult> {
        let dims = input.fmap_dims()?;
        if dims != self.net.input_dims {
            return Err(Error::DimMismatch(format!(
                "input dims {dims:?} do not match network input {:?}",
                self.net.input_dims
            )));
        }
        let n_layers = self.net.layers.len();
        let mut counters = ActivityCounters::with_layers(n_layers);
        let mut rrmse = vec![RrmseAgg::default(); n_layers];
        let mut decisions = Vec::new();
        let mut outputs: Vec<Tensor> = Vec::with_capacity(n_layers);
        let mut cur = input.clone();

        for li in 0..n_layers {
            let spec = self.net.layers[li].spec;
            let mut out = match spec.kind {
                LayerKind::Conv | LayerKind::Fc => {
                    let comp = self.compiled[li].as_ref().expect("analog layer compiled");
                    let (t, dec, lc, agg) =
                        self.run_analog(li, comp, &spec, &cur, policy, input_index)?;
                    counters.layers[li].merge(&lc);
                    rrmse[li] = agg;
                    decisions.extend(dec);
                    t
                }
                LayerKind::PoolMax | LayerKind::PoolAvg => pool_forward(&cur, &spec)?,
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
                        "skip from layer {from} has dims {:?}, layer {li} produces {:?}",
                        skip.dims(),
                        out.dims()
                    )));
                }
                for (o, sv) in out.data_mut().iter_mut().zip(skip.data()) {
                    *o += sv;
                }
            }
            outputs.push(out.clone());
            cur = out;
        }

        Ok(RunResult {
            output: cur,
            decisions,
            counters,
            rrmse,
        })
    }

    /// Runs a batch of inputs (in parallel under the `parallel` feature) and
    /// merges counters in input order.
    pub fn run_batch(&self, inputs: &[Tensor], policy: Policy) -> Result<BatchResult> {
        let results = par::try_map_indexed(inputs.len(), |i| self.run(&inputs[i], policy, i as u64))?;
        let mut counters = ActivityCounters::with_layers(self.net.layers.len());
        let mut rrmse = vec![RrmseAgg::default(); self.net.layers.len()];
        let mut outputs = Vec::with_capacity(results.len());
        let mut per_input_decisions = Vec::with_capacity(results.len());
        for r in results {
            counters.merge(&r.counters);
            for (agg, other) in rrmse.iter_mut().zip(&r.rrmse) {
                agg.merge(other);
            }
            outputs.push(r.output);
            per_input_decisions.push(r.decisions);
        }
        let precision_variation = if per_input_decisions.len() >= 2 {
            let mut sum = 0.0;
            let mut n = 0u32;
            for pair in per_input_decisions.windows(2) {
                sum += crate::redy::precision_variation(&pair[0], &pair[1])?;
                n += 1;
            }
            Some(sum / f64::from(n))
        } else {
            None
        };
        Ok(BatchResult {
            outputs,
            per_input_decisions,
            counters,
            rrmse,
            precision_variation,
        })
    }

    /// Assigns a bitwidth to every group of one analog layer without
    /// executing it (used by the bin/ratio sweep).
    pub fn decide_layer(
        &self,
        li: usize,
        ifmap: &Tensor,
        policy: Policy,
        input_index: u64,
    ) -> Result<Vec<PrecisionDecision>> {
        let comp = self.compiled[li]
            .as_ref()
            .ok_or_else(|| Error::Model(format!("layer {li} is not analog")))?;
        let spec = &self.net.layers[li].spec;
        let ifmap = if spec.kind == LayerKind::Fc {
            ifmap.flattened()
        } else {
            ifmap.clone()
        };
        self.assign_precisions(li, comp, spec, &ifmap, policy, input_index)
    }

    fn assign_precisions(
        &self,
        li: usize,
        comp: &CompiledAnalog,
        spec: &LayerSpec,
        ifmap: &Tensor,
        policy: Policy,
        input_index: u64,
    ) -> Result<Vec<PrecisionDecision>> {
        let (w, h, c) = ifmap.fmap_dims()?;
        let (ox, oy) = spec.out_dims(w, h)?;
        let positions = comp.positions.len();
        let pad = spec.padding as isize;
        let stride = spec.stride;

        let per_window = par::try_map_indexed(ox * oy, |widx| {
            let x = widx % ox;
            let y = widx / ox;
            let mut out = Vec::with_capacity(positions);
            if comp.excluded || policy == Policy::Static8 {
                for pi in 0..positions {
                    let (ri, si) = position_coords(comp.mapping, spec, pi);
                    out.push(PrecisionDecision {
                        group: GroupId {
                            layer: li as u32,
                            window_x: x as u32,
                            window_y: y as u32,
                            r: ri,
                            s: si,
                        },
                        bitwidth: 8,
                        du: 0.0,
                        forced: comp.excluded,
                    });
                }
            } else {
                for pi in 0..positions {
                    let (ri, si) = position_coords(comp.mapping, spec, pi);
                    let values = gather_group(
                        ifmap, w, h, c, x, y, stride, pad, comp.mapping, spec, pi,
                    );
                    let id = GroupId {
                        layer: li as u32,
                        window_x: x as u32,
                        window_y: y as u32,
                        r: ri,
                        s: si,
                    };
                    out.push(decide_group(
                        &values,
                        id,
                        &comp.hist_cfg,
                        self.settings.histogram_mode,
                        &self.settings.thresholds,
                    )?);
                }
            }
            Ok(out)
        })?;
        let mut decisions: Vec<PrecisionDecision> = per_window.into_iter().flatten().collect();
        if policy == Policy::RandomBaseline && !comp.excluded {
            let seed = derive_seed(self.settings.seed, input_index, li as u64);
            decisions = random_precision_baseline(&decisions, seed);
        }
        Ok(decisions)
    }

    fn run_analog(
        &self,
        li: usize,
        comp: &CompiledAnalog,
        spec: &LayerSpec,
        input: &Tensor,
        policy: Policy,
        input_index: u64,
    ) -> Result<(Tensor, Vec<PrecisionDecision>, LayerCounters, RrmseAgg)> {
        let ifmap = if spec.kind == LayerKind::Fc {
            input.flattened()
        } else {
            input.clone()
        };
        let (w, h, c) = ifmap.fmap_dims()?;
        let (ox, oy) = spec.out_dims(w, h)?;
        let positions = comp.positions.len();
        let pad = spec.padding as isize;
        let stride = spec.stride;
        let kernels = comp.kernels;

        let decisions = self.assign_precisions(li, comp, spec, &ifmap, policy, input_index)?;

        let out_scale = comp.act_params[8].scale * comp.weight_scale;
        let cfg = &self.settings.crossbar;
        let charge_heuristic = policy.runs_heuristic() && !comp.excluded;

        let per_window = par::try_map_indexed(ox * oy, |widx| {
            let x = widx % ox;
            let y = widx / ox;
            let mut local = LayerCounters::default();
            let mut agg = RrmseAgg::default();
            let mut acc = vec![0i64; kernels];
            let mut zero_corr = vec![0i64; kernels];

            for pi in 0..positions {
                let decision = decisions[widx * positions + pi];
                let bits = decision.bitwidth;
                let values =
                    gather_group(&ifmap, w, h, c, x, y, stride, pad, comp.mapping, spec, pi);
                let params = comp.act_params[bits as usize];
                let codes = quant::uniform_quantize_counted(&values, &params, &mut local.saturations);
                let sums = mvm_group(
                    &comp.positions[pi].arrays,
                    &codes,
                    bits,
                    kernels,
                    cfg,
                    &mut local,
                )?;
                let shift = 8 - u32::from(bits);
                for k in 0..kernels {
                    acc[k] += sums[k] << shift;
                    zero_corr[k] +=
                        (i64::from(params.zero_point) << shift) * comp.positions[pi].code_sums[k];
                }
                local.groups += 1;
                local.group_array_units += comp.arrays_per_position;
                local.group_row_units += comp.row_units_per_group;
                local.bits_hist[bits as usize] += 1;
                if charge_heuristic {
                    local.redy_samples += comp.samples_per_group;
                    local.redy_decisions += 1;
                }
                match quant::rrmse(&values, &quant::dequantize(&codes, &params)) {
                    Ok(e) => agg.add(e),
                    Err(Error::UndefinedRelativeError) => {}
                    Err(e) => return Err(e),
                }
            }

            let mut row = vec![0.0f32; kernels];
            for k in 0..kernels {
                let real = (acc[k] + zero_corr[k]) as f64 / out_scale;
                row[k] = spec.activation.apply(real as f32);
            }
            Ok((row, local, agg))
        })?;

        let mut counters = LayerCounters::default();
        let mut agg = RrmseAgg::default();
        let mut data = Vec::with_capacity(ox * oy * kernels);
        for (row, local, a) in per_window {
            data.extend_from_slice(&row);
            counters.merge(&local);
            agg.merge(&a);
        }
        let out = Tensor::new(vec![ox as u32, oy as u32, kernels as u32], data)?;
        Ok((out, decisions, counters, agg))
    }
}

fn position_coords(mapping: Mapping, spec: &LayerSpec, pi: usize) -> (u8, u8) {
    match mapping {
        Mapping::Channelwise => ((pi / spec.s) as u8, (pi % spec.s) as u8),
        Mapping::Conventional => (0, 0),
    }
}

#[allow(clippy::too_many_arguments)]
fn gather_group(
    ifmap: &Tensor,
    w: usize,
    h: usize,
    c: usize,
    x: usize,
    y: usize,
    stride: usize,
    pad: isize,
    mapping: Mapping,
    spec: &LayerSpec,
    pi: usize,
) -> Vec<f32> {
    match mapping {
        Mapping::Channelwise => {
            let ri = pi / spec.s;
            let si = pi % spec.s;
            let ix = (x * stride) as isize + ri as isize - pad;
            let iy = (y * stride) as isize + si as isize - pad;
            (0..c).map(|ci| ifmap.at_padded(w, h, c, ix, iy, ci)).collect()
        }
        Mapping::Conventional => {
            let mut values = Vec::with_capacity(spec.r * spec.s * c);
            for ri in 0..spec.r {
                for si in 0..spec.s {
                    let ix = (x * stride) as isize + ri as isize - pad;
                    let iy = (y * stride) as isize + si as isize - pad;
                    for ci in 0..c {
                        values.push(ifmap.at_padded(w, h, c, ix, iy, ci));
                    }
                }
            }
            values
        }
    }
}

fn compile_analog(
    spec: &LayerSpec,
    weights: &Tensor,
    input_dims: (usize, usize, usize),
    range: ValueRange,
    settings: &EngineSettings,
) -> Result<CompiledAnalog> {
    let (w, h, c) = input_dims;
    let fc = if spec.kind == LayerKind::Fc { w * h * c } else { c };
    let excluded = fc < settings.bins;
    let mapping = if excluded {
        Mapping::Conventional
    } else {
        Mapping::Channelwise
    };
    let depth = match mapping {
        Mapping::Channelwise => fc,
        Mapping::Conventional => spec.r * spec.s * fc,
    };

    // Symmetric static 8-bit weight quantization over the layer's |w| max.
    let (lo, hi) = weights.min_max();
    let w_abs = lo.abs().max(hi.abs());
    let weight_scale = if w_abs > 0.0 {
        f64::from((1u32 << (settings.crossbar.weight_bits - 1)) - 1) / f64::from(w_abs)
    } else {
        1.0
    };
    let quantize_weight =
        |v: f32| -> i64 { (f64::from(v) * weight_scale).round() as i64 };

    let n_positions = match mapping {
        Mapping::Channelwise => spec.r * spec.s,
        Mapping::Conventional => 1,
    };
    let mut positions = Vec::with_capacity(n_positions);
    for pi in 0..n_positions {
        // kernel columns: depth codes per kernel, matching group order.
        let mut kernel_codes: Vec<Vec<i64>> = vec![Vec::with_capacity(depth); spec.k];
        match mapping {
            Mapping::Channelwise => {
                let ri = pi / spec.s;
                let si = pi % spec.s;
                for ci in 0..fc {
                    for (ki, col) in kernel_codes.iter_mut().enumerate() {
                        col.push(quantize_weight(weights.weight_at(spec.s, fc, spec.k, ri, si, ci, ki)));
                    }
                }
            }
            Mapping::Conventional => {
                for ri in 0..spec.r {
                    for si in 0..spec.s {
                        for ci in 0..fc {
                            for (ki, col) in kernel_codes.iter_mut().enumerate() {
                                col.push(quantize_weight(
                                    weights.weight_at(spec.s, fc, spec.k, ri, si, ci, ki),
                                ));
                            }
                        }
                    }
                }
            }
        }
        let code_sums: Vec<i64> = kernel_codes.iter().map(|col| col.iter().sum()).collect();
        let arrays = program_weights(&kernel_codes, &settings.crossbar, true)?;
        positions.push(PositionArrays { arrays, code_sums });
    }

    let col_segments = spec.k.div_ceil(settings.crossbar.kernels_per_array());
    let arrays_per_position = (depth.div_ceil(settings.crossbar.rows) * col_segments) as u64;
    let row_units_per_group = (depth * col_segments) as u64;

    let hist_cfg = HistogramConfig::from_range(settings.bins, settings.subsample_ratio, range)?;
    let stride = hist_cfg.sample_stride();
    let samples_per_group = depth.div_ceil(stride) as u64;

    let mut act_params = [QuantParams::from_range(8, range)?; 9];
    for (bits, slot) in act_params.iter_mut().enumerate().skip(1) {
        *slot = QuantParams::from_range(bits as u8, range)?;
    }

    Ok(CompiledAnalog {
        mapping,
        excluded,
        hist_cfg,
        weight_scale,
        kernels: spec.k,
        arrays_per_position,
        row_units_per_group,
        samples_per_group,
        positions,
        act_params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::net::calibrate_ranges;

    fn engine(seed: u64) -> QuantizedEngine {
        let net = fixtures::small_net(seed);
        let inputs: Vec<Tensor> = (0..4)
            .map(|i| fixtures::random_input(net.input_dims, 50 + i))
            .collect();
        let ranges = calibrate_ranges(&net, &inputs).unwrap();
        QuantizedEngine::new(net, ranges, fixtures::default_settings()).unwrap()
    }

    #[test]
    fn static8_tracks_float_reference() {
        let eng = engine(3);
        let input = fixtures::random_input(eng.net().input_dims, 54);
        // Calibrate on the probe input so nothing clips.
        let ranges = calibrate_ranges(eng.net(), &[input.clone()]).unwrap();
        let eng =
            QuantizedEngine::new(eng.net.clone(), ranges, fixtures::default_settings()).unwrap();
        let run = eng.run(&input, Policy::Static8, 0).unwrap();
        let float = crate::net::forward_float(eng.net(), &input).unwrap();
        let reference = float.last().unwrap();
        for (&q, &f) in run.output.data().iter().zip(reference.data()) {
            assert!(
                (f64::from(q) - f64::from(f)).abs() < 0.12,
                "quantized {q} too far from float {f}"
            );
        }
    }

    #[test]
    fn forcing_thresholds_match_static8_bit_for_bit() {
        let eng = engine(4);
        let mut settings = *eng.settings();
        settings.thresholds = PrecisionThresholds::force_max_precision();
        // A DU of exactly zero decodes to 3 bits under any thresholds; with
        // a sample count not divisible by the bin count DU has a positive
        // floor, so the forcing tuple provably sends every group to 8 bits.
        settings.subsample_ratio = 0.5;
        let forced =
            QuantizedEngine::new(eng.net.clone(), eng.ranges.clone(), settings).unwrap();
        let input = fixtures::random_input(eng.net().input_dims, 99);
        let a = eng.run(&input, Policy::Static8, 0).unwrap();
        let b = forced.run(&input, Policy::Redy, 0).unwrap();
        assert!(b.decisions.iter().all(|d| d.bitwidth == 8));
        assert_eq!(a.output.data(), b.output.data());
    }

    #[test]
    fn redy_on_flat_input_streams_fewer_bits() {
        let eng = engine(5);
        // Inputs spread uniformly over the calibrated range give flat group
        // histograms, so dynamic precision drops below 8 bits.
        let input = fixtures::random_input(eng.net().input_dims, 77);
        let stat = eng.run(&input, Policy::Static8, 0).unwrap();
        let dyn_run = eng.run(&input, Policy::Redy, 0).unwrap();
        let static_bits = stat.counters.totals().streamed_bits;
        let dynamic_bits = dyn_run.counters.totals().streamed_bits;
        assert!(
            dynamic_bits < static_bits,
            "dynamic {dynamic_bits} not below static {static_bits}"
        );
    }

    #[test]
    fn random_baseline_keeps_layer_multisets() {
        let eng = engine(6);
        let input = fixtures::random_input(eng.net().input_dims, 13);
        let redy = eng.run(&input, Policy::Redy, 0).unwrap();
        let random = eng.run(&input, Policy::RandomBaseline, 0).unwrap();
        for li in 0..eng.net().layers.len() {
            let mut a: Vec<u8> = redy
                .decisions
                .iter()
                .filter(|d| d.group.layer == li as u32)
                .map(|d| d.bitwidth)
                .collect();
            let mut b: Vec<u8> = random
                .decisions
                .iter()
                .filter(|d| d.group.layer == li as u32)
                .map(|d| d.bitwidth)
                .collect();
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn batch_is_deterministic() {
        let eng = engine(7);
        let inputs: Vec<Tensor> = (0..3)
            .map(|i| fixtures::random_input(eng.net().input_dims, 400 + i))
            .collect();
        let a = eng.run_batch(&inputs, Policy::Redy).unwrap();
        let b = eng.run_batch(&inputs, Policy::Redy).unwrap();
        assert_eq!(a.counters, b.counters);
        for (x, y) in a.outputs.iter().zip(&b.outputs) {
            assert_eq!(x.data(), y.data());
        }
    }
}
