//! Accelerator-level modeling: floorplan, activity-driven energy and
//! pipeline latency.
//!
//! All layers execute concurrently in a deep pipeline, so throughput is set
//! by the slowest layer. Layer latency is modeled as streamed bit planes
//! serialized over each array's shared ADC pool; the per-layer constants
//! cancel in every reported ratio, which is the level the headline numbers
//! live at.

use serde::{Deserialize, Serialize};

use crate::counters::ActivityCounters;
use crate::error::{Error, Result};
use crate::net::{LayerKind, LayerSpec, Mapping, Network};
use crate::xbar::CrossbarConfig;

/// APU/PE/Tile hierarchy sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hierarchy {
    pub apus_per_pe: usize,
    pub pes_per_tile: usize,
    pub tiles: usize,
}

impl Default for Hierarchy {
    fn default() -> Self {
        Self {
            apus_per_pe: 8,
            pes_per_tile: 8,
            tiles: 168,
        }
    }
}

impl Hierarchy {
    pub fn apu_capacity(&self) -> usize {
        self.apus_per_pe * self.pes_per_tile * self.tiles
    }
}

/// Energy and timing constants. The per-event numbers are configuration
/// constants, not derived here; defaults describe a 32 nm ISAAC-class chip
/// with the measured precision-decision unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    /// Joules per bit plane applied to one array.
    pub e_xbar_event: f64,
    /// Joules per column conversion.
    pub e_adc_conversion: f64,
    /// Joules per byte of activation-code traffic (0 keeps buffer modeling
    /// out of the core results).
    pub e_buffer_per_byte: f64,
    pub redy_unit_area_um2: f64,
    pub redy_unit_latency_ns: f64,
    pub redy_unit_static_uw: f64,
    pub redy_unit_dynamic_uw: f64,
    pub chip_static_w: f64,
    pub chip_area_um2: f64,
    pub frequency_mhz: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            e_xbar_event: 1.0e-11,
            e_adc_conversion: 2.0e-12,
            e_buffer_per_byte: 0.0,
            redy_unit_area_um2: 768.8,
            redy_unit_latency_ns: 2.19,
            redy_unit_static_uw: 9.3,
            redy_unit_dynamic_uw: 62.9,
            chip_static_w: 0.25,
            chip_area_um2: 85.4e6,
            frequency_mhz: 400.0,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.e_xbar_event,
            self.e_adc_conversion,
            self.e_buffer_per_byte,
            self.redy_unit_area_um2,
            self.redy_unit_latency_ns,
            self.redy_unit_static_uw,
            self.redy_unit_dynamic_uw,
            self.chip_static_w,
            self.chip_area_um2,
        ];
        if fields.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config("energy parameters must be non-negative".into()));
        }
        if !(self.frequency_mhz > 0.0) {
            return Err(Error::Config("frequency must be positive".into()));
        }
        Ok(())
    }

    /// Energy of one precision-unit operation (one sample binned or one
    /// decision decoded).
    pub fn redy_op_energy(&self) -> f64 {
        self.redy_unit_dynamic_uw * 1e-6 * self.redy_unit_latency_ns * 1e-9
    }

    pub fn frequency_hz(&self) -> f64 {
        self.frequency_mhz * 1e6
    }
}

/// Placement of one layer onto crossbar arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerPlan {
    pub layer: usize,
    pub kind: LayerKind,
    pub mapping: Mapping,
    /// Group depth below the histogram bin count: conventional mapping and
    /// static 8-bit.
    pub excluded: bool,
    pub windows: u64,
    pub groups_per_window: u64,
    /// Rows one group occupies.
    pub depth: usize,
    pub kernels: usize,
    pub row_segments: usize,
    pub col_segments: usize,
    /// Arrays one group streams into.
    pub arrays_per_position: usize,
    /// Distinct (r, s) positions holding weights.
    pub positions: usize,
    /// Total arrays assigned to the layer.
    pub arrays: usize,
    /// Cells holding synaptic weights.
    pub programmed_cells: u64,
    /// Occupied columns of each column segment.
    pub occupied_cols: Vec<usize>,
    /// Precision-decision units provisioned for this layer.
    pub redy_units: u64,
}

/// Chip-level placement summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Floorplan {
    pub per_layer: Vec<LayerPlan>,
    pub total_arrays: usize,
    pub apus_used: usize,
    pub pes_used: usize,
    pub tiles_used: usize,
    /// Fraction of cells in assigned arrays that hold weights.
    pub memory_utilization: f64,
    pub redy_units: u64,
}

/// Precision-decision units a layer needs to keep the pipeline free of
/// stalls: one per kernel coordinate per stride step. Excluded layers run
/// statically and need none.
pub fn redy_unit_count(spec: &LayerSpec, excluded: bool) -> u64 {
    if excluded || !spec.is_analog() {
        return 0;
    }
    (spec.stride * spec.r * spec.s) as u64
}

/// Computes per-layer array counts and packs them greedily into the
/// APU/PE/Tile hierarchy in layer order.
pub fn build_floorplan(
    net: &Network,
    cfg: &CrossbarConfig,
    hierarchy: &Hierarchy,
    bins: usize,
) -> Result<Floorplan> {
    cfg.validate()?;
    let slices = cfg.slices_per_weight();
    let per_array = cfg.kernels_per_array();
    let input_dims = net.layer_input_dims();

    let mut per_layer = Vec::with_capacity(net.layers.len());
    let mut total_arrays = 0usize;
    let mut programmed = 0u64;
    let mut redy_units = 0u64;

    for (i, layer) in net.layers.iter().enumerate() {
        let spec = &layer.spec;
        let (w, h, c) = input_dims[i];
        if !spec.is_analog() {
            per_layer.push(LayerPlan {
                layer: i,
                kind: spec.kind,
                mapping: Mapping::Channelwise,
                excluded: false,
                windows: 0,
                groups_per_window: 0,
                depth: 0,
                kernels: 0,
                row_segments: 0,
                col_segments: 0,
                arrays_per_position: 0,
                positions: 0,
                arrays: 0,
                programmed_cells: 0,
                occupied_cols: Vec::new(),
                redy_units: 0,
            });
            continue;
        }

        let (fw, fh, fc) = if spec.kind == LayerKind::Fc {
            (1, 1, w * h * c)
        } else {
            (w, h, c)
        };
        let (ox, oy) = if spec.kind == LayerKind::Fc {
            (1, 1)
        } else {
            spec.out_dims(fw, fh)?
        };

        let excluded = fc < bins;
        let (mapping, depth, positions, groups_per_window) = if excluded {
            (Mapping::Conventional, spec.r * spec.s * fc, 1, 1u64)
        } else {
            (Mapping::Channelwise, fc, spec.r * spec.s, (spec.r * spec.s) as u64)
        };

        let row_segments = depth.div_ceil(cfg.rows);
        let col_segments = spec.k.div_ceil(per_array);
        let arrays_per_position = row_segments * col_segments;
        let arrays = arrays_per_position * positions;
        let occupied_cols: Vec<usize> = (0..col_segments)
            .map(|cs| {
                let k_here = (spec.k - cs * per_array).min(per_array);
                k_here * slices
            })
            .collect();
        let cells = (depth as u64) * (spec.k as u64) * (slices as u64) * positions as u64;

        let units = redy_unit_count(spec, excluded);
        redy_units += units;
        total_arrays += arrays;
        programmed += cells;

        per_layer.push(LayerPlan {
            layer: i,
            kind: spec.kind,
            mapping,
            excluded,
            windows: (ox * oy) as u64,
            groups_per_window,
            depth,
            kernels: spec.k,
            row_segments,
            col_segments,
            arrays_per_position,
            positions,
            arrays,
            programmed_cells: cells,
            occupied_cols,
            redy_units: units,
        });
    }

    let capacity = hierarchy.apu_capacity();
    if total_arrays > capacity {
        let over = per_layer
            .iter()
            .rev()
            .find(|p| p.arrays > 0)
            .map_or(0, |p| p.layer);
        return Err(Error::ChipCapacity {
            layer: over,
            needed: total_arrays,
            capacity,
        });
    }

    let cell_capacity = (total_arrays as u64) * (cfg.rows as u64) * (cfg.cols as u64);
    let memory_utilization = if cell_capacity == 0 {
        0.0
    } else {
        programmed as f64 / cell_capacity as f64
    };
    let apus_used = total_arrays;
    let pes_used = apus_used.div_ceil(hierarchy.apus_per_pe);
    let tiles_used = pes_used.div_ceil(hierarchy.pes_per_tile);

    Ok(Floorplan {
        per_layer,
        total_arrays,
        apus_used,
        pes_used,
        tiles_used,
        memory_utilization,
        redy_units,
    })
}

/// Per-layer latency and the pipeline bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineEstimate {
    /// Cycles per inference for each layer (0 for non-analog layers).
    pub layer_cycles: Vec<f64>,
    pub bottleneck: usize,
    /// Inferences per cycle in steady state.
    pub throughput: f64,
    /// Baseline (all-8-bit) bottleneck latency over this latency.
    pub speedup: f64,
}

fn layer_cycles(plan: &LayerPlan, avg_bits: f64, adcs_per_xbar: usize) -> f64 {
    if plan.arrays == 0 {
        return 0.0;
    }
    // Conversions of one plane are serialized over the ADC pool of each
    // array; every array a group spans contributes its mux rounds.
    let mux_rounds: usize = plan
        .occupied_cols
        .iter()
        .map(|&occ| occ.div_ceil(adcs_per_xbar))
        .sum();
    let per_plane = (plan.row_segments * mux_rounds) as f64;
    plan.windows as f64 * plan.groups_per_window as f64 * avg_bits * per_plane
}

/// Latency/speedup model from per-layer average bitwidths. Excluded layers
/// keep 8-bit latency in both the dynamic and baseline pipelines.
pub fn estimate_pipeline(
    plan: &Floorplan,
    per_layer_avg_bits: &[f64],
    cfg: &CrossbarConfig,
) -> Result<PipelineEstimate> {
    if per_layer_avg_bits.len() != plan.per_layer.len() {
        return Err(Error::DimMismatch(format!(
            "{} bit averages for {} layers",
            per_layer_avg_bits.len(),
            plan.per_layer.len()
        )));
    }
    let mut cycles = Vec::with_capacity(plan.per_layer.len());
    let mut baseline = Vec::with_capacity(plan.per_layer.len());
    for (lp, &bits) in plan.per_layer.iter().zip(per_layer_avg_bits) {
        let effective = if lp.excluded || bits == 0.0 { 8.0 } else { bits };
        cycles.push(layer_cycles(lp, effective, cfg.adcs_per_xbar));
        baseline.push(layer_cycles(lp, 8.0, cfg.adcs_per_xbar));
    }
    let bottleneck = cycles
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map_or(0, |(i, _)| i);
    let max_cycles = cycles[bottleneck];
    let base_max = baseline.iter().copied().fold(0.0f64, f64::max);
    let throughput = if max_cycles > 0.0 { 1.0 / max_cycles } else { 0.0 };
    let speedup = if max_cycles > 0.0 { base_max / max_cycles } else { 1.0 };
    Ok(PipelineEstimate {
        layer_cycles: cycles,
        bottleneck,
        throughput,
        speedup,
    })
}

/// Energy of one run, split by source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub dynamic_crossbar_j: f64,
    pub dynamic_adc_j: f64,
    pub dynamic_buffer_j: f64,
    pub dynamic_redy_j: f64,
    pub static_j: f64,
    pub total_j: f64,
}

impl EnergyReport {
    pub fn normalized_against(&self, baseline: &EnergyReport) -> f64 {
        if baseline.total_j == 0.0 {
            1.0
        } else {
            self.total_j / baseline.total_j
        }
    }
}

/// Event energy plus static power over the wall time. `redy_units` is the
/// provisioned unit count (0 models the plain baseline chip).
pub fn estimate_energy(
    counters: &ActivityCounters,
    model: &EnergyModel,
    wall_cycles: f64,
    redy_units: u64,
) -> EnergyReport {
    let totals = counters.totals();
    let dynamic_crossbar_j = totals.crossbar_activations as f64 * model.e_xbar_event;
    let dynamic_adc_j = totals.adc_conversions as f64 * model.e_adc_conversion;
    let dynamic_buffer_j = totals.streamed_bits as f64 / 8.0 * model.e_buffer_per_byte;
    let dynamic_redy_j =
        (totals.redy_samples + totals.redy_decisions) as f64 * model.redy_op_energy();
    let wall_seconds = wall_cycles / model.frequency_hz();
    let static_w = model.chip_static_w + redy_units as f64 * model.redy_unit_static_uw * 1e-6;
    let static_j = static_w * wall_seconds;
    EnergyReport {
        dynamic_crossbar_j,
        dynamic_adc_j,
        dynamic_buffer_j,
        dynamic_redy_j,
        static_j,
        total_j: dynamic_crossbar_j + dynamic_adc_j + dynamic_buffer_j + dynamic_redy_j + static_j,
    }
}

/// Area added by the precision-decision units, as a fraction of the chip.
pub fn redy_area_overhead(model: &EnergyModel, redy_units: u64) -> f64 {
    if model.chip_area_um2 == 0.0 {
        0.0
    } else {
        redy_units as f64 * model.redy_unit_area_um2 / model.chip_area_um2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::LayerCounters;
    use crate::net::{Activation, Layer};
    use crate::tensor::Tensor;

    fn conv_net(c: usize, k: usize, w: usize, h: usize, r: usize) -> Network {
        let weights = Tensor::new(
            vec![r as u32, r as u32, c as u32, k as u32],
            vec![0.1; r * r * c * k],
        )
        .unwrap();
        Network::new(
            (w, h, c),
            vec![Layer {
                spec: LayerSpec::conv(r, r, c, k, 1, 0, Activation::None),
                weights: Some(weights),
            }],
        )
        .unwrap()
    }

    #[test]
    fn exact_fit_uses_one_full_array() {
        let net = conv_net(128, 32, 1, 1, 1);
        let plan =
            build_floorplan(&net, &CrossbarConfig::default(), &Hierarchy::default(), 8).unwrap();
        let lp = &plan.per_layer[0];
        assert_eq!(lp.arrays, 1);
        assert_eq!(plan.memory_utilization, 1.0);
    }

    #[test]
    fn deep_wide_layer_needs_four_arrays_per_position() {
        let net = conv_net(192, 48, 3, 3, 3);
        let plan =
            build_floorplan(&net, &CrossbarConfig::default(), &Hierarchy::default(), 8).unwrap();
        let lp = &plan.per_layer[0];
        assert_eq!(lp.row_segments, 2);
        assert_eq!(lp.col_segments, 2);
        assert_eq!(lp.arrays_per_position, 4);
        assert_eq!(lp.positions, 9);
        assert_eq!(lp.arrays, 36);
    }

    #[test]
    fn capacity_overflow_is_an_error() {
        let net = conv_net(128, 32, 8, 8, 3);
        let tiny = Hierarchy {
            apus_per_pe: 1,
            pes_per_tile: 1,
            tiles: 2,
        };
        assert!(matches!(
            build_floorplan(&net, &CrossbarConfig::default(), &tiny, 8),
            Err(Error::ChipCapacity { .. })
        ));
    }

    #[test]
    fn unit_counts_follow_stride_and_window() {
        let spec = LayerSpec::conv(3, 3, 64, 8, 1, 0, Activation::Relu);
        assert_eq!(redy_unit_count(&spec, false), 9);
        let strided = LayerSpec::conv(3, 3, 64, 8, 2, 0, Activation::Relu);
        assert_eq!(redy_unit_count(&strided, false), 18);
        assert_eq!(redy_unit_count(&spec, true), 0);
    }

    #[test]
    fn zero_counters_zero_energy() {
        let counters = ActivityCounters::with_layers(1);
        let report = estimate_energy(&counters, &EnergyModel::default(), 0.0, 0);
        assert_eq!(report.total_j, 0.0);
    }

    #[test]
    fn dynamic_only_energy_tracks_activity() {
        let mut counters = ActivityCounters::with_layers(1);
        counters.layers[0] = LayerCounters {
            crossbar_activations: 600,
            adc_conversions: 600 * 128,
            streamed_bits: 600 * 64,
            group_array_units: 100,
            ..Default::default()
        };
        let mut baseline = ActivityCounters::with_layers(1);
        baseline.layers[0] = LayerCounters {
            crossbar_activations: 800,
            adc_conversions: 800 * 128,
            streamed_bits: 800 * 64,
            group_array_units: 100,
            ..Default::default()
        };
        let model = EnergyModel {
            e_buffer_per_byte: 0.0,
            chip_static_w: 0.0,
            ..Default::default()
        };
        let dynamic = estimate_energy(&counters, &model, 0.0, 0);
        let base = estimate_energy(&baseline, &model, 0.0, 0);
        let normalized = dynamic.normalized_against(&base);
        assert!((normalized - 600.0 / 800.0).abs() < 1e-12);
    }
}
