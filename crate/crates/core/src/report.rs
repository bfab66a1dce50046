//! Machine-readable and human-readable run reports.
//!
//! The JSON report is built from plain structs with a fixed field order and
//! no timestamps, so identical runs serialize to identical bytes. The text
//! table lists the per-precision breakdown rows first, then the summary
//! metrics, mirroring how the results are usually tabulated.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::accel::{
    estimate_energy, estimate_pipeline, redy_area_overhead, Floorplan, PipelineEstimate,
};
use crate::config::RunConfig;
use crate::counters::ActivityCounters;
use crate::error::Result;
use crate::exec::{Policy, RrmseAgg};
use crate::redy::HistogramMode;

pub const SCHEMA_VERSION: u32 = 1;

/// Share of groups at each bitwidth, in percent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Breakdown {
    pub bits_8: f64,
    pub bits_7: f64,
    pub bits_6: f64,
    pub bits_5: f64,
    pub bits_4: f64,
    pub bits_3: f64,
}

impl Breakdown {
    fn from_hist(hist: &[u64; 9], groups: u64) -> Self {
        if groups == 0 {
            return Self::default();
        }
        let pct = |bits: usize| hist[bits] as f64 / groups as f64 * 100.0;
        Self {
            bits_8: pct(8),
            bits_7: pct(7),
            bits_6: pct(6),
            bits_5: pct(5),
            bits_4: pct(4),
            bits_3: pct(3),
        }
    }

    pub fn shares(&self) -> [(u8, f64); 6] {
        [
            (8, self.bits_8),
            (7, self.bits_7),
            (6, self.bits_6),
            (5, self.bits_5),
            (4, self.bits_4),
            (3, self.bits_3),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerReport {
    pub layer: usize,
    pub kind: String,
    pub excluded: bool,
    pub groups: u64,
    pub breakdown: Breakdown,
    pub average_bits: f64,
    pub activity_reduction: f64,
    pub crossbar_activations: u64,
    pub adc_conversions: u64,
    pub streamed_bits: u64,
    pub saturations: u64,
    pub rrmse_mean: Option<f64>,
    pub rrmse_max: Option<f64>,
    pub latency_cycles: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub groups: u64,
    pub breakdown: Breakdown,
    pub average_bits: f64,
    pub activity_reduction: f64,
    pub saturations: u64,
    pub precision_variation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyBlock {
    pub dynamic_crossbar_j: f64,
    pub dynamic_adc_j: f64,
    pub dynamic_buffer_j: f64,
    pub dynamic_redy_j: f64,
    pub static_j: f64,
    pub total_j: f64,
    pub baseline_total_j: f64,
    /// Total energy over the implied static-8-bit baseline.
    pub normalized: f64,
    pub redy_area_overhead: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineBlock {
    pub bottleneck_layer: usize,
    pub bottleneck_cycles: f64,
    pub throughput: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FloorplanBlock {
    pub total_arrays: usize,
    pub apus_used: usize,
    pub pes_used: usize,
    pub tiles_used: usize,
    pub memory_utilization: f64,
    pub redy_units: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub policy: String,
    pub histogram_mode: String,
    pub seed: u64,
    pub inputs: usize,
    pub layers: Vec<LayerReport>,
    pub totals: Totals,
    pub energy: EnergyBlock,
    pub pipeline: PipelineBlock,
    pub floorplan: FloorplanBlock,
}

fn mode_name(mode: HistogramMode) -> &'static str {
    match mode {
        HistogramMode::Exact => "exact",
        HistogramMode::Exponent => "exponent",
    }
}

/// Assembles the report of one run.
pub fn build_report(
    cfg: &RunConfig,
    floorplan: &Floorplan,
    policy: Policy,
    n_inputs: usize,
    counters: &ActivityCounters,
    rrmse: &[RrmseAgg],
    precision_variation: Option<f64>,
) -> Result<Report> {
    let crossbar = &cfg.accelerator.crossbar;
    let energy_model = &cfg.accelerator.energy;

    let avg_bits: Vec<f64> = counters.layers.iter().map(|l| l.average_bits()).collect();
    let pipeline: PipelineEstimate = estimate_pipeline(floorplan, &avg_bits, crossbar)?;
    let base_pipeline =
        estimate_pipeline(floorplan, &vec![8.0; floorplan.per_layer.len()], crossbar)?;

    let wall_cycles = pipeline.layer_cycles[pipeline.bottleneck] * n_inputs as f64;
    let base_wall =
        base_pipeline.layer_cycles[base_pipeline.bottleneck] * n_inputs as f64;

    let redy_units = if policy == Policy::Static8 {
        0
    } else {
        floorplan.redy_units
    };
    let this_energy = estimate_energy(counters, energy_model, wall_cycles, redy_units);
    let baseline_counters = counters.baseline_equivalent(crossbar.cols as u64);
    let baseline_energy = estimate_energy(&baseline_counters, energy_model, base_wall, 0);

    let mut layers = Vec::with_capacity(counters.layers.len());
    for (li, lc) in counters.layers.iter().enumerate() {
        let plan = &floorplan.per_layer[li];
        let agg = rrmse.get(li).copied().unwrap_or_default();
        layers.push(LayerReport {
            layer: li,
            kind: format!("{:?}", plan.kind).to_lowercase(),
            excluded: plan.excluded,
            groups: lc.groups,
            breakdown: Breakdown::from_hist(&lc.bits_hist, lc.groups),
            average_bits: lc.average_bits(),
            activity_reduction: lc.activity_reduction(),
            crossbar_activations: lc.crossbar_activations,
            adc_conversions: lc.adc_conversions,
            streamed_bits: lc.streamed_bits,
            saturations: lc.saturations,
            rrmse_mean: agg.mean(),
            rrmse_max: (agg.count > 0).then_some(agg.max),
            latency_cycles: pipeline.layer_cycles[li],
        });
    }

    let total = counters.totals();
    let totals = Totals {
        groups: total.groups,
        breakdown: Breakdown::from_hist(&total.bits_hist, total.groups),
        average_bits: total.average_bits(),
        activity_reduction: total.activity_reduction(),
        saturations: total.saturations,
        precision_variation,
    };

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        policy: policy.name().to_string(),
        histogram_mode: mode_name(cfg.redy.histogram_mode).to_string(),
        seed: cfg.run.seed,
        inputs: n_inputs,
        layers,
        totals,
        energy: EnergyBlock {
            dynamic_crossbar_j: this_energy.dynamic_crossbar_j,
            dynamic_adc_j: this_energy.dynamic_adc_j,
            dynamic_buffer_j: this_energy.dynamic_buffer_j,
            dynamic_redy_j: this_energy.dynamic_redy_j,
            static_j: this_energy.static_j,
            total_j: this_energy.total_j,
            baseline_total_j: baseline_energy.total_j,
            normalized: this_energy.normalized_against(&baseline_energy),
            redy_area_overhead: redy_area_overhead(energy_model, redy_units),
        },
        pipeline: PipelineBlock {
            bottleneck_layer: pipeline.bottleneck,
            bottleneck_cycles: pipeline.layer_cycles[pipeline.bottleneck],
            throughput: pipeline.throughput,
            speedup: pipeline.speedup,
        },
        floorplan: FloorplanBlock {
            total_arrays: floorplan.total_arrays,
            apus_used: floorplan.apus_used,
            pes_used: floorplan.pes_used,
            tiles_used: floorplan.tiles_used,
            memory_utilization: floorplan.memory_utilization,
            redy_units: floorplan.redy_units,
        },
    })
}

pub fn to_json(report: &Report) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Aligned-column summary; one column per named report.
pub fn render_text(columns: &[(&str, &Report)]) -> String {
    let mut out = String::new();
    let label_w = 28;
    let col_w = 14;

    let mut header = format!("{:label_w$}", "Numerical Precision");
    for (name, _) in columns {
        let _ = write!(header, "{name:>col_w$}");
    }
    let rule = "-".repeat(header.len());
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "{rule}");

    let pct = |v: f64| format!("{v:.1}%");
    let rows: [(&str, Box<dyn Fn(&Report) -> String>); 5] = [
        ("8-bits", Box::new(move |r| pct(r.totals.breakdown.bits_8))),
        ("7-bits", Box::new(move |r| pct(r.totals.breakdown.bits_7))),
        ("6-bits", Box::new(move |r| pct(r.totals.breakdown.bits_6))),
        ("5-bits", Box::new(move |r| pct(r.totals.breakdown.bits_5))),
        (
            "Equal or Less than 4-bits",
            Box::new(move |r| pct(r.totals.breakdown.bits_4 + r.totals.breakdown.bits_3)),
        ),
    ];
    for (label, cell) in rows.iter() {
        let mut line = format!("{label:label_w$}");
        for (_, r) in columns {
            let _ = write!(line, "{:>col_w$}", cell(r));
        }
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "{rule}");

    let metrics: [(&str, Box<dyn Fn(&Report) -> String>); 6] = [
        (
            "Average Bitwidth",
            Box::new(|r| format!("{:.2}-bits", r.totals.average_bits)),
        ),
        (
            "Activity Reduction",
            Box::new(|r| format!("{:.1}%", r.totals.activity_reduction * 100.0)),
        ),
        (
            "Normalized Energy",
            Box::new(|r| format!("{:.3}", r.energy.normalized)),
        ),
        ("Speedup", Box::new(|r| format!("{:.3}x", r.pipeline.speedup))),
        (
            "Precision Variation",
            Box::new(|r| match r.totals.precision_variation {
                Some(v) => format!("{:.1}%", v * 100.0),
                None => "n/a".to_string(),
            }),
        ),
        (
            "Memory Utilization",
            Box::new(|r| format!("{:.1}%", r.floorplan.memory_utilization * 100.0)),
        ),
    ];
    for (label, cell) in metrics.iter() {
        let mut line = format!("{label:label_w$}");
        for (_, r) in columns {
            let _ = write!(line, "{:>col_w$}", cell(r));
        }
        let _ = writeln!(out, "{line}");
    }

    // Per-layer detail of the first column.
    if let Some((_, first)) = columns.first() {
        if !first.layers.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:>5}  {:10} {:>8} {:>9} {:>10} {:>12} {:>10}",
                "layer", "kind", "groups", "avg bits", "act red", "rrmse mean", "saturated"
            );
            for l in &first.layers {
                let rrmse = l
                    .rrmse_mean
                    .map_or("n/a".to_string(), |v| format!("{:.4}%", v * 100.0));
                let _ = writeln!(
                    out,
                    "{:>5}  {:10} {:>8} {:>9.2} {:>9.1}% {:>12} {:>10}",
                    l.layer,
                    if l.excluded {
                        format!("{}*", l.kind)
                    } else {
                        l.kind.clone()
                    },
                    l.groups,
                    l.average_bits,
                    l.activity_reduction * 100.0,
                    rrmse,
                    l.saturations,
                );
            }
            let _ = writeln!(out, "(* = below bin count, statically 8-bit)");
        }
    }
    out
}

pub fn write_report(dir: &Path, name: &str, report: &Report) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(format!("{name}.json")), to_json(report))?;
    std::fs::write(
        dir.join(format!("{name}.txt")),
        render_text(&[(report.policy.as_str(), report)]),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counters::LayerCounters;

    #[test]
    fn breakdown_shares_sum_to_hundred() {
        let mut hist = [0u64; 9];
        hist[8] = 3;
        hist[6] = 5;
        hist[3] = 2;
        let b = Breakdown::from_hist(&hist, 10);
        let sum: f64 = b.shares().iter().map(|(_, s)| s).sum();
        assert!((sum - 100.0).abs() < 1e-9);
    }

    #[test]
    fn average_bits_matches_breakdown_dot_product() {
        let mut lc = LayerCounters::default();
        lc.groups = 8;
        lc.bits_hist[8] = 2;
        lc.bits_hist[5] = 6;
        let b = Breakdown::from_hist(&lc.bits_hist, lc.groups);
        let dot: f64 = b
            .shares()
            .iter()
            .map(|&(bits, share)| f64::from(bits) * share / 100.0)
            .sum();
        assert!((dot - lc.average_bits()).abs() < 1e-9);
    }

    #[test]
    fn single_precision_layer_reads_hundred_percent() {
        let mut hist = [0u64; 9];
        hist[8] = 4;
        let b = Breakdown::from_hist(&hist, 4);
        assert_eq!(b.bits_8, 100.0);
        assert_eq!(b.bits_7, 0.0);
    }
}
