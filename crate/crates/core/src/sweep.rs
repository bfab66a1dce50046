//! Sensitivity sweep over histogram bin counts and subsample ratios.
//!
//! Each cell re-decides every group of the corpus with the scaled
//! thresholds, in both histogram modes, without streaming the crossbars.
//! Two divergences are reported per cell: exponent mode against exact mode
//! at the same configuration, and exact mode against the exact-mode
//! reference at the finest swept bin count (decisions converge to that
//! reference as bins grow).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::net::{self, GroupId, LayerKind, Mapping, Network};
use crate::par;
use crate::quant::ValueRange;
use crate::redy::{
    decide_group, du_max, HistogramConfig, HistogramMode, PrecisionDecision, PrecisionThresholds,
};
use crate::tensor::Tensor;
use crate::xbar::CrossbarConfig;

pub const DEFAULT_BINS_GRID: [usize; 5] = [2, 4, 8, 16, 32];
pub const DEFAULT_RATIO_GRID: [f64; 5] = [1.0, 0.5, 0.25, 0.10, 0.05];

/// One sweep configuration and its aggregate results.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub bins: usize,
    pub subsample_ratio: f64,
    pub average_bits: f64,
    pub activity_reduction: f64,
    /// Fraction of groups whose exponent-mode decision differs from the
    /// exact-mode decision at this configuration.
    pub divergence_exponent_vs_exact: f64,
    /// Fraction of groups whose exact-mode decision differs from the
    /// exact-mode decision at the finest swept bin count (same ratio).
    pub divergence_vs_reference: f64,
}

/// Thresholds rescaled so the five cut points keep their relative position
/// inside the DU range `[0, 2(b-1)/b]` of a different bin count.
pub fn scale_thresholds(base: &PrecisionThresholds, bins: usize) -> PrecisionThresholds {
    let factor = du_max(bins) / du_max(8);
    let mut p = base.p;
    for v in &mut p {
        *v *= factor;
    }
    PrecisionThresholds { p }
}

struct CellDecisions {
    exact: Vec<PrecisionDecision>,
    exponent: Vec<PrecisionDecision>,
    /// Arrays spanned per group, aligned with `exact`.
    array_units: Vec<u64>,
}

fn decide_corpus(
    net: &Network,
    ranges: &[ValueRange],
    flows: &[Vec<Tensor>],
    bins: usize,
    ratio: f64,
    thresholds: &PrecisionThresholds,
    crossbar: &CrossbarConfig,
) -> Result<CellDecisions> {
    let per_input = par::try_map_indexed(flows.len(), |ii| {
        let flow = &flows[ii];
        let mut exact = Vec::new();
        let mut exponent = Vec::new();
        let mut array_units = Vec::new();
        for (li, layer) in net.layers.iter().enumerate() {
            if !layer.spec.is_analog() {
                continue;
            }
            let spec = &layer.spec;
            let ifmap = if spec.kind == LayerKind::Fc {
                flow[li].flattened()
            } else {
                flow[li].clone()
            };
            let depth_c = ifmap.fmap_dims()?.2;
            let excluded = depth_c < bins;
            let (mapping, depth) = if excluded {
                (Mapping::Conventional, spec.r * spec.s * depth_c)
            } else {
                (Mapping::Channelwise, depth_c)
            };
            let arrays = (depth.div_ceil(crossbar.rows)
                * spec.k.div_ceil(crossbar.kernels_per_array())) as u64;
            let cfg = HistogramConfig::from_range(bins, ratio, ranges[li])?;
            let groups = net::extract_groups(&ifmap, spec, mapping, li as u32)?;
            for group in groups {
                // Group ids repeat across inputs; salt the window with the
                // input index so the corpus-wide comparison stays aligned.
                let id = GroupId {
                    window_x: group.id.window_x + (ii as u32) << 16,
                    ..group.id
                };
                exact.push(decide_group(
                    &group.values,
                    id,
                    &cfg,
                    HistogramMode::Exact,
                    thresholds,
                )?);
                exponent.push(decide_group(
                    &group.values,
                    id,
                    &cfg,
                    HistogramMode::Exponent,
                    thresholds,
                )?);
                array_units.push(arrays);
            }
        }
        Ok((exact, exponent, array_units))
    })?;
    let mut exact = Vec::new();
    let mut exponent = Vec::new();
    let mut array_units = Vec::new();
    for (e, x, a) in per_input {
        exact.extend(e);
        exponent.extend(x);
        array_units.extend(a);
    }
    Ok(CellDecisions {
        exact,
        exponent,
        array_units,
    })
}

fn disagreement(a: &[PrecisionDecision], b: &[PrecisionDecision]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::MismatchedGroups);
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let changed = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.bitwidth != y.bitwidth)
        .count();
    Ok(changed as f64 / a.len() as f64)
}

/// Runs the decision sweep over `bins_grid` x `ratio_grid` on a fixed corpus.
pub fn run_sweep(
    net: &Network,
    ranges: &[ValueRange],
    inputs: &[Tensor],
    base_thresholds: &PrecisionThresholds,
    bins_grid: &[usize],
    ratio_grid: &[f64],
    crossbar: &CrossbarConfig,
) -> Result<Vec<SweepCell>> {
    if inputs.is_empty() {
        return Err(Error::Config("sweep needs at least one input".into()));
    }
    let flows = par::try_map_indexed(inputs.len(), |i| net::forward_float(net, &inputs[i]))?;
    let reference_bins = bins_grid.iter().copied().max().unwrap_or(8);

    let mut cells = Vec::with_capacity(bins_grid.len() * ratio_grid.len());
    for &ratio in ratio_grid {
        let reference = decide_corpus(
            net,
            ranges,
            &flows,
            reference_bins,
            ratio,
            &scale_thresholds(base_thresholds, reference_bins),
            crossbar,
        )?;
        for &bins in bins_grid {
            let thresholds = scale_thresholds(base_thresholds, bins);
            let cell = decide_corpus(net, ranges, &flows, bins, ratio, &thresholds, crossbar)?;
            let mut bits_weighted = 0u64;
            let mut units = 0u64;
            let mut bits_sum = 0u64;
            for (d, &a) in cell.exact.iter().zip(&cell.array_units) {
                bits_weighted += u64::from(d.bitwidth) * a;
                units += a;
                bits_sum += u64::from(d.bitwidth);
            }
            cells.push(SweepCell {
                bins,
                subsample_ratio: ratio,
                average_bits: bits_sum as f64 / cell.exact.len() as f64,
                activity_reduction: 1.0 - bits_weighted as f64 / (8 * units) as f64,
                divergence_exponent_vs_exact: disagreement(&cell.exponent, &cell.exact)?,
                divergence_vs_reference: disagreement(&cell.exact, &reference.exact)?,
            });
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn scaled_thresholds_stay_valid() {
        let base = PrecisionThresholds::default_grid_center();
        for bins in [2usize, 4, 8, 16, 32] {
            let t = scale_thresholds(&base, bins);
            t.validate(bins).unwrap();
        }
    }

    #[test]
    fn sweep_covers_the_grid() {
        let net = fixtures::small_net(31);
        let inputs: Vec<Tensor> = (0..2)
            .map(|i| fixtures::random_input(net.input_dims, 600 + i))
            .collect();
        let ranges = net::calibrate_ranges(&net, &inputs).unwrap();
        let cells = run_sweep(
            &net,
            &ranges,
            &inputs,
            &PrecisionThresholds::default_grid_center(),
            &[2, 8],
            &[1.0, 0.5],
            &CrossbarConfig::default(),
        )
        .unwrap();
        assert_eq!(cells.len(), 4);
        // The reference cell agrees with itself.
        let top = cells
            .iter()
            .find(|c| c.bins == 8 && c.subsample_ratio == 1.0)
            .unwrap();
        assert_eq!(top.divergence_vs_reference, 0.0);
    }
}
