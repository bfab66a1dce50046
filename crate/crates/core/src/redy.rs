//! Dynamic per-group precision selection.
//!
//! For each channel-wise group of activations the pipeline is: subsample,
//! histogram against the layer range, score the histogram's deviation from
//! a uniform distribution (DU), then decode DU into a bitwidth through five
//! thresholds. Groups shallower than the bin count skip the heuristic and
//! stay at 8 bits; their layers use the conventional mapping.
//!
//! Two histogram modes are provided. `Exact` compares values against the
//! real bin edges and is the reference semantics. `Exponent` compares the
//! integer exponents of the values against exponent-quantized edges, which
//! is what a comparator bank sees in hardware; its decisions can diverge
//! from exact mode and the divergence is reported, not hidden.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::GroupId;
use crate::quant::{self, QuantParams, ValueRange};

/// Relative slack when validating DU against its closed-form bound; DU is
/// accumulated in f64 from integer counts, so it can overshoot by rounding
/// only.
const DU_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistogramMode {
    Exact,
    Exponent,
}

/// Binning setup for one layer, derived from the layer's activation range.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramConfig {
    /// Bin count `b` (>= 2).
    pub bins: usize,
    /// `b - 1` ascending real edges inside the layer range.
    pub boundaries: Vec<f32>,
    /// `b - 1` non-decreasing integer exponent thresholds.
    pub exponent_boundaries: Vec<i32>,
    /// Fraction of the group that is histogrammed, in (0, 1].
    pub subsample_ratio: f64,
}

impl HistogramConfig {
    /// Equal-width edges over `range`; exponent thresholds are the floor
    /// log2 of the absolute edges, clamped at the smallest normal exponent
    /// and made non-decreasing (signed ranges can otherwise produce a dip
    /// around zero).
    pub fn from_range(bins: usize, subsample_ratio: f64, range: ValueRange) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config(format!("bins {bins} < 2")));
        }
        if !(subsample_ratio > 0.0 && subsample_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "subsample ratio {subsample_ratio} not in (0, 1]"
            )));
        }
        let span = f64::from(range.hi) - f64::from(range.lo);
        let boundaries: Vec<f32> = (1..bins)
            .map(|j| (f64::from(range.lo) + span * j as f64 / bins as f64) as f32)
            .collect();
        let mut exponent_boundaries = Vec::with_capacity(bins - 1);
        let mut running = i32::MIN;
        for &edge in &boundaries {
            let mag = f64::from(edge.abs()).max(2.0f64.powi(-126));
            let e = mag.log2().floor() as i32;
            running = running.max(e);
            exponent_boundaries.push(running);
        }
        Ok(Self {
            bins,
            boundaries,
            exponent_boundaries,
            subsample_ratio,
        })
    }

    /// Stride between sampled elements: every k-th element with
    /// `k = round(1/ratio)`, so a ratio of `1/k` samples `ceil(len/k)`
    /// elements deterministically.
    pub fn sample_stride(&self) -> usize {
        ((1.0 / self.subsample_ratio).round() as usize).max(1)
    }
}

/// Histogram of one (subsampled) group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupStats {
    pub hist: Vec<u64>,
    pub sampled_count: u64,
}

impl GroupStats {
    /// Expected per-bin count under a perfectly uniform distribution.
    pub fn expected_per_bin(&self) -> f64 {
        self.sampled_count as f64 / self.hist.len() as f64
    }

    pub fn bins(&self) -> usize {
        self.hist.len()
    }
}

/// Upper bound of the DU metric for `b` bins: all samples in one bin.
pub fn du_max(bins: usize) -> f64 {
    2.0 * (bins as f64 - 1.0) / bins as f64
}

/// Builds the histogram of a group under `cfg`, binning either exact values
/// or their integer exponents. Zero (and subnormal) values take the lowest
/// bin in exponent mode.
pub fn compute_histogram(group: &[f32], cfg: &HistogramConfig, mode: HistogramMode) -> Result<GroupStats> {
    if group.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut hist = vec![0u64; cfg.bins];
    let stride = cfg.sample_stride();
    let mut sampled = 0u64;
    let mut idx = 0;
    while idx < group.len() {
        let v = group[idx];
        let bin = match mode {
            HistogramMode::Exact => cfg.boundaries.partition_point(|&e| e <= v),
            HistogramMode::Exponent => {
                let mag = v.abs();
                if mag < f32::MIN_POSITIVE {
                    0
                } else {
                    // IEEE 754 exponent field; exact floor(log2 |v|) for normals.
                    let e = ((mag.to_bits() >> 23) & 0xff) as i32 - 127;
                    cfg.exponent_boundaries.partition_point(|&t| t <= e)
                }
            }
        };
        hist[bin] += 1;
        sampled += 1;
        idx += stride;
    }
    Ok(GroupStats {
        hist,
        sampled_count: sampled,
    })
}

/// Mean absolute deviation of the histogram from the uniform expectation,
/// normalized by the sample count. Zero for a perfectly flat histogram,
/// `2(b-1)/b` when everything lands in one bin.
pub fn deviation_from_uniform(stats: &GroupStats) -> Result<f64> {
    if stats.sampled_count == 0 {
        return Err(Error::EmptyGroup);
    }
    let ed = stats.expected_per_bin();
    let sum_abs: f64 = stats.hist.iter().map(|&h| (h as f64 - ed).abs()).sum();
    Ok(sum_abs / stats.sampled_count as f64)
}

/// The five descending DU thresholds that split `[0, 2(b-1)/b]` into the
/// 3..8-bit buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrecisionThresholds {
    pub p: [f64; 5],
}

impl PrecisionThresholds {
    pub fn new(p: [f64; 5]) -> Result<Self> {
        let t = Self { p };
        t.validate(8)?;
        Ok(t)
    }

    pub fn validate(&self, bins: usize) -> Result<()> {
        let hi = du_max(bins);
        for w in self.p.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::Config(format!(
                    "precision thresholds must be strictly descending, got {:?}",
                    self.p
                )));
            }
        }
        if !(self.p[4] > 0.0 && self.p[0] < hi) {
            return Err(Error::Config(format!(
                "precision thresholds must lie in (0, {hi}), got {:?}",
                self.p
            )));
        }
        Ok(())
    }

    /// Shipped starting point; network-specific values come from
    /// [`calibrate_thresholds`].
    pub fn default_grid_center() -> Self {
        Self {
            p: [1.40, 1.10, 0.80, 0.55, 0.35],
        }
    }

    /// Thresholds so low that any non-flat histogram decodes to 8 bits;
    /// returned when calibration finds no feasible tuple.
    pub fn force_max_precision() -> Self {
        Self {
            p: [5e-7, 4e-7, 3e-7, 2e-7, 1e-7],
        }
    }
}

/// Outcome of the precision heuristic for one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionDecision {
    pub group: GroupId,
    pub bitwidth: u8,
    pub du: f64,
    /// Group depth below the bin count forces 8 bits regardless of DU.
    pub forced: bool,
}

/// Decodes DU into a bitwidth. Groups with `depth < bins` always take
/// 8 bits; otherwise the DU interval `(p1, max]` maps to 8 and `[0, p5]`
/// to 3, with boundary values joining the lower-precision side.
pub fn decide_precision(
    du: f64,
    depth: usize,
    thresholds: &PrecisionThresholds,
    bins: usize,
) -> Result<u8> {
    let hi = du_max(bins);
    if !(du >= -DU_TOLERANCE && du <= hi * (1.0 + DU_TOLERANCE)) {
        return Err(Error::InvalidDu(du));
    }
    if depth < bins {
        return Ok(8);
    }
    let du = du.clamp(0.0, hi);
    let p = &thresholds.p;
    Ok(if du > p[0] {
        8
    } else if du > p[1] {
        7
    } else if du > p[2] {
        6
    } else if du > p[3] {
        5
    } else if du > p[4] {
        4
    } else {
        3
    })
}

/// Full per-group pipeline: histogram, DU, precision, uniform quantization
/// over the layer range at the chosen bitwidth.
pub fn redy_quantize_group(
    group: &[f32],
    id: GroupId,
    layer_range: ValueRange,
    cfg: &HistogramConfig,
    mode: HistogramMode,
    thresholds: &PrecisionThresholds,
) -> Result<(Vec<u8>, PrecisionDecision)> {
    let decision = decide_group(group, id, cfg, mode, thresholds)?;
    let params = QuantParams::from_range(decision.bitwidth, layer_range)?;
    let codes = quant::uniform_quantize(group, &params);
    Ok((codes, decision))
}

/// Precision decision alone (no quantization); the engine uses this to
/// assign bitwidths before streaming.
pub fn decide_group(
    group: &[f32],
    id: GroupId,
    cfg: &HistogramConfig,
    mode: HistogramMode,
    thresholds: &PrecisionThresholds,
) -> Result<PrecisionDecision> {
    if group.len() < cfg.bins {
        return Ok(PrecisionDecision {
            group: id,
            bitwidth: 8,
            du: 0.0,
            forced: true,
        });
    }
    let stats = compute_histogram(group, cfg, mode)?;
    let du = deviation_from_uniform(&stats)?;
    let bitwidth = decide_precision(du, group.len(), thresholds, cfg.bins)?;
    Ok(PrecisionDecision {
        group: id,
        bitwidth,
        du,
        forced: false,
    })
}

/// Fraction of groups whose bitwidth differs between two runs over the same
/// group ids (order-insensitive).
pub fn precision_variation(
    run_a: &[PrecisionDecision],
    run_b: &[PrecisionDecision],
) -> Result<f64> {
    if run_a.len() != run_b.len() {
        return Err(Error::MismatchedGroups);
    }
    if run_a.is_empty() {
        return Ok(0.0);
    }
    let mut sorted_a: Vec<(GroupId, u8)> = run_a.iter().map(|d| (d.group, d.bitwidth)).collect();
    let mut sorted_b: Vec<(GroupId, u8)> = run_b.iter().map(|d| (d.group, d.bitwidth)).collect();
    sorted_a.sort_unstable_by_key(|e| e.0);
    sorted_b.sort_unstable_by_key(|e| e.0);
    let mut changed = 0usize;
    for (a, b) in sorted_a.iter().zip(&sorted_b) {
        if a.0 != b.0 {
            return Err(Error::MismatchedGroups);
        }
        if a.1 != b.1 {
            changed += 1;
        }
    }
    Ok(changed as f64 / run_a.len() as f64)
}

/// Mixes a group index into the base seed (splitmix64 steps) so parallel
/// inputs and layers draw independent, reproducible streams.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut x = base ^ a.wrapping_mul(0x9e3779b97f4a7c15) ^ b.wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Random-assignment comparator: permutes the assigned bitwidths across the
/// groups of each layer (seeded), preserving every per-layer precision
/// multiset exactly.
pub fn random_precision_baseline(decisions: &[PrecisionDecision], seed: u64) -> Vec<PrecisionDecision> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut out = decisions.to_vec();
    let mut layers: Vec<u32> = decisions.iter().map(|d| d.group.layer).collect();
    layers.sort_unstable();
    layers.dedup();
    for layer in layers {
        let idx: Vec<usize> = (0..out.len())
            .filter(|&i| out[i].group.layer == layer)
            .collect();
        let mut bits: Vec<u8> = idx.iter().map(|&i| out[i].bitwidth).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::from(layer), 0));
        bits.shuffle(&mut rng);
        for (&i, &b) in idx.iter().zip(&bits) {
            out[i].bitwidth = b;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gid(layer: u32, x: u32, y: u32, r: u8, s: u8) -> GroupId {
        GroupId {
            layer,
            window_x: x,
            window_y: y,
            r,
            s,
        }
    }

    fn cfg(bins: usize, ratio: f64, lo: f32, hi: f32) -> HistogramConfig {
        HistogramConfig::from_range(bins, ratio, ValueRange::new(lo, hi).unwrap()).unwrap()
    }

    #[test]
    fn evenly_spread_values_fill_bins() {
        let c = cfg(8, 1.0, 0.0, 16.0);
        let values: Vec<f32> = (0..16).map(|i| i as f32).collect();
        let stats = compute_histogram(&values, &c, HistogramMode::Exact).unwrap();
        assert_eq!(stats.hist, vec![2; 8]);
        assert_eq!(stats.sampled_count, 16);
    }

    #[test]
    fn equal_values_fill_one_bin() {
        let c = cfg(8, 1.0, 0.0, 8.0);
        let values = vec![3.1f32; 24];
        let stats = compute_histogram(&values, &c, HistogramMode::Exact).unwrap();
        assert_eq!(stats.hist.iter().sum::<u64>(), 24);
        assert_eq!(stats.hist.iter().filter(|&&h| h > 0).count(), 1);
    }

    #[test]
    fn subsampling_takes_every_kth() {
        let c = cfg(8, 0.10, 0.0, 200.0);
        assert_eq!(c.sample_stride(), 10);
        let values: Vec<f32> = (0..192).map(|i| i as f32).collect();
        let stats = compute_histogram(&values, &c, HistogramMode::Exact).unwrap();
        // ceil(192 * 0.10) elements sampled.
        assert_eq!(stats.sampled_count, 20);
    }

    #[test]
    fn du_uniform_and_congested() {
        let uniform = GroupStats {
            hist: vec![2; 8],
            sampled_count: 16,
        };
        assert_eq!(deviation_from_uniform(&uniform).unwrap(), 0.0);

        let congested = GroupStats {
            hist: vec![16, 0, 0, 0, 0, 0, 0, 0],
            sampled_count: 16,
        };
        assert_eq!(deviation_from_uniform(&congested).unwrap(), 1.75);
    }

    #[test]
    fn du_hand_computed_example() {
        let stats = GroupStats {
            hist: vec![4, 4, 0, 0, 0, 0, 0, 0],
            sampled_count: 8,
        };
        // ED = 1; (|4-1| + |4-1| + 6*1) / 8 = 1.5
        assert_eq!(deviation_from_uniform(&stats).unwrap(), 1.5);
    }

    #[test]
    fn empty_stats_error() {
        let stats = GroupStats {
            hist: vec![0; 8],
            sampled_count: 0,
        };
        assert!(matches!(
            deviation_from_uniform(&stats),
            Err(Error::EmptyGroup)
        ));
    }

    #[test]
    fn shallow_groups_force_eight_bits() {
        let t = PrecisionThresholds::default_grid_center();
        assert_eq!(decide_precision(0.0, 3, &t, 8).unwrap(), 8);
        assert_eq!(decide_precision(1.2, 7, &t, 8).unwrap(), 8);
    }

    #[test]
    fn du_extremes_map_to_bucket_ends() {
        let t = PrecisionThresholds::default_grid_center();
        assert_eq!(decide_precision(0.0, 64, &t, 8).unwrap(), 3);
        assert_eq!(decide_precision(1.75, 64, &t, 8).unwrap(), 8);
    }

    #[test]
    fn boundary_values_take_lower_precision_side() {
        let t = PrecisionThresholds::default_grid_center();
        assert_eq!(decide_precision(1.40, 64, &t, 8).unwrap(), 7);
        assert_eq!(decide_precision(0.35, 64, &t, 8).unwrap(), 3);
        assert_eq!(decide_precision(0.3500001, 64, &t, 8).unwrap(), 4);
    }

    #[test]
    fn out_of_range_du_rejected() {
        let t = PrecisionThresholds::default_grid_center();
        assert!(matches!(
            decide_precision(1.9, 64, &t, 8),
            Err(Error::InvalidDu(_))
        ));
        assert!(matches!(
            decide_precision(-0.1, 64, &t, 8),
            Err(Error::InvalidDu(_))
        ));
    }

    #[test]
    fn thresholds_must_descend() {
        assert!(PrecisionThresholds::new([1.0, 1.0, 0.8, 0.5, 0.3]).is_err());
        assert!(PrecisionThresholds::new([1.4, 1.1, 0.8, 0.55, 0.35]).is_ok());
    }

    #[test]
    fn all_zero_group_is_congested() {
        let c = cfg(8, 1.0, 0.0, 4.0);
        let t = PrecisionThresholds::default_grid_center();
        let range = ValueRange::new(0.0, 4.0).unwrap();
        let (codes, decision) =
            redy_quantize_group(&[0.0; 32], gid(0, 0, 0, 0, 0), range, &c, HistogramMode::Exact, &t)
                .unwrap();
        assert_eq!(decision.bitwidth, 8);
        assert_eq!(decision.du, 1.75);
        assert!(codes.iter().all(|&c| c == 0));
    }

    #[test]
    fn shallow_group_codes_match_static_eight_bit() {
        let c = cfg(8, 1.0, 0.0, 1.0);
        let t = PrecisionThresholds::default_grid_center();
        let range = ValueRange::new(0.0, 1.0).unwrap();
        let values = [0.1f32, 0.5, 0.9];
        let (codes, decision) =
            redy_quantize_group(&values, gid(0, 0, 0, 0, 0), range, &c, HistogramMode::Exact, &t)
                .unwrap();
        assert!(decision.forced);
        let params = QuantParams::from_range(8, range).unwrap();
        assert_eq!(codes, quant::uniform_quantize(&values, &params));
    }

    #[test]
    fn exponent_mode_zero_goes_to_lowest_bin() {
        let c = cfg(8, 1.0, 0.0, 4.0);
        let stats =
            compute_histogram(&[0.0f32; 16], &c, HistogramMode::Exponent).unwrap();
        assert_eq!(stats.hist[0], 16);
    }

    #[test]
    fn variation_identical_and_disjoint() {
        let a = vec![
            PrecisionDecision { group: gid(0, 0, 0, 0, 0), bitwidth: 4, du: 0.2, forced: false },
            PrecisionDecision { group: gid(0, 1, 0, 0, 0), bitwidth: 6, du: 0.9, forced: false },
        ];
        assert_eq!(precision_variation(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b[0].bitwidth = 5;
        b[1].bitwidth = 7;
        assert_eq!(precision_variation(&a, &b).unwrap(), 1.0);
        let mut c = a.clone();
        c[0].group = gid(1, 0, 0, 0, 0);
        assert!(precision_variation(&a, &c).is_err());
    }

    #[test]
    fn baseline_preserves_multiset_and_can_reassign() {
        let decisions: Vec<PrecisionDecision> = [(0u32, 6u8), (1, 6), (2, 6), (3, 8)]
            .iter()
            .map(|&(x, bits)| PrecisionDecision {
                group: gid(0, x, 0, 0, 0),
                bitwidth: bits,
                du: 0.5,
                forced: false,
            })
            .collect();
        let mut saw_change = false;
        for seed in 0..16 {
            let permuted = random_precision_baseline(&decisions, seed);
            let mut before: Vec<u8> = decisions.iter().map(|d| d.bitwidth).collect();
            let mut after: Vec<u8> = permuted.iter().map(|d| d.bitwidth).collect();
            if before != after {
                saw_change = true;
            }
            before.sort_unstable();
            after.sort_unstable();
            assert_eq!(before, after);
        }
        assert!(saw_change, "no seed in 0..16 moved the 8-bit group");
    }

    #[test]
    fn baseline_single_group_unchanged() {
        let d = vec![PrecisionDecision {
            group: gid(0, 0, 0, 0, 0),
            bitwidth: 5,
            du: 0.4,
            forced: false,
        }];
        assert_eq!(random_precision_baseline(&d, 7)[0].bitwidth, 5);
    }
}
