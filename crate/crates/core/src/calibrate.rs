//! Offline grid search for the five precision thresholds.
//!
//! Every descending 5-tuple drawn from a fixed candidate ladder is scored on
//! the calibration set: assigned bitwidths follow from each group's DU, the
//! cost is the mean bitwidth, and the constraint is the mean group
//! quantization RRMSE against an error budget. Per-group DU and per-bitwidth
//! RRMSE are computed once, so scoring a tuple is a table lookup.

use crate::error::{Error, Result};
use crate::net::{self, Mapping, Network};
use crate::par;
use crate::quant::{self, ValueRange};
use crate::redy::{
    compute_histogram, deviation_from_uniform, du_max, HistogramConfig, HistogramMode,
    PrecisionThresholds,
};

/// Candidate values for each threshold; contains the shipped defaults.
pub const THRESHOLD_LADDER: [f64; 12] = [
    1.60, 1.40, 1.25, 1.10, 0.95, 0.80, 0.65, 0.55, 0.45, 0.35, 0.25, 0.15,
];

/// Result of the grid search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCalibration {
    pub thresholds: PrecisionThresholds,
    /// False when no tuple met the budget and the max-precision tuple was
    /// returned instead.
    pub feasible: bool,
    /// Mean group RRMSE under the returned thresholds.
    pub mean_rrmse: f64,
    /// Mean assigned bitwidth under the returned thresholds.
    pub mean_bits: f64,
}

/// One calibration group reduced to what the search needs.
struct GroupScore {
    du: f64,
    /// Decision is forced to 8 bits (depth below the bin count).
    forced: bool,
    /// RRMSE at bitwidths 3..=8 (index 0 = 3 bits); NaN when the group is
    /// all-zero and relative error is undefined.
    rrmse: [f64; 6],
}

fn score_groups(
    net: &Network,
    inputs: &[crate::tensor::Tensor],
    ranges: &[ValueRange],
    bins: usize,
    subsample_ratio: f64,
) -> Result<Vec<GroupScore>> {
    let per_input = par::try_map_indexed(inputs.len(), |i| {
        let flow = net::forward_float(net, &inputs[i])?;
        let mut scores = Vec::new();
        for (li, layer) in net.layers.iter().enumerate() {
            if !layer.spec.is_analog() {
                continue;
            }
            let ifmap = if layer.spec.kind == crate::net::LayerKind::Fc {
                flow[li].flattened()
            } else {
                flow[li].clone()
            };
            let range = ranges[li];
            let depth = ifmap.fmap_dims()?.2;
            let forced = depth < bins;
            let mapping = if forced {
                Mapping::Conventional
            } else {
                Mapping::Channelwise
            };
            let cfg = HistogramConfig::from_range(bins, subsample_ratio, range)?;
            let groups = net::extract_groups(&ifmap, &layer.spec, mapping, li as u32)?;
            for group in groups {
                let du = if forced {
                    0.0
                } else {
                    let stats = compute_histogram(&group.values, &cfg, HistogramMode::Exact)?;
                    deviation_from_uniform(&stats)?
                };
                let mut rrmse = [f64::NAN; 6];
                for (bi, bits) in (3u8..=8).enumerate() {
                    let back = quant::quantize_roundtrip(&group.values, bits, range)?;
                    rrmse[bi] = match quant::rrmse(&group.values, &back) {
                        Ok(v) => v,
                        Err(Error::UndefinedRelativeError) => f64::NAN,
                        Err(e) => return Err(e),
                    };
                }
                scores.push(GroupScore { du, forced, rrmse });
            }
        }
        Ok(scores)
    })?;
    Ok(per_input.into_iter().flatten().collect())
}

fn bits_for(du: f64, forced: bool, p: &[f64; 5], du_hi: f64) -> u8 {
    if forced {
        return 8;
    }
    let du = du.clamp(0.0, du_hi);
    if du > p[0] {
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
    }
}

fn evaluate_tuple(scores: &[GroupScore], p: &[f64; 5], du_hi: f64) -> (f64, f64) {
    let mut bits_sum = 0u64;
    let mut rrmse_sum = 0.0f64;
    let mut rrmse_n = 0usize;
    for g in scores {
        let bits = bits_for(g.du, g.forced, p, du_hi);
        bits_sum += u64::from(bits);
        let e = g.rrmse[(bits - 3) as usize];
        if e.is_finite() {
            rrmse_sum += e;
            rrmse_n += 1;
        }
    }
    let mean_bits = bits_sum as f64 / scores.len() as f64;
    let mean_rrmse = if rrmse_n == 0 {
        0.0
    } else {
        rrmse_sum / rrmse_n as f64
    };
    (mean_bits, mean_rrmse)
}

/// All strictly descending 5-tuples over the ladder.
fn candidate_tuples() -> Vec<[f64; 5]> {
    let n = THRESHOLD_LADDER.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    for e in d + 1..n {
                        out.push([
                            THRESHOLD_LADDER[a],
                            THRESHOLD_LADDER[b],
                            THRESHOLD_LADDER[c],
                            THRESHOLD_LADDER[d],
                            THRESHOLD_LADDER[e],
                        ]);
                    }
                }
            }
        }
    }
    out
}

/// Searches the candidate grid for the thresholds with the lowest mean
/// bitwidth whose mean group RRMSE stays within `error_budget`. Ties break
/// to the lexicographically smallest tuple. With no feasible tuple the
/// max-precision tuple is returned with `feasible = false`.
pub fn calibrate_thresholds(
    net: &Network,
    calibration_inputs: &[crate::tensor::Tensor],
    error_budget: f64,
    bins: usize,
    subsample_ratio: f64,
) -> Result<ThresholdCalibration> {
    if calibration_inputs.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    if !(error_budget > 0.0) {
        return Err(Error::Config(format!(
            "error budget {error_budget} must be positive"
        )));
    }
    let ranges = net::calibrate_ranges(net, calibration_inputs)?;
    let scores = score_groups(net, calibration_inputs, &ranges, bins, subsample_ratio)?;
    if scores.is_empty() {
        return Err(Error::EmptyCalibration);
    }
    let du_hi = du_max(bins);
    let tuples = candidate_tuples();
    let evaluated = par::map_indexed(tuples.len(), |i| {
        let (mean_bits, mean_rrmse) = evaluate_tuple(&scores, &tuples[i], du_hi);
        (tuples[i], mean_bits, mean_rrmse)
    });

    let mut best: Option<([f64; 5], f64, f64)> = None;
    for (p, bits, rrmse) in evaluated {
        if rrmse > error_budget {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bp, bb, _)) => bits < *bb || (bits == *bb && p.as_slice() < bp.as_slice()),
        };
        if better {
            best = Some((p, bits, rrmse));
        }
    }

    match best {
        Some((p, bits, rrmse)) => Ok(ThresholdCalibration {
            thresholds: PrecisionThresholds { p },
            feasible: true,
            mean_rrmse: rrmse,
            mean_bits: bits,
        }),
        None => {
            let fallback = PrecisionThresholds::force_max_precision();
            let (bits, rrmse) = evaluate_tuple(&scores, &fallback.p, du_hi);
            Ok(ThresholdCalibration {
                thresholds: fallback,
                feasible: false,
                mean_rrmse: rrmse,
                mean_bits: bits,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn candidate_grid_size() {
        // C(12, 5)
        assert_eq!(candidate_tuples().len(), 792);
    }

    #[test]
    fn infinite_budget_takes_grid_minimum() {
        let net = fixtures::small_net(11);
        let inputs: Vec<_> = (0..3)
            .map(|i| fixtures::random_input(net.input_dims, 100 + i))
            .collect();
        let cal = calibrate_thresholds(&net, &inputs, f64::INFINITY, 8, 1.0).unwrap();
        assert!(cal.feasible);
        // Exhaustive check: no tuple achieves fewer mean bits.
        let ranges = net::calibrate_ranges(&net, &inputs).unwrap();
        let scores = score_groups(&net, &inputs, &ranges, 8, 1.0).unwrap();
        let min_bits = candidate_tuples()
            .iter()
            .map(|p| evaluate_tuple(&scores, p, du_max(8)).0)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(cal.mean_bits, min_bits);
    }

    #[test]
    fn zero_like_budget_is_infeasible() {
        let net = fixtures::small_net(12);
        let inputs = vec![fixtures::random_input(net.input_dims, 200)];
        let cal = calibrate_thresholds(&net, &inputs, 1e-12, 8, 1.0).unwrap();
        assert!(!cal.feasible);
        assert_eq!(
            cal.thresholds,
            PrecisionThresholds::force_max_precision()
        );
    }
}
