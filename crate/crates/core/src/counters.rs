//! Activity accounting.
//!
//! Counting granularity: one crossbar activation is one bit plane applied to
//! one physical array; one A/D conversion is one column sensed per bit plane
//! (every column of the array, so ADC sharing changes latency but not the
//! count); streamed bits are wordline-bit events, i.e. bit planes times
//! occupied rows per array. All three scale linearly in the bit planes a
//! group streams, so baseline-vs-dynamic reduction ratios agree across
//! counters. Counters merge by addition, which keeps parallel runs exact.

use serde::Serialize;

/// Counters for one layer of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LayerCounters {
    pub crossbar_activations: u64,
    pub adc_conversions: u64,
    pub streamed_bits: u64,
    pub saturations: u64,
    /// Histogram samples processed by precision-decision units.
    pub redy_samples: u64,
    /// Precision decisions taken.
    pub redy_decisions: u64,
    /// Groups executed.
    pub groups: u64,
    /// Sum over executed groups of the physical arrays each spans; the
    /// 8-bit baseline for this layer is `8 * group_array_units` activations.
    pub group_array_units: u64,
    /// Sum over executed groups of the rows each streams into per bit plane
    /// (baseline streamed bits = `8 * group_row_units`).
    pub group_row_units: u64,
    /// Executed groups by assigned bitwidth (index = bitwidth, 3..=8 used).
    pub bits_hist: [u64; 9],
}

impl LayerCounters {
    pub fn merge(&mut self, other: &LayerCounters) {
        self.crossbar_activations += other.crossbar_activations;
        self.adc_conversions += other.adc_conversions;
        self.streamed_bits += other.streamed_bits;
        self.saturations += other.saturations;
        self.redy_samples += other.redy_samples;
        self.redy_decisions += other.redy_decisions;
        self.groups += other.groups;
        self.group_array_units += other.group_array_units;
        self.group_row_units += other.group_row_units;
        for (a, b) in self.bits_hist.iter_mut().zip(other.bits_hist.iter()) {
            *a += b;
        }
    }

    /// What a static 8-bit run of the same workload would have counted.
    pub fn baseline_equivalent(&self, cols: u64) -> LayerCounters {
        let mut base = LayerCounters {
            crossbar_activations: 8 * self.group_array_units,
            adc_conversions: 8 * self.group_array_units * cols,
            streamed_bits: 8 * self.group_row_units,
            saturations: 0,
            redy_samples: 0,
            redy_decisions: 0,
            groups: self.groups,
            group_array_units: self.group_array_units,
            group_row_units: self.group_row_units,
            bits_hist: [0; 9],
        };
        base.bits_hist[8] = self.groups;
        base
    }

    /// `1 - activations / (8-bit baseline activations)`; zero when nothing ran.
    pub fn activity_reduction(&self) -> f64 {
        let baseline = 8 * self.group_array_units;
        if baseline == 0 {
            0.0
        } else {
            1.0 - self.crossbar_activations as f64 / baseline as f64
        }
    }

    /// Mean assigned bitwidth over executed groups.
    pub fn average_bits(&self) -> f64 {
        if self.groups == 0 {
            return 0.0;
        }
        let weighted: u64 = self
            .bits_hist
            .iter()
            .enumerate()
            .map(|(bits, &n)| bits as u64 * n)
            .sum();
        weighted as f64 / self.groups as f64
    }
}

/// Per-layer counters of a full run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ActivityCounters {
    pub layers: Vec<LayerCounters>,
}

impl ActivityCounters {
    pub fn with_layers(n: usize) -> Self {
        Self {
            layers: vec![LayerCounters::default(); n],
        }
    }

    pub fn merge(&mut self, other: &ActivityCounters) {
        if self.layers.len() < other.layers.len() {
            self.layers.resize(other.layers.len(), LayerCounters::default());
        }
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            a.merge(b);
        }
    }

    pub fn totals(&self) -> LayerCounters {
        let mut total = LayerCounters::default();
        for l in &self.layers {
            total.merge(l);
        }
        total
    }

    /// Per-layer baseline equivalents (see [`LayerCounters::baseline_equivalent`]).
    pub fn baseline_equivalent(&self, cols: u64) -> ActivityCounters {
        ActivityCounters {
            layers: self
                .layers
                .iter()
                .map(|l| l.baseline_equivalent(cols))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_adds_fields() {
        let mut a = LayerCounters {
            crossbar_activations: 3,
            adc_conversions: 10,
            streamed_bits: 7,
            ..Default::default()
        };
        let b = LayerCounters {
            crossbar_activations: 2,
            adc_conversions: 4,
            streamed_bits: 1,
            ..Default::default()
        };
        a.merge(&b);
        assert_eq!(a.crossbar_activations, 5);
        assert_eq!(a.adc_conversions, 14);
        assert_eq!(a.streamed_bits, 8);
    }

    #[test]
    fn reduction_from_bit_planes() {
        let mut c = LayerCounters::default();
        // Two groups on one array each: 6 bits and 8 bits.
        c.crossbar_activations = 6 + 8;
        c.group_array_units = 2;
        c.groups = 2;
        c.bits_hist[6] = 1;
        c.bits_hist[8] = 1;
        assert!((c.activity_reduction() - (1.0 - 14.0 / 16.0)).abs() < 1e-15);
        assert_eq!(c.average_bits(), 7.0);
    }
}
