//! Functional crossbar model: weight programming into multi-bit cells,
//! bit-serial input streaming, per-column sensing and shift-and-add
//! recombination.
//!
//! Signed weights are stored offset-binary (`cell code = weight + 2^(n-1)`),
//! keeping every cell non-negative the way real conductances are. The offset
//! contribution is removed digitally after accumulation using the sum of the
//! streamed input codes, which hardware obtains from a popcount of each bit
//! plane. With an ideal ADC the recombined result equals the integer dot
//! product exactly, for any input bitwidth and occupancy.

use serde::{Deserialize, Serialize};

use crate::counters::LayerCounters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdcMode {
    /// Lossless capture; the accuracy-path default.
    Ideal,
    /// Saturate at `2^adc_bits - 1`.
    Clip,
    /// Requantize `[0, rows * (2^cell_bits - 1)]` to `2^adc_bits - 1` levels.
    Quantize,
}

/// Geometry and sensing parameters of one crossbar array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossbarConfig {
    pub rows: usize,
    pub cols: usize,
    /// Bits stored per ReRAM cell.
    pub cell_bits: u8,
    /// Bits per synaptic weight; must be divisible by `cell_bits`.
    pub weight_bits: u8,
    pub adc_bits: u8,
    pub adcs_per_xbar: usize,
    pub adc_mode: AdcMode,
}

impl Default for CrossbarConfig {
    fn default() -> Self {
        Self {
            rows: 128,
            cols: 128,
            cell_bits: 2,
            weight_bits: 8,
            adc_bits: 5,
            adcs_per_xbar: 16,
            adc_mode: AdcMode::Ideal,
        }
    }
}

impl CrossbarConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Config("crossbar dims must be positive".into()));
        }
        if self.cell_bits == 0 || self.weight_bits == 0 || self.weight_bits > 16 {
            return Err(Error::Config(format!(
                "invalid cell/weight bits {}/{}",
                self.cell_bits, self.weight_bits
            )));
        }
        if self.weight_bits % self.cell_bits != 0 {
            return Err(Error::Config(format!(
                "weight bits {} not divisible by cell bits {}",
                self.weight_bits, self.cell_bits
            )));
        }
        if self.slices_per_weight() > self.cols {
            return Err(Error::Config("weight slices exceed array columns".into()));
        }
        if self.adcs_per_xbar == 0 {
            return Err(Error::Config("adcs_per_xbar must be positive".into()));
        }
        Ok(())
    }

    pub fn slices_per_weight(&self) -> usize {
        (self.weight_bits / self.cell_bits) as usize
    }

    /// Kernels that fit one array without splitting a weight across arrays.
    pub fn kernels_per_array(&self) -> usize {
        self.cols / self.slices_per_weight()
    }

    /// Largest analog column sum the array can produce.
    pub fn max_column_sum(&self) -> u32 {
        self.rows as u32 * ((1u32 << self.cell_bits) - 1)
    }
}

/// Column sensing. `column_sum` is the analog bitline value for one plane.
pub fn adc_sample(column_sum: u32, cfg: &CrossbarConfig) -> u32 {
    match cfg.adc_mode {
        AdcMode::Ideal => column_sum,
        AdcMode::Clip => column_sum.min((1u32 << cfg.adc_bits) - 1),
        AdcMode::Quantize => {
            let levels = f64::from((1u32 << cfg.adc_bits) - 1);
            let max = f64::from(cfg.max_column_sum());
            if max == 0.0 {
                return 0;
            }
            let level = (f64::from(column_sum) * levels / max).round();
            (level * max / levels).round() as u32
        }
    }
}

/// Brings a partial sum produced at `group_bits` into the `max_bits` code
/// domain. Exact because scales are powers of two apart.
#[inline]
pub fn rescale_partial_sum(value: i64, group_bits: u8, max_bits: u8) -> i64 {
    debug_assert!(group_bits <= max_bits, "group bits above the maximum precision");
    value << (max_bits - group_bits)
}

/// Which weight a programmed column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSlot {
    /// Kernel index within the programmed matrix.
    pub kernel: usize,
    /// Slice index, 0 = most significant.
    pub slice: usize,
}

/// One physical array programmed with a row segment x kernel segment of a
/// weight matrix.
#[derive(Debug, Clone)]
pub struct ProgrammedArray {
    pub rows: usize,
    pub cols: usize,
    pub cell_bits: u8,
    pub slices: usize,
    /// Added to every weight before slicing (0 for unsigned matrices).
    pub weight_offset: i64,
    /// First input element this array's rows consume.
    pub row_start: usize,
    pub occupied_rows: usize,
    /// Occupied columns in order; unused columns hold zero cells.
    pub columns: Vec<ColumnSlot>,
    /// Dense `rows x cols` cell codes.
    pub cells: Vec<u8>,
}

impl ProgrammedArray {
    pub fn occupied_cols(&self) -> usize {
        self.columns.len()
    }

    /// Kernel indices this array holds (all slices of each).
    pub fn kernel_range(&self) -> (usize, usize) {
        let first = self.columns.first().map_or(0, |c| c.kernel);
        let last = self.columns.last().map_or(0, |c| c.kernel);
        (first, last + 1)
    }
}

/// Splits a weight's offset-binary code into per-cell digits, most
/// significant slice first.
fn slice_code(code: u64, cell_bits: u8, slices: usize) -> impl Iterator<Item = u8> {
    let mask = (1u64 << cell_bits) - 1;
    (0..slices).map(move |j| {
        let shift = cell_bits as u64 * (slices - 1 - j) as u64;
        ((code >> shift) & mask) as u8
    })
}

/// Programs a `kernels x depth` weight-code matrix into arrays.
///
/// `kernels[k][i]` is the code of kernel `k` at input position `i`. Signed
/// codes must lie in `[-2^(w-1), 2^(w-1) - 1]` and are stored offset-binary;
/// unsigned codes in `[0, 2^w - 1]` are stored as-is. Weights deeper than
/// the array span multiple row segments; kernels wider than one array spill
/// into further column segments, never splitting one weight's slices.
pub fn program_weights(
    kernels: &[Vec<i64>],
    cfg: &CrossbarConfig,
    signed: bool,
) -> Result<Vec<ProgrammedArray>> {
    cfg.validate()?;
    if kernels.is_empty() {
        return Err(Error::Config("no kernels to program".into()));
    }
    let depth = kernels[0].len();
    if depth == 0 || kernels.iter().any(|k| k.len() != depth) {
        return Err(Error::DimMismatch("kernel columns differ in depth".into()));
    }
    let offset: i64 = if signed {
        1i64 << (cfg.weight_bits - 1)
    } else {
        0
    };
    let max_code = (1i64 << cfg.weight_bits) - 1;
    for k in kernels {
        for &code in k {
            let shifted = code + offset;
            if shifted < 0 || shifted > max_code {
                return Err(Error::WeightCodeRange(code));
            }
        }
    }

    let slices = cfg.slices_per_weight();
    let per_array = cfg.kernels_per_array();
    let row_segments = depth.div_ceil(cfg.rows);
    let col_segments = kernels.len().div_ceil(per_array);

    let mut arrays = Vec::with_capacity(row_segments * col_segments);
    for rs in 0..row_segments {
        let row_start = rs * cfg.rows;
        let occupied_rows = (depth - row_start).min(cfg.rows);
        for cs in 0..col_segments {
            let k_start = cs * per_array;
            let k_end = (k_start + per_array).min(kernels.len());
            let mut columns = Vec::with_capacity((k_end - k_start) * slices);
            let mut cells = vec![0u8; cfg.rows * cfg.cols];
            for (local_k, k) in (k_start..k_end).enumerate() {
                for (j, _) in (0..slices).enumerate() {
                    columns.push(ColumnSlot { kernel: k, slice: j });
                }
                for r in 0..occupied_rows {
                    let code = (kernels[k][row_start + r] + offset) as u64;
                    for (j, digit) in slice_code(code, cfg.cell_bits, slices).enumerate() {
                        cells[r * cfg.cols + local_k * slices + j] = digit;
                    }
                }
            }
            arrays.push(ProgrammedArray {
                rows: cfg.rows,
                cols: cfg.cols,
                cell_bits: cfg.cell_bits,
                slices,
                weight_offset: offset,
                row_start,
                occupied_rows,
                columns,
                cells,
            });
        }
    }
    Ok(arrays)
}

/// Streams `input_bits`-bit codes through one array bit-serially and
/// recombines the sensed column sums.
///
/// Returns the dot product of the inputs with each kernel held by this
/// array (offset contribution already removed digitally). Counters advance
/// by one crossbar activation per plane, one conversion per column per
/// plane, and one streamed bit per occupied row per plane.
pub fn mvm_bit_serial(
    array: &ProgrammedArray,
    inputs: &[u8],
    input_bits: u8,
    cfg: &CrossbarConfig,
    counters: &mut LayerCounters,
) -> Result<Vec<i64>> {
    if inputs.len() > array.rows {
        return Err(Error::RowOverflow {
            len: inputs.len(),
            rows: array.rows,
        });
    }
    debug_assert!(input_bits >= 1 && input_bits <= 8);

    let (k_first, k_last) = array.kernel_range();
    let n_kernels = k_last - k_first;
    let mut per_column = vec![0i64; array.columns.len()];
    let mut input_code_sum = 0i64;

    for t in (0..input_bits).rev() {
        // Wordline plane: bit t of every streamed code.
        for (ci, _) in array.columns.iter().enumerate() {
            let mut column_sum = 0u32;
            for (r, &code) in inputs.iter().enumerate() {
                if (code >> t) & 1 == 1 {
                    column_sum += u32::from(array.cells[r * array.cols + ci]);
                }
            }
            per_column[ci] += i64::from(adc_sample(column_sum, cfg)) << t;
        }
        counters.crossbar_activations += 1;
        counters.adc_conversions += array.cols as u64;
        counters.streamed_bits += array.occupied_rows as u64;
    }
    for &code in inputs {
        input_code_sum += i64::from(code);
    }

    // Shift-and-add across the cell slices of each kernel, then remove the
    // offset-binary contribution.
    let mut out = vec![0i64; n_kernels];
    for (ci, slot) in array.columns.iter().enumerate() {
        let shift = array.cell_bits as u32 * (array.slices - 1 - slot.slice) as u32;
        out[slot.kernel - k_first] += per_column[ci] << shift;
    }
    for v in &mut out {
        *v -= array.weight_offset * input_code_sum;
    }
    Ok(out)
}

/// Runs a full group (possibly spanning several row segments) through its
/// programmed arrays and accumulates per-kernel dot products.
pub fn mvm_group(
    arrays: &[ProgrammedArray],
    codes: &[u8],
    input_bits: u8,
    n_kernels: usize,
    cfg: &CrossbarConfig,
    counters: &mut LayerCounters,
) -> Result<Vec<i64>> {
    let mut totals = vec![0i64; n_kernels];
    for array in arrays {
        let end = (array.row_start + array.occupied_rows).min(codes.len());
        if array.row_start >= codes.len() {
            return Err(Error::DimMismatch(format!(
                "group of {} codes does not reach row segment at {}",
                codes.len(),
                array.row_start
            )));
        }
        let segment = &codes[array.row_start..end];
        let partial = mvm_bit_serial(array, segment, input_bits, cfg, counters)?;
        let (k_first, _) = array.kernel_range();
        for (i, v) in partial.into_iter().enumerate() {
            totals[k_first + i] += v;
        }
    }
    Ok(totals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rows: usize, cols: usize, cell_bits: u8, weight_bits: u8) -> CrossbarConfig {
        CrossbarConfig {
            rows,
            cols,
            cell_bits,
            weight_bits,
            ..Default::default()
        }
    }

    #[test]
    fn zero_weight_programs_zero_cells() {
        let c = cfg(4, 8, 2, 8);
        let arrays = program_weights(&[vec![0, 0]], &c, false).unwrap();
        assert_eq!(arrays.len(), 1);
        assert!(arrays[0].cells.iter().all(|&x| x == 0));
    }

    #[test]
    fn slicing_is_msb_first() {
        let digits: Vec<u8> = slice_code(0b1011_0011, 2, 4).collect();
        assert_eq!(digits, vec![2, 3, 0, 3]);
    }

    #[test]
    fn deep_group_spans_two_arrays() {
        let c = cfg(128, 128, 2, 8);
        let kernels = vec![vec![1i64; 192]; 48];
        let arrays = program_weights(&kernels, &c, false).unwrap();
        // 2 row segments x ceil(48*4/128) = 2 column segments.
        assert_eq!(arrays.len(), 4);
        assert_eq!(arrays[0].occupied_rows, 128);
        assert_eq!(arrays[2].occupied_rows, 64);
    }

    #[test]
    fn hand_traced_two_bit_mvm() {
        // rows x kernels = [[1, 2], [3, 1]], inputs [3, 1]:
        // MSB plane [1, 0] -> sums [1, 2]; LSB plane [1, 1] -> [4, 3];
        // 2*[1, 2] + [4, 3] = [6, 7].
        let c = cfg(2, 2, 2, 2);
        let kernels = vec![vec![1i64, 3], vec![2, 1]];
        let arrays = program_weights(&kernels, &c, false).unwrap();
        assert_eq!(arrays.len(), 1);
        let mut counters = LayerCounters::default();
        let out = mvm_bit_serial(&arrays[0], &[3, 1], 2, &c, &mut counters).unwrap();
        assert_eq!(out, vec![6, 7]);
    }

    #[test]
    fn zero_input_still_counts_planes() {
        let c = cfg(2, 2, 2, 2);
        let arrays = program_weights(&[vec![1, 3], vec![2, 1]], &c, false).unwrap();
        let mut counters = LayerCounters::default();
        let out = mvm_bit_serial(&arrays[0], &[0, 0], 2, &c, &mut counters).unwrap();
        assert_eq!(out, vec![0, 0]);
        assert_eq!(counters.crossbar_activations, 2);
        assert_eq!(counters.adc_conversions, 2 * 2);
        assert_eq!(counters.streamed_bits, 2 * 2);
    }

    #[test]
    fn signed_weights_round_trip() {
        let c = cfg(8, 8, 2, 8);
        let kernels = vec![vec![-128i64, 127, -1, 0], vec![5, -5, 64, -64]];
        let arrays = program_weights(&kernels, &c, true).unwrap();
        let mut counters = LayerCounters::default();
        let inputs = [9u8, 3, 255, 17];
        let out = mvm_bit_serial(&arrays[0], &inputs, 8, &c, &mut counters).unwrap();
        for (k, kernel) in kernels.iter().enumerate() {
            let expect: i64 = kernel
                .iter()
                .zip(&inputs)
                .map(|(&w, &a)| w * i64::from(a))
                .sum();
            assert_eq!(out[k], expect);
        }
    }

    #[test]
    fn adc_modes() {
        let c = CrossbarConfig::default();
        assert_eq!(adc_sample(384, &c), 384);

        let clip = CrossbarConfig {
            adc_mode: AdcMode::Clip,
            ..c
        };
        assert_eq!(adc_sample(40, &clip), 31);
        assert_eq!(adc_sample(12, &clip), 12);

        let quant = CrossbarConfig {
            adc_mode: AdcMode::Quantize,
            ..c
        };
        // level = round(192 * 31 / 384) = 16; reconstructed round(16 * 384 / 31) = 198.
        assert_eq!(adc_sample(192, &quant), 198);
    }

    #[test]
    fn rescale_is_a_left_shift() {
        assert_eq!(rescale_partial_sum(5, 6, 8), 20);
        assert_eq!(rescale_partial_sum(5, 8, 8), 5);
        assert_eq!(rescale_partial_sum(-3, 3, 8), -96);
    }

    #[test]
    fn out_of_range_code_rejected() {
        let c = cfg(4, 8, 2, 8);
        assert!(matches!(
            program_weights(&[vec![300]], &c, true),
            Err(Error::WeightCodeRange(300))
        ));
    }

    #[test]
    fn overlong_input_rejected() {
        let c = cfg(2, 2, 2, 2);
        let arrays = program_weights(&[vec![1, 1]], &c, false).unwrap();
        let mut counters = LayerCounters::default();
        assert!(mvm_bit_serial(&arrays[0], &[1, 2, 3], 2, &c, &mut counters).is_err());
    }
}
