//! Uniform quantization, dequantization and error metrics.
//!
//! Codes are unsigned integers in `[0, 2^n - 1]` over a per-layer value
//! range. The scale is `2^n / (hi - lo)`, so halving the bitwidth exactly
//! doubles the step and a partial sum produced at `n` bits can be brought
//! into the 8-bit domain with a plain left shift (see
//! [`crate::xbar::rescale_partial_sum`]).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive value range of a layer's input activations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueRange {
    pub lo: f32,
    pub hi: f32,
}

impl ValueRange {
    pub fn new(lo: f32, hi: f32) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Config(format!("invalid value range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Smallest range containing both operands (min/max merge; associative
    /// and commutative, so shards can be merged in any order).
    pub fn union(self, other: Self) -> Self {
        Self {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Grows the range to include `v`.
    pub fn include(&mut self, v: f32) {
        if v < self.lo {
            self.lo = v;
        }
        if v > self.hi {
            self.hi = v;
        }
    }

    pub fn span(&self) -> f32 {
        self.hi - self.lo
    }
}

/// Parameters of one uniform quantizer: `code = round(v * scale) - zero_point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    /// Bits per code, in `[1, 8]`.
    pub bitwidth: u8,
    /// Levels per unit of value; strictly positive.
    pub scale: f64,
    /// Integer offset subtracted after rounding so `lo` maps near code 0.
    pub zero_point: i32,
    /// Lowest representable code (always 0).
    pub clip_min: i32,
    /// Highest representable code (`2^bitwidth - 1`).
    pub clip_max: i32,
}

impl QuantParams {
    /// Builds the quantizer for `bitwidth` bits over `range`.
    ///
    /// A degenerate range (`hi == lo`) maps every value to code 0.
    pub fn from_range(bitwidth: u8, range: ValueRange) -> Result<Self> {
        if !(1..=8).contains(&bitwidth) {
            return Err(Error::Config(format!("bitwidth {bitwidth} not in [1, 8]")));
        }
        let span = (range.hi - range.lo) as f64;
        let scale = if span > 0.0 {
            f64::from(1u32 << bitwidth) / span
        } else {
            1.0
        };
        let zero_point = (f64::from(range.lo) * scale).round() as i32;
        Ok(Self {
            bitwidth,
            scale,
            zero_point,
            clip_min: 0,
            clip_max: (1i32 << bitwidth) - 1,
        })
    }

    /// Quantizes one value; the bool flags saturation at either clip bound.
    #[inline]
    pub fn quantize(&self, v: f32) -> (u8, bool) {
        // f64::round is round-half-away-from-zero.
        let raw = (f64::from(v) * self.scale).round() as i64 - i64::from(self.zero_point);
        let clipped = raw < i64::from(self.clip_min) || raw > i64::from(self.clip_max);
        let code = raw.clamp(i64::from(self.clip_min), i64::from(self.clip_max)) as u8;
        (code, clipped)
    }

    /// Inverse map: `(code + zero_point) / scale`.
    #[inline]
    pub fn dequantize(&self, code: u8) -> f32 {
        ((f64::from(code) + f64::from(self.zero_point)) / self.scale) as f32
    }
}

/// Quantizes a sequence; clipping is silent.
pub fn uniform_quantize(values: &[f32], params: &QuantParams) -> Vec<u8> {
    values.iter().map(|&v| params.quantize(v).0).collect()
}

/// Quantizes a sequence, adding the number of saturated elements to `saturations`.
pub fn uniform_quantize_counted(
    values: &[f32],
    params: &QuantParams,
    saturations: &mut u64,
) -> Vec<u8> {
    values
        .iter()
        .map(|&v| {
            let (code, clipped) = params.quantize(v);
            if clipped {
                *saturations += 1;
            }
            code
        })
        .collect()
}

/// Dequantizes a code sequence.
pub fn dequantize(codes: &[u8], params: &QuantParams) -> Vec<f32> {
    codes.iter().map(|&c| params.dequantize(c)).collect()
}

/// Relative root mean squared error of `approx` against `reference`,
/// as a fraction: `rms(reference - approx) / rms(reference)`.
pub fn rrmse(reference: &[f32], approx: &[f32]) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(Error::DimMismatch(format!(
            "rrmse over sequences of length {} and {}",
            reference.len(),
            approx.len()
        )));
    }
    let mut err_sq = 0.0f64;
    let mut ref_sq = 0.0f64;
    for (&r, &a) in reference.iter().zip(approx) {
        let d = f64::from(r) - f64::from(a);
        err_sq += d * d;
        ref_sq += f64::from(r) * f64::from(r);
    }
    if ref_sq == 0.0 {
        return Err(Error::UndefinedRelativeError);
    }
    Ok((err_sq / ref_sq).sqrt())
}

/// Round trip through quantize/dequantize at `bitwidth` bits over `range`.
pub fn quantize_roundtrip(values: &[f32], bitwidth: u8, range: ValueRange) -> Result<Vec<f32>> {
    let params = QuantParams::from_range(bitwidth, range)?;
    Ok(values.iter().map(|&v| params.dequantize(params.quantize(v).0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params(bits: u8) -> QuantParams {
        QuantParams::from_range(bits, ValueRange::new(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn quantize_midpoint_two_bits() {
        // scale = 4, z = 0
        let p = unit_params(2);
        assert_eq!(p.scale, 4.0);
        assert_eq!(p.zero_point, 0);
        assert_eq!(p.quantize(0.5), (2, false));
    }

    #[test]
    fn quantize_zero_maps_to_zero() {
        for bits in 1..=8 {
            let p = unit_params(bits);
            assert_eq!(p.quantize(0.0), (0, false));
        }
    }

    #[test]
    fn quantize_clamps_at_top_code() {
        let p = unit_params(2);
        // 1.0 * 4 rounds to 4, clipped to 2^2 - 1.
        assert_eq!(p.quantize(1.0), (3, true));
    }

    #[test]
    fn dequantize_inverts_code() {
        let p = unit_params(2);
        assert_eq!(p.dequantize(2), 0.5);
        assert_eq!(p.dequantize(0), 0.0);
    }

    #[test]
    fn roundtrip_error_within_half_step() {
        let range = ValueRange::new(0.0, 1.0).unwrap();
        let p = QuantParams::from_range(6, range).unwrap();
        for i in 0..100 {
            let v = i as f32 / 101.0;
            let (code, clipped) = p.quantize(v);
            assert!(!clipped);
            let back = p.dequantize(code);
            assert!((f64::from(back) - f64::from(v)).abs() <= 0.5 / p.scale + 1e-12);
        }
    }

    #[test]
    fn quantize_is_idempotent() {
        let range = ValueRange::new(0.0, 4.0).unwrap();
        let p = QuantParams::from_range(5, range).unwrap();
        for i in 0..200 {
            let v = i as f32 * 0.02;
            let once = p.quantize(v).0;
            let again = p.quantize(p.dequantize(once)).0;
            assert_eq!(once, again);
        }
    }

    #[test]
    fn saturation_counter_counts_clipped() {
        let p = unit_params(3);
        let mut sat = 0;
        let codes = uniform_quantize_counted(&[0.2, 1.5, -0.4, 0.9], &p, &mut sat);
        assert_eq!(codes.len(), 4);
        assert_eq!(sat, 2);
    }

    #[test]
    fn negative_lo_uses_zero_point() {
        let range = ValueRange::new(-1.0, 1.0).unwrap();
        let p = QuantParams::from_range(8, range).unwrap();
        assert_eq!(p.zero_point, -128);
        assert_eq!(p.quantize(-1.0), (0, false));
        // Real zero stays numerically neutral after the round trip.
        let (zero_code, _) = p.quantize(0.0);
        assert_eq!(p.dequantize(zero_code), 0.0);
    }

    #[test]
    fn rrmse_trivial_cases() {
        assert_eq!(rrmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rrmse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            rrmse(&[0.0, 0.0], &[1.0, 1.0]),
            Err(Error::UndefinedRelativeError)
        ));
    }

    #[test]
    fn degenerate_range_maps_to_zero() {
        let p = QuantParams::from_range(8, ValueRange::new(2.5, 2.5).unwrap()).unwrap();
        let (code, _) = p.quantize(2.5);
        assert_eq!(code, 0);
    }
}
