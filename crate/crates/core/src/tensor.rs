//! Dense feature-map and kernel tensors.
//!
//! Layout is row-major with the channel innermost, so the activations a
//! channel-wise group needs (all channels at one spatial position) are
//! contiguous in memory.

use crate::error::{Error, Result};

/// Dense f32 tensor. Feature maps are `(w, h, c)`; kernel stacks are
/// `(r, s, c, k)` with `k` innermost so one group's weights for all kernels
/// sit together.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<u32>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(dims: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        let expect: usize = dims.iter().map(|&d| d as usize).product();
        if expect != data.len() {
            return Err(Error::DimMismatch(format!(
                "tensor dims {dims:?} imply {expect} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Vec<u32>) -> Self {
        let len: usize = dims.iter().map(|&d| d as usize).product();
        Self {
            dims,
            data: vec![0.0; len],
        }
    }

    /// Feature map constructor, dims `(w, h, c)`.
    pub fn fmap(w: usize, h: usize, c: usize, data: Vec<f32>) -> Result<Self> {
        Self::new(vec![w as u32, h as u32, c as u32], data)
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Width/height/channels of a rank-3 feature map.
    pub fn fmap_dims(&self) -> Result<(usize, usize, usize)> {
        match self.dims[..] {
            [w, h, c] => Ok((w as usize, h as usize, c as usize)),
            _ => Err(Error::DimMismatch(format!(
                "expected rank-3 feature map, got dims {:?}",
                self.dims
            ))),
        }
    }

    /// Kernel dims `(r, s, c, k)` of a rank-4 weight tensor.
    pub fn kernel_dims(&self) -> Result<(usize, usize, usize, usize)> {
        match self.dims[..] {
            [r, s, c, k] => Ok((r as usize, s as usize, c as usize, k as usize)),
            _ => Err(Error::DimMismatch(format!(
                "expected rank-4 kernel tensor, got dims {:?}",
                self.dims
            ))),
        }
    }

    /// Value at `(x, y, ch)` of a feature map; out-of-bounds reads as zero
    /// padding.
    #[inline]
    pub fn at_padded(&self, w: usize, h: usize, c: usize, x: isize, y: isize, ch: usize) -> f32 {
        if x < 0 || y < 0 || x as usize >= w || y as usize >= h {
            0.0
        } else {
            self.data[((y as usize * w) + x as usize) * c + ch]
        }
    }

    #[inline]
    pub fn at(&self, w: usize, c: usize, x: usize, y: usize, ch: usize) -> f32 {
        self.data[((y * w) + x) * c + ch]
    }

    /// Kernel weight at `(r, s, ch, k)`.
    #[inline]
    pub fn weight_at(&self, s: usize, c: usize, k: usize, ri: usize, si: usize, ci: usize, ki: usize) -> f32 {
        self.data[(((ri * s) + si) * c + ci) * k + ki]
    }

    /// Reinterprets a feature map as `1 x 1 x (w*h*c)` for FC layers.
    pub fn flattened(&self) -> Tensor {
        Tensor {
            dims: vec![1, 1, self.data.len() as u32],
            data: self.data.clone(),
        }
    }

    pub fn min_max(&self) -> (f32, f32) {
        let mut lo = f32::INFINITY;
        let mut hi = f32::NEG_INFINITY;
        for &v in &self.data {
            if v < lo {
                lo = v;
            }
            if v > hi {
                hi = v;
            }
        }
        (lo, hi)
    }

    /// Index of the largest element (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_channel_innermost() {
        let t = Tensor::fmap(2, 2, 3, (0..12).map(|i| i as f32).collect()).unwrap();
        // (x=1, y=0, ch=2) -> ((0*2)+1)*3 + 2 = 5
        assert_eq!(t.at(2, 3, 1, 0, 2), 5.0);
        assert_eq!(t.at_padded(2, 2, 3, -1, 0, 0), 0.0);
        assert_eq!(t.at_padded(2, 2, 3, 1, 1, 0), 9.0);
    }

    #[test]
    fn dims_must_match_data() {
        assert!(Tensor::new(vec![2, 2], vec![0.0; 3]).is_err());
    }
}
