//! Functional simulator of a ReRAM processing-in-memory CNN accelerator.
//!
//! The crate models the full inference path of an ISAAC-style tiled
//! architecture: CONV/FC layers are lowered onto 128x128 ReRAM crossbars,
//! activations are streamed bit-serially one plane at a time, and analog
//! column sums are captured by a shared ADC pool and recombined with
//! shift-and-add. On top of that baseline it implements a dynamic per-group
//! quantization scheme (`redy` policy): each channel-wise group of
//! activations is histogrammed on the fly, its deviation from a uniform
//! distribution is scored, and the group is quantized to 3..8 bits before
//! streaming. Lower bitwidths mean fewer bit planes, fewer crossbar
//! activations and fewer A/D conversions.
//!
//! The main entry points are:
//! - [`net::Network`] plus [`exec::QuantizedEngine`] for simulated inference,
//! - [`redy`] for the per-group precision heuristic and its calibration,
//! - [`accel`] for floorplanning, energy and pipeline-latency estimates,
//! - [`config::RunConfig`] / [`model_io`] / [`report`] for the on-disk
//!   interfaces shared with the CLI.
//!
//! Data-parallel loops (windows within a layer, inputs within a batch) run
//! on rayon when the default `parallel` feature is enabled and fall back to
//! plain iterators when it is disabled. Counter merging is integer-exact, so
//! results are bitwise identical for any thread count.

pub mod accel;
pub mod calibrate;
pub mod config;
pub mod counters;
pub mod error;
pub mod exec;
pub mod fixtures;
pub mod model_io;
pub mod net;
pub mod par;
pub mod quant;
pub mod redy;
pub mod report;
pub mod tensor;
pub mod xbar;

pub use error::{Error, Result};
