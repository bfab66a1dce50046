//! Run configuration (TOML) and the calibration patch file.
//!
//! One text file with three sections: `[accelerator]` (crossbar geometry,
//! hierarchy, energy/timing constants), `[redy]` (bins, subsample ratio,
//! thresholds, histogram mode) and `[run]` (policy, seed, threads, input
//! glob). Unknown keys are rejected. The `calibrate` subcommand emits a
//! separate patch file carrying per-layer ranges and calibrated thresholds,
//! which overrides the main config when loaded.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accel::{EnergyModel, Hierarchy};
use crate::calibrate::ThresholdCalibration;
use crate::error::{Error, Result};
use crate::exec::Policy;
use crate::quant::ValueRange;
use crate::redy::{HistogramMode, PrecisionThresholds};
use crate::xbar::CrossbarConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcceleratorConfig {
    pub crossbar: CrossbarConfig,
    pub hierarchy: Hierarchy,
    pub energy: EnergyModel,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        Self {
            crossbar: CrossbarConfig::default(),
            hierarchy: Hierarchy::default(),
            energy: EnergyModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RedyConfig {
    pub bins: usize,
    pub subsample_ratio: f64,
    pub thresholds: PrecisionThresholds,
    pub histogram_mode: HistogramMode,
}

impl Default for RedyConfig {
    fn default() -> Self {
        Self {
            bins: 8,
            subsample_ratio: 0.10,
            thresholds: PrecisionThresholds::default_grid_center(),
            histogram_mode: HistogramMode::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub policy: Policy,
    pub seed: u64,
    /// 0 means all available cores.
    pub threads: usize,
    /// Input tensor glob, overridable from the command line.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inputs: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            policy: Policy::Redy,
            seed: 0,
            threads: 0,
            inputs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub accelerator: AcceleratorConfig,
    pub redy: RedyConfig,
    pub run: RunSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.accelerator.crossbar.validate()?;
        self.accelerator.energy.validate()?;
        if self.redy.bins < 2 {
            return Err(Error::Config(format!("bins {} < 2", self.redy.bins)));
        }
        if !(self.redy.subsample_ratio > 0.0 && self.redy.subsample_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "subsample ratio {} not in (0, 1]",
                self.redy.subsample_ratio
            )));
        }
        self.redy.thresholds.validate(self.redy.bins)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Output of the `calibrate` subcommand: a config patch with per-layer
/// activation ranges and calibrated thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPatch {
    pub redy: CalibrationThresholds,
    pub calibration: CalibrationRanges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationThresholds {
    pub thresholds: PrecisionThresholds,
    /// False when the grid search found no tuple inside the error budget
    /// and fell back to max precision.
    pub feasible: bool,
    pub mean_rrmse: f64,
    pub mean_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationRanges {
    /// Per-layer `[lo, hi]` input activation ranges.
    pub ranges: Vec<[f32; 2]>,
}

impl CalibrationPatch {
    pub fn new(calibration: &ThresholdCalibration, ranges: &[ValueRange]) -> Self {
        Self {
            redy: CalibrationThresholds {
                thresholds: calibration.thresholds,
                feasible: calibration.feasible,
                mean_rrmse: calibration.mean_rrmse,
                mean_bits: calibration.mean_bits,
            },
            calibration: CalibrationRanges {
                ranges: ranges.iter().map(|r| [r.lo, r.hi]).collect(),
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).expect("patch serializes");
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn ranges(&self) -> Result<Vec<ValueRange>> {
        self.calibration
            .ranges
            .iter()
            .map(|&[lo, hi]| ValueRange::new(lo, hi))
            .collect()
    }

    /// Applies the calibrated thresholds onto a run config.
    pub fn apply(&self, cfg: &mut RunConfig) {
        cfg.redy.thresholds = self.redy.thresholds;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[run]\npolicy = \"redy\"\nwarp_drive = true\n";
        assert!(toml::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn bad_thresholds_fail_validation() {
        let mut cfg = RunConfig::default();
        cfg.redy.thresholds = PrecisionThresholds {
            p: [0.3, 0.3, 0.2, 0.1, 0.05],
        };
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn patch_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cal = ThresholdCalibration {
            thresholds: PrecisionThresholds::default_grid_center(),
            feasible: true,
            mean_rrmse: 0.01,
            mean_bits: 5.0,
        };
        let ranges = vec![
            ValueRange::new(0.0, 1.0).unwrap(),
            ValueRange::new(-0.5, 2.0).unwrap(),
        ];
        let patch = CalibrationPatch::new(&cal, &ranges);
        let path = dir.path().join("calibration.toml");
        patch.save(&path).unwrap();
        let back = CalibrationPatch::load(&path).unwrap();
        assert_eq!(back, patch);
        assert_eq!(back.ranges().unwrap(), ranges);
    }
}
