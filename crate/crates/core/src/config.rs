//! Analysis settings shared by the library and the CLI.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::biometry::{MeasureOptions, DEFAULT_RDP_EPS_REL};
use crate::metrics::DEFAULT_DICE_EPS;
use crate::morphology::DEFAULT_MASK_THRESHOLD;
use crate::planes::{CompositeWeights, SelectionConfig, DEFAULT_GATE_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("bad config: {0}")]
pub struct ConfigError(pub String);

/// Every tunable of an analysis run. Missing keys in a config file take the
/// defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// A part is a candidate when its class probability is strictly above this.
    pub gate_threshold: f64,
    /// Inclusive threshold on upsampled mask probabilities.
    pub mask_threshold: f64,
    /// RDP tolerance as a fraction of the contour perimeter.
    pub rdp_eps_rel: f64,
    pub weights: CompositeWeights,
    /// Smoothing term of the soft dice loss.
    pub dice_eps: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            gate_threshold: DEFAULT_GATE_THRESHOLD,
            mask_threshold: DEFAULT_MASK_THRESHOLD,
            rdp_eps_rel: DEFAULT_RDP_EPS_REL,
            weights: CompositeWeights::default(),
            dice_eps: DEFAULT_DICE_EPS,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(ConfigError(format!("{name} must be in (0, 1), got {v}")))
            }
        };
        open_unit("gate_threshold", self.gate_threshold)?;
        open_unit("mask_threshold", self.mask_threshold)?;
        if !(self.rdp_eps_rel >= 0.0 && self.rdp_eps_rel.is_finite()) {
            return Err(ConfigError(format!(
                "rdp_eps_rel must be >= 0, got {}",
                self.rdp_eps_rel
            )));
        }
        if !(self.dice_eps > 0.0 && self.dice_eps.is_finite()) {
            return Err(ConfigError(format!("dice_eps must be > 0, got {}", self.dice_eps)));
        }
        self.weights.validate().map_err(|e| ConfigError(e.to_string()))
    }

    /// Reads a JSON config file; absent keys keep their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
    }

    pub fn measure_options(&self) -> MeasureOptions {
        MeasureOptions {
            rdp_eps_rel: self.rdp_eps_rel,
        }
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            gate_threshold: self.gate_threshold,
            weights: self.weights,
            measure: self.measure_options(),
        }
    }
}
