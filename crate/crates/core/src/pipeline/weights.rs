//! Versioned weights file: trained encoder parameters plus the calibrated
//! thresholds and the training configuration that produced them.

use super::detect::CalibratedThresholds;
use crate::encoder::{EncoderParams, TripletConfig};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const WEIGHTS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsFile {
    pub format_version: u32,
    pub params: EncoderParams,
    /// Training configuration, seed included, for reproducing the weights.
    pub train_config: Option<TripletConfig>,
    pub calibration: Option<CalibratedThresholds>,
}

impl WeightsFile {
    pub fn new(params: EncoderParams) -> Self {
        WeightsFile {
            format_version: WEIGHTS_FORMAT_VERSION,
            params,
            train_config: None,
            calibration: None,
        }
    }
}

pub fn save_weights(path: &Path, weights: &WeightsFile) -> Result<()> {
    weights.params.validate()?;
    let mut body = serde_json::to_string_pretty(weights)?;
    body.push('\n');
    std::fs::write(path, body)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<WeightsFile> {
    let body = std::fs::read_to_string(path)?;
    let weights: WeightsFile = serde_json::from_str(&body)?;
    if weights.format_version != WEIGHTS_FORMAT_VERSION {
        return Err(Error::validation(format!(
            "weights format version {} is not supported (expected {})",
            weights.format_version, WEIGHTS_FORMAT_VERSION
        )));
    }
    weights.params.validate()?;
    Ok(weights)
}
