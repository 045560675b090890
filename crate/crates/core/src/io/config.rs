//! The single JSON config document: a `scenario` section for the synthetic
//! generator and a `pipeline` section for the analysis chain. Field names
//! carry explicit units.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::behavior::SensorLayout;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::preprocess::{EventTemplate, MorseParams};
use crate::synth::ScenarioConfig;

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct FileConfig {
    pub scenario: ScenarioConfig,
    pub pipeline: PipelineSettings,
}

/// Pipeline tunables as they appear in the config file. Templates and the
/// sensor layout arrive separately (template WAVs and `layout.json` in the
/// data directory), so this mirrors [`PipelineConfig`] minus those.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineSettings {
    pub wiener_window_samples: usize,
    pub lowpass_cutoff_hz: f64,
    pub morse: MorseParams,
    pub heartbeat_band_hz: (f64, f64),
    pub hr_min_separation_s: f64,
    pub rr_min_separation_s: f64,
    pub rr_moving_sum_s: f64,
    pub prominence_frac: f64,
    /// Natural log of the attenuation-inversion gain cap.
    pub attenuation_max_gain_ln: f64,
    pub t_round_s: f64,
    pub movement_reference_s: Option<(f64, f64)>,
    /// Similarity threshold applied to templates loaded from files.
    pub similarity_threshold: f64,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        PipelineSettings {
            wiener_window_samples: 51,
            lowpass_cutoff_hz: 200.0,
            morse: MorseParams::default(),
            heartbeat_band_hz: (10.0, 100.0),
            hr_min_separation_s: 0.5,
            rr_min_separation_s: 1.0,
            rr_moving_sum_s: 1.0,
            prominence_frac: 0.25,
            attenuation_max_gain_ln: 5.0,
            t_round_s: 60.0,
            movement_reference_s: None,
            similarity_threshold: 0.7,
        }
    }
}

impl PipelineSettings {
    pub fn to_pipeline_config(
        &self,
        layout: SensorLayout,
        templates: Vec<EventTemplate>,
    ) -> PipelineConfig {
        PipelineConfig {
            wiener_window_samples: self.wiener_window_samples,
            lowpass_cutoff_hz: self.lowpass_cutoff_hz,
            morse: self.morse,
            heartbeat_band_hz: self.heartbeat_band_hz,
            hr_min_separation_s: self.hr_min_separation_s,
            rr_min_separation_s: self.rr_min_separation_s,
            rr_moving_sum_s: self.rr_moving_sum_s,
            prominence_frac: self.prominence_frac,
            attenuation_max_gain: self.attenuation_max_gain_ln.exp(),
            t_round_s: self.t_round_s,
            movement_reference_s: self.movement_reference_s,
            templates,
            layout,
            compensation: true,
            environmental_removal: true,
        }
    }
}

/// Load and validate the config document; parse failures carry the
/// offending line and column.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("reading {}: {e}", path.display())))?;
    let config: FileConfig = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    if config.scenario.duration_s <= 0.0 {
        return Err(Error::config("scenario.duration_s must be positive"));
    }
    if config.scenario.sample_rate_hz <= 0.0 {
        return Err(Error::config("scenario.sample_rate_hz must be positive"));
    }
    config
        .scenario
        .propagation
        .validate()
        .map_err(|e| Error::config(format!("scenario.propagation: {e}")))?;
    if config.pipeline.wiener_window_samples < 3
        || config.pipeline.wiener_window_samples % 2 == 0
    {
        return Err(Error::config("pipeline.wiener_window_samples must be odd and >= 3"));
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{ "scenario": { "duration_s": 120.0 } }"#).unwrap();
        let config = load_config(&path).unwrap();
        assert_eq!(config.scenario.duration_s, 120.0);
        assert_eq!(config.scenario.sample_rate_hz, 500.0);
        assert_eq!(config.pipeline.lowpass_cutoff_hz, 200.0);
    }

    #[test]
    fn bad_json_is_a_config_error_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, "{ \"scenario\": { \"duration_s\": }").unwrap();
        let err = load_config(&path).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("line"));
    }

    #[test]
    fn invalid_values_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{ "scenario": { "duration_s": -5.0 } }"#).unwrap();
        assert!(load_config(&path).is_err());
        std::fs::write(
            &path,
            r#"{ "pipeline": { "wiener_window_samples": 10 } }"#,
        )
        .unwrap();
        assert!(load_config(&path).is_err());
    }
}
