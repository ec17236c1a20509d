//! Pipeline configuration, loadable from TOML.
//!
//! ```toml
//! [framing]
//! frame_length = 512
//! hop_length = 160
//! window = "hann"
//!
//! [voicing]
//! silence_ratio = 0.3
//!
//! [acf]
//! alpha_r = 0.5
//! f_min = 60.0
//! f_max = 460.0
//!
//! [kalman]
//! l_window = 8
//! alpha = 0.95
//! sigma2_delta0 = 0.06
//!
//! [output]
//! format = "csv"
//! ```
//!
//! Every key is optional; missing keys take their defaults.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kalman::KalmanConfig;
use crate::signal::FramingConfig;
use crate::voicing::VoicingConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcfConfig {
    /// Weight of the time-domain ACF in the blend.
    pub alpha_r: f64,
    pub fft_size: usize,
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for AcfConfig {
    fn default() -> Self {
        Self {
            alpha_r: 0.5,
            fft_size: 2048,
            f_min: 60.0,
            f_max: 460.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub framing: FramingConfig,
    pub voicing: VoicingConfig,
    pub acf: AcfConfig,
    pub kalman: KalmanConfig,
    pub output: OutputConfig,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every section; some limits depend on the sample rate.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        self.framing.validate()?;
        self.voicing.validate(sample_rate)?;
        self.kalman.validate()?;
        let acf = &self.acf;
        if !(0.0..=1.0).contains(&acf.alpha_r) {
            return Err(Error::InvalidConfig(format!(
                "alpha_r must lie in [0, 1], got {}",
                acf.alpha_r
            )));
        }
        if !(acf.f_min > 0.0 && acf.f_min < acf.f_max) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < f_min < f_max, got f_min={} f_max={}",
                acf.f_min, acf.f_max
            )));
        }
        if acf.f_max >= f64::from(sample_rate) / 2.0 {
            return Err(Error::InvalidConfig(format!(
                "f_max {} must be below the Nyquist frequency of {} Hz",
                acf.f_max,
                f64::from(sample_rate) / 2.0
            )));
        }
        if !acf.fft_size.is_power_of_two() || acf.fft_size < self.framing.frame_length {
            return Err(Error::InvalidConfig(format!(
                "fft_size {} must be a power of two no smaller than frame_length {}",
                acf.fft_size, self.framing.frame_length
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = PipelineConfig::default();
        assert_eq!(c.acf.alpha_r, 0.5);
        assert_eq!(c.acf.f_min, 60.0);
        assert_eq!(c.acf.f_max, 460.0);
        assert_eq!(c.kalman.l_window, 8);
        assert_eq!(c.kalman.alpha, 0.95);
        assert_eq!(c.kalman.sigma2_delta0, 0.06);
        assert_eq!(c.voicing.silence_ratio, 0.3);
        assert!(c.validate(16_000).is_ok());
    }

    #[test]
    fn partial_toml_overrides_only_named_keys() {
        let c = PipelineConfig::from_toml_str("[kalman]\nalpha = 0.9\n[output]\nformat = \"json\"\n").unwrap();
        assert_eq!(c.kalman.alpha, 0.9);
        assert_eq!(c.kalman.l_window, 8);
        assert_eq!(c.output.format, OutputFormat::Json);
        assert_eq!(c.framing, FramingConfig::default());
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(PipelineConfig::from_toml_str("[kalman]\nbogus = 1\n").is_err());
        let mut c = PipelineConfig::default();
        c.acf.f_max = 9000.0;
        assert!(c.validate(16_000).is_err());
        let mut c = PipelineConfig::default();
        c.acf.f_min = 500.0;
        assert!(c.validate(16_000).is_err());
        let mut c = PipelineConfig::default();
        c.acf.fft_size = 256;
        assert!(c.validate(16_000).is_err());
    }
}
