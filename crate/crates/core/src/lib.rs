//! Offline pitch tracking for noisy speech.
//!
//! The pipeline classifies voiced frames per utterance with no training
//! data, estimates the period of each voiced frame from a blend of time- and
//! frequency-domain autocorrelations, and smooths the resulting period
//! track with forward and backward Kalman filters whose outputs are fused by
//! their estimated variances.
//!
//! ```no_run
//! use pitchtrack_core::{load_audio, PitchTracker};
//!
//! let audio = load_audio("utterance.wav")?;
//! let track = PitchTracker::default().track(&audio)?;
//! for frame in track.frames.iter().filter(|f| f.voiced) {
//!     println!("{:.3} s  {:.1} Hz", frame.time_s, frame.f0_hz.unwrap());
//! }
//! # Ok::<(), pitchtrack_core::Error>(())
//! ```

pub mod acf;
pub mod config;
pub mod error;
pub mod kalman;
pub mod metrics;
pub mod pipeline;
pub mod signal;
pub mod spectrum;
pub mod track;
pub mod voicing;

pub use acf::{LagBounds, PitchObservation};
pub use config::{AcfConfig, OutputConfig, OutputFormat, PipelineConfig};
pub use error::{Error, Result};
pub use kalman::KalmanConfig;
pub use metrics::{score, EvalReport, VoicingConfusion};
pub use pipeline::{Analysis, Discriminant, PitchTracker};
pub use signal::{
    frame_signal, load_audio, mix_at_snr, synthesize, white_noise, write_wav, AudioBuffer, Frame, FramingConfig,
    Mixture, SynthSpec, Window,
};
pub use track::{FrameDiagnostics, PitchFrame, PitchTrack};
pub use voicing::{FeatureVector, VoicingConfig, VoicingLabel, VoicingTrack};
