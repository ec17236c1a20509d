//! Gross and fine pitch error against a reference track.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::track::PitchTrack;

/// Relative deviation above which a frame counts as a gross pitch error.
pub const GPE_THRESHOLD: f64 = 0.1;

/// Frame start times further apart than this are considered misaligned.
const TIME_TOLERANCE_S: f64 = 1e-6;

/// `true` when `|ref - est| / ref` strictly exceeds 10 %.
pub fn gpe_indicator(f0_ref: f64, f0_est: f64) -> bool {
    assert!(f0_ref > 0.0, "reference F0 must be positive");
    relative_error(f0_ref, f0_est) > GPE_THRESHOLD
}

fn relative_error(f0_ref: f64, f0_est: f64) -> f64 {
    (f0_ref - f0_est).abs() / f0_ref
}

/// Frame counts by reference voicing (rows) and estimated voicing (columns).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VoicingConfusion {
    pub ref_voiced_est_voiced: usize,
    pub ref_voiced_est_unvoiced: usize,
    pub ref_unvoiced_est_voiced: usize,
    pub ref_unvoiced_est_unvoiced: usize,
}

impl VoicingConfusion {
    pub fn accuracy(&self) -> f64 {
        let total = self.ref_voiced_est_voiced
            + self.ref_voiced_est_unvoiced
            + self.ref_unvoiced_est_voiced
            + self.ref_unvoiced_est_unvoiced;
        if total == 0 {
            return 0.0;
        }
        (self.ref_voiced_est_voiced + self.ref_unvoiced_est_unvoiced) as f64 / total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// `None` when no frame is voiced in both tracks.
    pub gpe_ratio: Option<f64>,
    /// `None` when no scored frame is free of gross error.
    pub mfpe: Option<f64>,
    /// Frames voiced in both tracks.
    pub frames_scored: usize,
    /// Scored frames without gross error.
    pub frames_fine: usize,
    pub voicing_confusion: VoicingConfusion,
}

/// Scores `est` against `reference` over the frames voiced in both.
pub fn score(reference: &PitchTrack, est: &PitchTrack) -> Result<EvalReport> {
    if reference.len() != est.len() {
        return Err(Error::TrackMismatch(format!(
            "reference has {} frames, estimate has {}",
            reference.len(),
            est.len()
        )));
    }
    let mut confusion = VoicingConfusion::default();
    let mut scored = 0usize;
    let mut gross = 0usize;
    let mut fine_sum = 0.0;
    for (r, e) in reference.frames.iter().zip(&est.frames) {
        if r.index != e.index || (r.time_s - e.time_s).abs() > TIME_TOLERANCE_S {
            return Err(Error::TrackMismatch(format!(
                "frame {} at {} s does not line up with frame {} at {} s",
                r.index, r.time_s, e.index, e.time_s
            )));
        }
        match (r.voiced, e.voiced) {
            (true, true) => confusion.ref_voiced_est_voiced += 1,
            (true, false) => confusion.ref_voiced_est_unvoiced += 1,
            (false, true) => confusion.ref_unvoiced_est_voiced += 1,
            (false, false) => confusion.ref_unvoiced_est_unvoiced += 1,
        }
        if let (true, true, Some(fr), Some(fe)) = (r.voiced, e.voiced, r.f0_hz, e.f0_hz) {
            scored += 1;
            if gpe_indicator(fr, fe) {
                gross += 1;
            } else {
                fine_sum += relative_error(fr, fe);
            }
        }
    }
    let fine = scored - gross;
    Ok(EvalReport {
        gpe_ratio: (scored > 0).then(|| gross as f64 / scored as f64),
        mfpe: (fine > 0).then(|| fine_sum / fine as f64),
        frames_scored: scored,
        frames_fine: fine,
        voicing_confusion: confusion,
    })
}
