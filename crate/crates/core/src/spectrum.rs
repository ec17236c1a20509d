use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::signal::Window;

/// Windowed, zero-padded magnitude spectra of fixed-length frames.
#[derive(Clone)]
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    fft_size: usize,
}

impl std::fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumAnalyzer")
            .field("frame_length", &self.window.len())
            .field("fft_size", &self.fft_size)
            .finish()
    }
}

impl SpectrumAnalyzer {
    pub fn new(frame_length: usize, fft_size: usize, window: Window) -> Result<Self> {
        if !fft_size.is_power_of_two() || fft_size < frame_length {
            return Err(Error::InvalidConfig(format!(
                "fft_size {fft_size} must be a power of two no smaller than the frame length {frame_length}"
            )));
        }
        Ok(Self {
            fft: FftPlanner::new().plan_fft_forward(fft_size),
            window: window.coefficients(frame_length),
            fft_size,
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn frame_length(&self) -> usize {
        self.window.len()
    }

    /// Number of bins in the one-sided spectrum, DC through Nyquist.
    pub fn half_len(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// One-sided magnitude spectrum `|X(m)|`, `m = 0..=fft_size/2`.
    pub fn magnitude(&self, frame: &[f64]) -> Vec<f64> {
        self.complex(frame).iter().map(|c| c.norm()).collect()
    }

    /// One-sided power spectrum `|X(m)|^2`.
    pub fn power(&self, frame: &[f64]) -> Vec<f64> {
        self.complex(frame).iter().map(|c| c.norm_sqr()).collect()
    }

    fn complex(&self, frame: &[f64]) -> Vec<Complex<f64>> {
        assert_eq!(frame.len(), self.window.len(), "frame length mismatch");
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for ((b, x), w) in buf.iter_mut().zip(frame).zip(&self.window) {
            b.re = x * w;
        }
        self.fft.process(&mut buf);
        buf.truncate(self.half_len());
        buf
    }
}
