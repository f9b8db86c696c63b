//! Short-time Fourier transform with a periodic Hamming analysis window and a
//! least-squares synthesis window.
//!
//! Signals are zero-padded by `L - hop` samples on both ends (plus enough at the
//! tail to complete the last frame), so every original sample is covered by
//! the full set of overlapping frames and the inverse is exact on it.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array3;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::types::MixtureSpectrogram;

#[derive(Clone)]
pub struct StftPlan {
    pub window: Vec<f64>,
    pub synthesis_window: Vec<f64>,
    pub hop: usize,
    pub fft_size: usize,
    pub sample_rate: u32,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for StftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StftPlan")
            .field("fft_size", &self.fft_size)
            .field("hop", &self.hop)
            .field("sample_rate", &self.sample_rate)
            .finish()
    }
}

/// Periodic Hamming window, 0.54 - 0.46 cos(2πt/L).
pub fn periodic_hamming(len: usize) -> Vec<f64> {
    (0..len)
        .map(|t| 0.54 - 0.46 * (2.0 * PI * t as f64 / len as f64).cos())
        .collect()
}

/// Synthesis window satisfying Σ_k w[t + k·hop] · ws[t + k·hop] = 1 for every t.
fn least_squares_synthesis(window: &[f64], hop: usize) -> Vec<f64> {
    let mut denom = vec![0.0; hop];
    for (t, w) in window.iter().enumerate() {
        denom[t % hop] += w * w;
    }
    window.iter().enumerate().map(|(t, w)| w / denom[t % hop]).collect()
}

impl StftPlan {
    pub fn hamming(frame_len: usize, hop: usize, sample_rate: u32) -> Result<Self> {
        if frame_len < 2 || !frame_len.is_multiple_of(2) {
            return Err(Error::InvalidPlan(format!(
                "frame length must be even and >= 2, got {frame_len}"
            )));
        }
        if hop == 0 || hop > frame_len / 2 {
            return Err(Error::InvalidPlan(format!(
                "hop must be in 1..={} for frame length {frame_len}, got {hop}",
                frame_len / 2
            )));
        }
        let window = periodic_hamming(frame_len);
        let synthesis_window = least_squares_synthesis(&window, hop);
        let mut planner = FftPlanner::new();
        Ok(StftPlan {
            window,
            synthesis_window,
            hop,
            fft_size: frame_len,
            sample_rate,
            forward: planner.plan_fft_forward(frame_len),
            inverse: planner.plan_fft_inverse(frame_len),
        })
    }

    /// Window and shift given in milliseconds, rounded to whole samples.
    pub fn hamming_ms(window_ms: f64, hop_ms: f64, sample_rate: u32) -> Result<Self> {
        let to_samples = |ms: f64| (ms * sample_rate as f64 / 1000.0).round() as usize;
        Self::hamming(to_samples(window_ms), to_samples(hop_ms), sample_rate)
    }

    pub fn frame_len(&self) -> usize {
        self.fft_size
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn padding(&self) -> usize {
        self.fft_size - self.hop
    }

    /// Number of frames produced for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        let padded = len + 2 * self.padding();
        (padded - self.fft_size).div_ceil(self.hop) + 1
    }

    /// One-sided spectrum of a single frame of time samples.
    fn analyze_frame(&self, frame: &[f64], buf: &mut [Complex64]) {
        for ((b, x), w) in buf.iter_mut().zip(frame).zip(&self.window) {
            *b = Complex64::new(x * w, 0.0);
        }
        self.forward.process(buf);
    }
}

/// Transforms each channel; the result has `fft_size/2 + 1` bins.
pub fn stft(signal: &[Vec<f64>], plan: &StftPlan) -> Result<MixtureSpectrogram> {
    let len = signal.first().map_or(0, |c| c.len());
    if signal.iter().any(|c| c.len() != len) {
        return Err(Error::LengthMismatch("channels differ in length".into()));
    }
    if len < plan.fft_size {
        return Err(Error::SignalTooShort { len, needed: plan.fft_size });
    }
    let frames = plan.frames_for(len);
    let bins = plan.bins();
    let pad = plan.padding();
    let padded_len = (frames - 1) * plan.hop + plan.fft_size;
    let mut data = Array3::zeros((bins, frames, signal.len()));
    let mut padded = vec![0.0; padded_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); plan.fft_size];
    for (m, channel) in signal.iter().enumerate() {
        padded.fill(0.0);
        padded[pad..pad + len].copy_from_slice(channel);
        for j in 0..frames {
            let start = j * plan.hop;
            plan.analyze_frame(&padded[start..start + plan.fft_size], &mut buf);
            for (k, z) in buf.iter().take(bins).enumerate() {
                data[[k, j, m]] = *z;
            }
        }
    }
    Ok(MixtureSpectrogram {
        data,
        sample_rate: plan.sample_rate,
        frame_len: plan.fft_size,
        hop_len: plan.hop,
    })
}

/// Weighted overlap-add inverse; returns `length` samples per channel.
pub fn istft(spec: &Array3<Complex64>, plan: &StftPlan, length: usize) -> Result<Vec<Vec<f64>>> {
    let (bins, frames, channels) = spec.dim();
    if bins != plan.bins() {
        return Err(Error::ShapeMismatch(format!(
            "spectrogram has {bins} bins, plan expects {}",
            plan.bins()
        )));
    }
    let size = plan.fft_size;
    let pad = plan.padding();
    let padded_len = frames.saturating_sub(1) * plan.hop + size;
    let scale = 1.0 / size as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    let mut out = Vec::with_capacity(channels);
    for m in 0..channels {
        let mut acc = vec![0.0; padded_len.max(pad + length)];
        for j in 0..frames {
            buf[0] = spec[[0, j, m]];
            for k in 1..bins {
                let z = spec[[k, j, m]];
                buf[k] = z;
                if k < size - k {
                    buf[size - k] = z.conj();
                }
            }
            plan.inverse.process(&mut buf);
            let start = j * plan.hop;
            for (t, (z, ws)) in buf.iter().zip(&plan.synthesis_window).enumerate() {
                acc[start + t] += z.re * scale * ws;
            }
        }
        out.push(acc[pad..pad + length].to_vec());
    }
    Ok(out)
}
