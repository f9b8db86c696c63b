//! WAV input/output, synthetic test sources and mixture simulation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Reads every channel of a PCM16 or float32 WAV file as samples in [−1, 1].
pub fn read_wav(path: impl AsRef<Path>) -> Result<(Vec<Vec<f64>>, u32)> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<std::result::Result<_, _>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        (format, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {format:?} samples")));
        }
    };
    let mut out = vec![Vec::with_capacity(interleaved.len() / channels.max(1)); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, v) in frame.iter().enumerate() {
            out[c].push(*v);
        }
    }
    Ok((out, spec.sample_rate))
}

/// Writes channels as interleaved 32-bit float samples.
pub fn write_wav(path: impl AsRef<Path>, channels: &[Vec<f64>], sample_rate: u32) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::LengthMismatch("no channels to write".into()));
    }
    let len = channels[0].len();
    if channels.iter().any(|c| c.len() != len) {
        return Err(Error::LengthMismatch("channels differ in length".into()));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for t in 0..len {
        for c in channels {
            writer.write_sample(c[t] as f32)?;
        }
    }
    writer.finalize()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// Uniform noise passing through one of `rank` short spectral-shaping
    /// filters at a time, switching at random segment boundaries.
    Subgaussian,
    Gaussian,
    /// Laplacian noise.
    Supergaussian,
    /// `rank` harmonic tones switched on and off with smooth envelopes.
    LowRankTonal,
}

impl std::str::FromStr for SourceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subgaussian" => Ok(SourceKind::Subgaussian),
            "gaussian" => Ok(SourceKind::Gaussian),
            "supergaussian" => Ok(SourceKind::Supergaussian),
            "low_rank_tonal" => Ok(SourceKind::LowRankTonal),
            other => Err(Error::UnsupportedFormat(format!("unknown source kind {other:?}"))),
        }
    }
}

const SOURCE_RMS: f64 = 0.1;

/// Deterministic synthetic source of `len` samples normalized to an RMS of 0.1.
/// `rank` bounds the number of spectral patterns for the structured kinds.
pub fn synth_source(kind: SourceKind, rank: usize, len: usize, sample_rate: u32, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = rank.max(1);
    let mut out: Vec<f64> = match kind {
        SourceKind::Gaussian => (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect(),
        SourceKind::Supergaussian => (0..len)
            .map(|_| {
                let e: f64 = Exp1.sample(&mut rng);
                if rng.random::<bool>() { e } else { -e }
            })
            .collect(),
        SourceKind::Subgaussian => shaped_uniform(&mut rng, rank, len, sample_rate),
        SourceKind::LowRankTonal => tonal(&mut rng, rank, len, sample_rate),
    };
    let rms = (out.iter().map(|v| v * v).sum::<f64>() / len.max(1) as f64).sqrt();
    if rms > 0.0 {
        out.iter_mut().for_each(|v| *v *= SOURCE_RMS / rms);
    }
    out
}

fn segment_lengths(rng: &mut ChaCha8Rng, len: usize, sample_rate: u32) -> Vec<usize> {
    let sr = f64::from(sample_rate);
    let mut lengths = Vec::new();
    let mut used = 0;
    while used < len {
        let seg = ((rng.random_range(0.25..0.75) * sr) as usize).clamp(1, len - used);
        lengths.push(seg);
        used += seg;
    }
    lengths
}

fn shaped_uniform(rng: &mut ChaCha8Rng, rank: usize, len: usize, sample_rate: u32) -> Vec<f64> {
    // unit-gain two-tap filters [1, c] / √(1 + c²); the output stays light-tailed
    let taps: Vec<f64> = if rank == 1 {
        vec![0.5]
    } else {
        (0..rank).map(|k| -0.6 + 1.2 * k as f64 / (rank - 1) as f64).collect()
    };
    let noise: Vec<f64> = (0..=len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(len);
    let mut pattern = rng.random_range(0..rank);
    for seg in segment_lengths(rng, len, sample_rate) {
        let c = taps[pattern];
        let gain = (1.0 + c * c).sqrt().recip();
        for _ in 0..seg {
            let t = out.len() + 1;
            out.push(gain * (noise[t] + c * noise[t - 1]));
        }
        pattern = (pattern + rng.random_range(1..rank.max(2))) % rank;
    }
    out
}

fn tonal(rng: &mut ChaCha8Rng, rank: usize, len: usize, sample_rate: u32) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let ramp = ((0.03 * sr) as usize).max(1);
    let mut out = vec![0.0; len];
    for k in 0..rank {
        let f0 = 110.0 * 2f64.powf((k as f64 * 5.0 + rng.random_range(0.0..4.0)) / 12.0);
        let harmonics: Vec<(f64, f64)> = (1..=6)
            .map(|h| h as f64)
            .take_while(|h| h * f0 < 0.45 * sr)
            .map(|h| (h * f0, rng.random_range(0.0..2.0 * PI)))
            .collect();
        // alternate notes and rests
        let mut start = 0;
        let mut sounding = rng.random::<bool>() || k == 0;
        for seg in segment_lengths(rng, len, sample_rate) {
            if sounding {
                for (offset, sample) in out[start..start + seg].iter_mut().enumerate() {
                    let edge = offset.min(seg - 1 - offset);
                    let env = if edge < ramp { 0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos() } else { 1.0 };
                    let t = (start + offset) as f64 / sr;
                    let tone: f64 = harmonics
                        .iter()
                        .enumerate()
                        .map(|(h, (f, phase))| (2.0 * PI * f * t + phase).sin() / (h + 1) as f64)
                        .sum();
                    *sample += env * tone;
                }
            }
            start += seg;
            sounding = !sounding;
        }
    }
    out
}

/// Excess kurtosis E[(x − μ)⁴]/σ⁴ − 3 of the samples.
pub fn excess_kurtosis(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (m2, m4) = samples.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d2 = (v - mean) * (v - mean);
        (m2 + d2, m4 + d2 * d2)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    m4 / (m2 * m2) - 3.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixingSpec {
    /// Real M×N gain matrix.
    Instantaneous(DMatrix<f64>),
    /// FIR impulse responses indexed `[m][n]`, all of one length.
    Convolutive(Vec<Vec<Vec<f64>>>),
}

impl MixingSpec {
    /// Parses rows separated by `;` and entries by `,`, e.g. `"1,0.5;0.5,1"`.
    pub fn parse_matrix(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .split(';')
            .map(|row| {
                row.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| Error::ShapeMismatch(format!("bad matrix entry {v:?}: {e}"))))
                    .collect()
            })
            .collect::<Result<_>>()?;
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("matrix rows differ in length".into()));
        }
        let spec = MixingSpec::Instantaneous(DMatrix::from_fn(rows.len(), cols, |m, n| rows[m][n]));
        spec.validate()?;
        Ok(spec)
    }

    pub fn channels(&self) -> usize {
        match self {
            MixingSpec::Instantaneous(a) => a.nrows(),
            MixingSpec::Convolutive(h) => h.len(),
        }
    }

    pub fn sources(&self) -> usize {
        match self {
            MixingSpec::Instantaneous(a) => a.ncols(),
            MixingSpec::Convolutive(h) => h.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MixingSpec::Instantaneous(a) => {
                if a.nrows() == 0 || a.ncols() == 0 {
                    return Err(Error::ShapeMismatch("empty mixing matrix".into()));
                }
                if a.is_square() && a.clone().lu().determinant().abs() <= 1e-12 {
                    return Err(Error::ShapeMismatch("square mixing matrix is singular".into()));
                }
            }
            MixingSpec::Convolutive(h) => {
                let taps = h.first().and_then(|row| row.first()).map_or(0, Vec::len);
                if taps == 0 || h.iter().any(|row| row.len() != self.sources() || row.iter().any(|ir| ir.len() != taps)) {
                    return Err(Error::ShapeMismatch("impulse responses must form a full grid of equal, nonzero lengths".into()));
                }
            }
        }
        Ok(())
    }
}

/// Mixes N equal-length sources into M channels. Convolution is full linear
/// convolution truncated to the source length.
pub fn mix(sources: &[Vec<f64>], spec: &MixingSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    if sources.len() != spec.sources() {
        return Err(Error::LengthMismatch(format!(
            "{} sources given, mixing expects {}",
            sources.len(),
            spec.sources()
        )));
    }
    let len = sources[0].len();
    if sources.iter().any(|s| s.len() != len) {
        return Err(Error::LengthMismatch("sources differ in length".into()));
    }
    let channels = spec.channels();
    let mut out = vec![vec![0.0; len]; channels];
    match spec {
        MixingSpec::Instantaneous(a) => {
            for (m, x) in out.iter_mut().enumerate() {
                for (n, s) in sources.iter().enumerate() {
                    let g = a[(m, n)];
                    x.iter_mut().zip(s).for_each(|(x, s)| *x += g * s);
                }
            }
        }
        MixingSpec::Convolutive(h) => {
            let taps = h[0][0].len();
            let size = (len + taps - 1).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(size);
            let inverse = planner.plan_fft_inverse(size);
            let spectra: Vec<Vec<Complex64>> = sources.iter().map(|s| spectrum(s, size, &forward)).collect();
            for (m, x) in out.iter_mut().enumerate() {
                let mut acc = vec![Complex64::new(0.0, 0.0); size];
                for (n, s_hat) in spectra.iter().enumerate() {
                    let h_hat = spectrum(&h[m][n], size, &forward);
                    acc.iter_mut().zip(s_hat.iter().zip(&h_hat)).for_each(|(a, (s, h))| *a += s * h);
                }
                inverse.process(&mut acc);
                x.iter_mut().zip(&acc).for_each(|(x, a)| *x = a.re / size as f64);
            }
        }
    }
    Ok(out)
}

fn spectrum(signal: &[f64], size: usize, fft: &Arc<dyn Fft<f64>>) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    buf.resize(size, Complex64::new(0.0, 0.0));
    fft.process(&mut buf);
    buf
}

/// Loads `ir_m{m}_n{n}.wav` files (1-based indices) from `dir` into a
/// convolutive mixing specification, using the first channel of each file.
pub fn load_impulse_responses(dir: impl AsRef<Path>) -> Result<(MixingSpec, u32)> {
    let mut found = BTreeMap::new();
    let mut rate = None;
    for entry in std::fs::read_dir(dir.as_ref())? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else { continue };
        let Some((m, n)) = parse_ir_name(name) else { continue };
        let (channels, sr) = read_wav(&path)?;
        if *rate.get_or_insert(sr) != sr {
            return Err(Error::UnsupportedFormat(format!("{name} has sample rate {sr}, expected {}", rate.unwrap_or(sr))));
        }
        let ir = channels.into_iter().next().unwrap_or_default();
        found.insert((m, n), ir);
    }
    let channels = found.keys().map(|k| k.0).max().unwrap_or(0);
    let sources = found.keys().map(|k| k.1).max().unwrap_or(0);
    if found.is_empty() || found.len() != channels * sources {
        return Err(Error::ShapeMismatch(format!(
            "expected a complete grid of ir_m{{m}}_n{{n}}.wav files in {}",
            dir.as_ref().display()
        )));
    }
    let taps = (1..=channels)
        .map(|m| (1..=sources).map(|n| found.remove(&(m, n)).unwrap_or_default()).collect())
        .collect();
    let spec = MixingSpec::Convolutive(taps);
    spec.validate()?;
    Ok((spec, rate.unwrap_or(0)))
}

fn parse_ir_name(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("ir_m")?.strip_suffix(".wav")?;
    let (m, n) = rest.split_once("_n")?;
    let (m, n) = (m.parse().ok()?, n.parse().ok()?);
    (m >= 1 && n >= 1).then_some((m, n))
}
