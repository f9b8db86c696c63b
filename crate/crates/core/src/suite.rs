//! Seeded property checks and the synthetic separation scenario.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::audio::{mix, synth_source, MixingSpec, SourceKind};
use crate::cost_eval::{audit_descent, DescentReport};
use crate::demix_giphsm::{build_majorizer_g, GgdQuarticObjective, HomogeneousObjective, QuarticMajorizer};
use crate::error::Result;
use crate::linalg::CVector;
use crate::metrics::{sdr_improvement, SourceScore};
use crate::pipeline::{separate_waveforms, Separation};
use crate::stft::StftPlan;
use crate::types::{ConvergenceTrace, GgdConfig, MixtureSpectrogram};

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Mixture spectrogram with i.i.d. circular complex Gaussian entries.
pub fn random_mixture(seed: u64, freqs: usize, frames: usize, channels: usize) -> MixtureSpectrogram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    MixtureSpectrogram {
        data: Array3::from_shape_simple_fn((freqs, frames, channels), || complex_normal(&mut rng)),
        sample_rate: 16000,
        frame_len: 2 * freqs.saturating_sub(1).max(1),
        hop_len: freqs.saturating_sub(1).max(1),
    }
}

/// Cost trace of `iterations` rounds on an 8-bin, 32-frame, 2-channel random
/// problem with two bases per source.
pub fn descent_trace(beta: f64, seed: u64, iterations: usize) -> Result<ConvergenceTrace> {
    let x = random_mixture(seed, 8, 32, 2);
    let cfg = GgdConfig::new(beta).with_rank(2).with_iterations(iterations).with_seed(seed);
    Ok(crate::pipeline::run(&x, &cfg)?.trace)
}

pub fn descent_trial(beta: f64, seed: u64, iterations: usize) -> Result<DescentReport> {
    Ok(audit_descent(&descent_trace(beta, seed, iterations)?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MajorizerStats {
    pub draws: usize,
    /// Smallest g(w) − f(w) over random w, relative to max(1, f(w)).
    pub min_gap: f64,
    /// Largest |g(w̃) − f(w̃)| / max(1, f(w̃)).
    pub max_contact_error: f64,
}

/// Monte-Carlo check of the quartic majorizer over N ∈ {1..4}, J ∈ {1, 2, 5, 50}.
pub fn majorizer_draws(seed: u64, draws: usize) -> Result<MajorizerStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = MajorizerStats { draws, min_gap: f64::INFINITY, max_contact_error: 0.0 };
    for _ in 0..draws {
        let channels = rng.random_range(1..=4);
        let frames = [1, 2, 5, 50][rng.random_range(0..4)];
        let x = Array2::from_shape_simple_fn((frames, channels), || complex_normal(&mut rng));
        let r: Vec<f64> = (0..frames).map(|_| rng.random_range(0.1..3.0)).collect();
        let w_tilde = CVector::from_fn(channels, |_, _| complex_normal(&mut rng));
        let w = CVector::from_fn(channels, |_, _| complex_normal(&mut rng));
        let f = GgdQuarticObjective::new(x.view(), &r)?;
        let g = QuarticMajorizer { matrix: build_majorizer_g(x.view(), &r, &w_tilde)? };
        let fw = f.evaluate(&w);
        stats.min_gap = stats.min_gap.min((g.evaluate(&w) - fw) / fw.max(1.0));
        let ft = f.evaluate(&w_tilde);
        stats.max_contact_error = stats.max_contact_error.max((g.evaluate(&w_tilde) - ft).abs() / ft.max(1.0));
    }
    Ok(stats)
}

/// Two synthetic sources mixed instantaneously, separated from the STFT of
/// the mixture and scored with SI-SDR.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScenario {
    pub seconds: f64,
    pub sample_rate: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub kinds: Vec<SourceKind>,
    /// Spectral patterns per synthetic source.
    pub source_rank: usize,
    pub mixing: DMatrix<f64>,
    pub bases: usize,
    pub iterations: usize,
}

impl SyntheticScenario {
    /// Ten seconds at 16 kHz, 128/64 ms frames, mixing [[1, 0.6], [0.5, 1]],
    /// two bases and 200 iterations.
    pub fn standard() -> Self {
        SyntheticScenario {
            seconds: 10.0,
            sample_rate: 16000,
            window_ms: 128.0,
            hop_ms: 64.0,
            kinds: vec![SourceKind::LowRankTonal, SourceKind::Subgaussian],
            source_rank: 2,
            mixing: DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.5, 1.0]),
            bases: 2,
            iterations: 200,
        }
    }

    /// A shorter variant for smoke runs.
    pub fn quick() -> Self {
        SyntheticScenario { seconds: 3.0, iterations: 60, ..Self::standard() }
    }

    pub fn sources(&self, seed: u64) -> Vec<Vec<f64>> {
        let len = (self.seconds * f64::from(self.sample_rate)).round() as usize;
        self.kinds
            .iter()
            .enumerate()
            .map(|(n, kind)| synth_source(*kind, self.source_rank, len, self.sample_rate, seed.wrapping_mul(1000).wrapping_add(n as u64)))
            .collect()
    }

    pub fn mixture(&self, sources: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        mix(sources, &MixingSpec::Instantaneous(self.mixing.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub scores: Vec<SourceScore>,
    pub estimates: Vec<Vec<f64>>,
    pub separation: Separation,
}

/// Separates one seeded instance of the scenario with shape parameter `beta`.
pub fn separation_trial(scenario: &SyntheticScenario, beta: f64, seed: u64) -> Result<TrialOutcome> {
    let sources = scenario.sources(seed);
    let mixture = scenario.mixture(&sources)?;
    let plan = StftPlan::hamming_ms(scenario.window_ms, scenario.hop_ms, scenario.sample_rate)?;
    let cfg = GgdConfig::new(beta)
        .with_rank(scenario.bases)
        .with_iterations(scenario.iterations)
        .with_seed(seed);
    let (estimates, separation) = separate_waveforms(&mixture, &plan, &cfg)?;
    let scores = sdr_improvement(&estimates, &sources, &mixture[cfg.reference_channel])?;
    Ok(TrialOutcome { scores, estimates, separation })
}
