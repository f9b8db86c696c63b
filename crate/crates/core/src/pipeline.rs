//! Alternating optimization of the demixing matrices and the low-rank source
//! model, followed by back-projection onto a reference channel.

use std::time::Instant;

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost_eval::cost_from_parts;
use crate::demix_giphsm::giphsm_sweep;
use crate::demix_ip::ip_sweep;
use crate::error::{Error, Result};
use crate::linalg::{self, hadamard_ratio};
use crate::source_model::{compute_scale_field, powered_magnitudes, update_activations_with_powers, update_bases_with_powers};
use crate::stft::{istft, stft, StftPlan};
use crate::types::{
    validate_problem, ConvergenceTrace, DemixingSet, GgdConfig, MixtureSpectrogram, NmfModel, ProblemShape,
    SourceSpectrogram, SweepStats, TraceRecord, UpdateScheme,
};

/// Identity demixing matrices and NMF factors drawn i.i.d. from (ε, 1].
pub fn initialize(cfg: &GgdConfig, shape: ProblemShape, seed: u64) -> (DemixingSet, NmfModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let floor = cfg.floors.nmf;
    let mut draw = |rows: usize, cols: usize| {
        Array2::from_shape_simple_fn((rows, cols), || (1.0 - rng.random::<f64>()).max(floor))
    };
    let mut bases = Vec::with_capacity(shape.sources);
    let mut activations = Vec::with_capacity(shape.sources);
    for _ in 0..shape.sources {
        bases.push(draw(shape.freqs, shape.rank));
        activations.push(draw(shape.rank, shape.frames));
    }
    (DemixingSet::identity(shape.freqs, shape.sources), NmfModel { bases, activations })
}

/// Working state of one separation run, advanced one outer iteration at a time.
#[derive(Debug, Clone)]
pub struct Ilrma<'a> {
    x: &'a MixtureSpectrogram,
    cfg: GgdConfig,
    scheme: UpdateScheme,
    pub demixing: DemixingSet,
    pub model: NmfModel,
    pub trace: ConvergenceTrace,
}

impl<'a> Ilrma<'a> {
    pub fn new(x: &'a MixtureSpectrogram, cfg: &GgdConfig) -> Result<Self> {
        let shape = validate_problem(x, cfg)?;
        let scheme = cfg.update_scheme().ok_or(Error::BetaOutOfRange(cfg.beta))?;
        let (demixing, model) = initialize(cfg, shape, cfg.seed);
        let initial = cost_from_parts(&demixing.demix(x), &demixing, &compute_scale_field(&model), cfg)?;
        Ok(Ilrma {
            x,
            cfg: cfg.clone(),
            scheme,
            demixing,
            model,
            trace: ConvergenceTrace { initial_cost: Some(initial), records: Vec::new() },
        })
    }

    pub fn config(&self) -> &GgdConfig {
        &self.cfg
    }

    /// One round: scale field, demixing sweep, y = Wx, then bases and activations.
    pub fn step(&mut self) -> Result<TraceRecord> {
        let started = Instant::now();
        let scale = compute_scale_field(&self.model);
        let stats: SweepStats = match self.scheme {
            UpdateScheme::IterativeProjection => ip_sweep(&mut self.demixing, self.x, &scale, &self.cfg)?,
            UpdateScheme::GipHsm => giphsm_sweep(&mut self.demixing, self.x, &scale, &self.cfg)?,
        };
        let y = self.demixing.demix(self.x);
        let powers = powered_magnitudes(&y, &self.cfg);
        update_bases_with_powers(&mut self.model, &powers, &self.cfg);
        update_activations_with_powers(&mut self.model, &powers, &self.cfg);
        let cost = cost_from_parts(&y, &self.demixing, &compute_scale_field(&self.model), &self.cfg)?;
        let record = TraceRecord {
            iter: self.trace.records.len() as u32 + 1,
            cost,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
            skipped_updates: stats.skipped,
            normalization_error: stats.max_normalization_error,
        };
        self.trace.records.push(record);
        Ok(record)
    }

    /// Current separated signals, before back-projection.
    pub fn demixed(&self) -> SourceSpectrogram {
        self.demixing.demix(self.x)
    }

    pub fn finish(self) -> Result<Separation> {
        let demixed = self.demixing.demix(self.x);
        let sources = back_project(&demixed, &self.demixing, self.cfg.reference_channel)?;
        Ok(Separation { sources, demixing: self.demixing, model: self.model, trace: self.trace })
    }
}

#[derive(Debug, Clone)]
pub struct Separation {
    /// Separated sources projected back onto the reference channel.
    pub sources: SourceSpectrogram,
    pub demixing: DemixingSet,
    pub model: NmfModel,
    pub trace: ConvergenceTrace,
}

/// Runs `cfg.iterations` rounds from the identity/random initialization.
pub fn run(x: &MixtureSpectrogram, cfg: &GgdConfig) -> Result<Separation> {
    let mut state = Ilrma::new(x, cfg)?;
    for _ in 0..cfg.iterations {
        state.step()?;
    }
    state.finish()
}

/// ŷ_{ijn} = [W_i⁻¹]_{ref,n} · y_{ijn}, which fixes the scale of every output
/// to its contribution at the reference channel.
pub fn back_project(y: &SourceSpectrogram, w: &DemixingSet, reference_channel: usize) -> Result<SourceSpectrogram> {
    let (freqs, frames, sources) = y.data.dim();
    if w.matrices.len() != freqs || w.sources() != sources {
        return Err(Error::ShapeMismatch("demixing set does not match the signals".into()));
    }
    if reference_channel >= sources {
        return Err(Error::ShapeMismatch(format!(
            "reference channel {reference_channel} out of range for {sources} channels"
        )));
    }
    let mut out = Array3::<Complex64>::zeros((freqs, frames, sources));
    for (i, matrix) in w.matrices.iter().enumerate() {
        if hadamard_ratio(matrix) <= f64::MIN_POSITIVE {
            return Err(Error::SingularDemixing);
        }
        let mut e = linalg::CVector::zeros(sources);
        e[reference_channel] = Complex64::new(1.0, 0.0);
        // row `reference_channel` of W⁻¹ is the solution of Wᴴ z = e, conjugated
        let row = linalg::solve(&matrix.adjoint(), &e).ok_or(Error::SingularDemixing)?;
        let y_bin = y.data.index_axis(Axis(0), i);
        let mut out_bin = out.index_axis_mut(Axis(0), i);
        for n in 0..sources {
            let gain = row[n].conj();
            for j in 0..frames {
                out_bin[[j, n]] = y_bin[[j, n]] * gain;
            }
        }
    }
    Ok(SourceSpectrogram { data: out })
}

/// Waveform-level separation: STFT, ILRMA, back-projection, inverse STFT.
/// Returns one waveform per source with the length of the input.
pub fn separate_waveforms(
    channels: &[Vec<f64>],
    plan: &StftPlan,
    cfg: &GgdConfig,
) -> Result<(Vec<Vec<f64>>, Separation)> {
    let len = channels.first().map_or(0, |c| c.len());
    let x = stft(channels, plan)?;
    let separation = run(&x, cfg)?;
    let waveforms = istft(&separation.sources.data, plan, len)?;
    Ok((waveforms, separation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use rand::Rng;

    fn random_mixture(seed: u64, freqs: usize, frames: usize, channels: usize) -> MixtureSpectrogram {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        MixtureSpectrogram {
            data: Array3::from_shape_simple_fn((freqs, frames, channels), || {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            }),
            sample_rate: 16000,
            frame_len: 2 * (freqs - 1),
            hop_len: freqs - 1,
        }
    }

    #[test]
    fn initialization_is_deterministic_and_bounded() {
        let cfg = GgdConfig::new(4.0).with_rank(3);
        let shape = ProblemShape { freqs: 5, frames: 7, sources: 2, rank: 3 };
        let (w1, m1) = initialize(&cfg, shape, 42);
        let (w2, m2) = initialize(&cfg, shape, 42);
        assert_eq!(w1, w2);
        assert_eq!(m1, m2);
        assert!(w1.matrices.iter().all(|w| *w == CMatrix::identity(2, 2)));
        for f in m1.bases.iter().chain(&m1.activations) {
            assert!(f.iter().all(|v| *v > 0.0 && *v <= 1.0));
        }
        let (_, m3) = initialize(&cfg, shape, 43);
        assert_ne!(m1, m3);
    }

    #[test]
    fn zero_iterations_returns_the_mixture() {
        let x = random_mixture(1, 5, 8, 2);
        let out = run(&x, &GgdConfig::new(4.0).with_rank(2).with_iterations(0)).unwrap();
        assert!(out.trace.is_empty());
        assert_eq!(out.sources.data.index_axis(Axis(2), 0), x.data.index_axis(Axis(2), 0));
        // with identity W, source n back-projected to channel 0 keeps only W⁻¹[0, n]
        assert!(out.sources.data.index_axis(Axis(2), 1).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn unsupported_beta_is_rejected() {
        let x = random_mixture(2, 3, 4, 2);
        assert!(matches!(Ilrma::new(&x, &GgdConfig::new(3.0).with_rank(1)), Err(Error::Validation(_))));
    }

    #[test]
    fn runs_descend_for_every_scheme() {
        for beta in [1.0, 1.99, 2.0, 4.0] {
            let x = random_mixture(3, 6, 20, 2);
            let out = run(&x, &GgdConfig::new(beta).with_rank(2).with_iterations(15).with_seed(5)).unwrap();
            assert_eq!(out.trace.records.len(), 15);
            let report = crate::cost_eval::audit_descent(&out.trace);
            assert!(report.is_monotone(), "beta {beta}: {:?}", report.violations);
        }
    }

    #[test]
    fn single_source_back_projection_is_the_observation() {
        let x = random_mixture(4, 4, 6, 1);
        let mut w = DemixingSet::identity(4, 1);
        for (i, m) in w.matrices.iter_mut().enumerate() {
            m[(0, 0)] = Complex64::new(0.3 + i as f64, -0.7);
        }
        let y = w.demix(&x);
        let back = back_project(&y, &w, 0).unwrap();
        for (a, b) in back.data.iter().zip(x.data.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn back_projection_sums_to_reference_and_ignores_row_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for channels in 2..=4 {
            let x = random_mixture(6 + channels as u64, 3, 9, channels);
            let w = DemixingSet {
                matrices: (0..3)
                    .map(|_| CMatrix::from_fn(channels, channels, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                    .collect(),
            };
            for reference in 0..channels {
                let back = back_project(&w.demix(&x), &w, reference).unwrap();
                for i in 0..3 {
                    for j in 0..9 {
                        let sum: Complex64 = (0..channels).map(|n| back.data[[i, j, n]]).sum();
                        assert!((sum - x.data[[i, j, reference]]).norm() < 1e-10);
                    }
                }
                let mut scaled = w.clone();
                for m in scaled.matrices.iter_mut() {
                    let c = Complex64::new(rng.random_range(0.5..2.0), rng.random_range(-1.0..1.0));
                    for col in 0..channels {
                        m[(1, col)] *= c;
                    }
                }
                let back2 = back_project(&scaled.demix(&x), &scaled, reference).unwrap();
                for (a, b) in back.data.iter().zip(back2.data.iter()) {
                    assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()));
                }
            }
        }
    }
}
