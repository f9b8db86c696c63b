//! Shared tensors, configuration and problem validation.
//!
//! Spectrogram tensors are stored row-major with axes (frequency bin, frame,
//! channel or source), so the slab for one frequency bin is contiguous.

use std::io::{self, Read, Write};

use ndarray::{Array2, Array3, ArrayView2};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result, Violation};
use crate::linalg::CMatrix;

/// Numerical floors guarding divisions in the update rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Floors {
    /// Lower bound on every NMF entry.
    pub nmf: f64,
    /// Lower bound on |y| wherever it is raised to a power.
    pub y: f64,
    /// Lower bound on the Hadamard ratio |det A| / Π‖rowₖ(A)‖ of matrices that get inverted.
    pub det: f64,
}

impl Default for Floors {
    fn default() -> Self {
        Floors { nmf: 1e-12, y: 1e-12, det: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateScheme {
    /// Iterative projection on the AM-GM quadratic majorizer, 0 < β ≤ 2.
    IterativeProjection,
    /// Generalized iterative projection on the quartic majorizer, β = 4.
    GipHsm,
}

/// Returns the demixing update rule that exists for a given shape parameter.
pub fn scheme_for_beta(beta: f64) -> Option<UpdateScheme> {
    if beta > 0.0 && beta <= 2.0 {
        Some(UpdateScheme::IterativeProjection)
    } else if beta == 4.0 {
        Some(UpdateScheme::GipHsm)
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GgdConfig {
    /// Shape parameter of the generalized Gaussian source model.
    pub beta: f64,
    /// Domain parameter linking the NMF model to the scale, rᵖ = Σₖ t v.
    pub p: f64,
    /// Number of NMF bases per source.
    pub rank: usize,
    pub iterations: usize,
    pub seed: u64,
    pub floors: Floors,
    /// Observation channel that separated sources are projected back onto.
    pub reference_channel: usize,
}

impl GgdConfig {
    /// Defaults follow the published experimental protocol: p = 0.5, 20 bases, 1000 iterations.
    pub fn new(beta: f64) -> Self {
        GgdConfig {
            beta,
            p: 0.5,
            rank: 20,
            iterations: 1000,
            seed: 0,
            floors: Floors::default(),
            reference_channel: 0,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }

    pub fn with_rank(mut self, rank: usize) -> Self {
        self.rank = rank;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_reference_channel(mut self, channel: usize) -> Self {
        self.reference_channel = channel;
        self
    }

    pub fn update_scheme(&self) -> Option<UpdateScheme> {
        scheme_for_beta(self.beta)
    }
}

/// Complex STFT of the M-channel observation, axes (bin, frame, channel).
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpectrogram {
    pub data: Array3<Complex64>,
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop_len: usize,
}

impl MixtureSpectrogram {
    pub fn freqs(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[2]
    }

    /// The J×M slab of frequency bin i.
    pub fn slab(&self, i: usize) -> ArrayView2<'_, Complex64> {
        self.data.index_axis(ndarray::Axis(0), i)
    }
}

/// Estimated source spectrogram, axes (bin, frame, source).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpectrogram {
    pub data: Array3<Complex64>,
}

impl SourceSpectrogram {
    pub fn sources(&self) -> usize {
        self.data.shape()[2]
    }
}

/// Per-bin demixing matrices. Row n of `matrices[i]` is w_{in}ᴴ.
#[derive(Debug, Clone, PartialEq)]
pub struct DemixingSet {
    pub matrices: Vec<CMatrix>,
}

impl DemixingSet {
    pub fn identity(freqs: usize, sources: usize) -> Self {
        DemixingSet { matrices: vec![CMatrix::identity(sources, sources); freqs] }
    }

    pub fn sources(&self) -> usize {
        self.matrices.first().map_or(0, |w| w.nrows())
    }

    /// y_{ij} = W_i x_{ij}.
    pub fn demix(&self, x: &MixtureSpectrogram) -> SourceSpectrogram {
        let (freqs, frames, channels) = x.data.dim();
        let sources = self.sources();
        let mut y = Array3::zeros((freqs, frames, sources));
        for i in 0..freqs {
            demix_bin(&self.matrices[i], x.slab(i), y.index_axis_mut(ndarray::Axis(0), i));
        }
        debug_assert_eq!(channels, sources);
        SourceSpectrogram { data: y }
    }
}

pub(crate) fn demix_bin(
    w: &CMatrix,
    x: ArrayView2<'_, Complex64>,
    mut y: ndarray::ArrayViewMut2<'_, Complex64>,
) {
    let (frames, channels) = x.dim();
    for j in 0..frames {
        for n in 0..w.nrows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..channels {
                acc += w[(n, m)] * x[[j, m]];
            }
            y[[j, n]] = acc;
        }
    }
}

/// Nonnegative low-rank model: bases T_n (I×K) and activations V_n (K×J) per source.
#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    pub bases: Vec<Array2<f64>>,
    pub activations: Vec<Array2<f64>>,
}

impl NmfModel {
    pub fn sources(&self) -> usize {
        self.bases.len()
    }

    pub fn rank(&self) -> usize {
        self.bases.first().map_or(0, |t| t.ncols())
    }

    pub fn freqs(&self) -> usize {
        self.bases.first().map_or(0, |t| t.nrows())
    }

    pub fn frames(&self) -> usize {
        self.activations.first().map_or(0, |v| v.ncols())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: u32,
    pub cost: f64,
    pub elapsed_ms: f64,
    pub skipped_updates: u32,
    /// Largest deviation of any updated filter from its scale postcondition
    /// (wᴴFw = 1 for IP, f(w) = 1/2 for the quartic update), relative.
    #[serde(skip)]
    pub normalization_error: f64,
}

/// Outcome of one demixing sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SweepStats {
    /// Filters left unchanged because their covariance or majorizer was singular.
    pub skipped: u32,
    pub max_normalization_error: f64,
}

impl SweepStats {
    pub fn merge(self, other: SweepStats) -> SweepStats {
        SweepStats {
            skipped: self.skipped + other.skipped,
            max_normalization_error: self.max_normalization_error.max(other.max_normalization_error),
        }
    }
}

/// Cost after every outer iteration, plus the cost of the initial point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub initial_cost: Option<f64>,
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }

    /// One JSON object per line: {"iter","cost","elapsed_ms","skipped_updates"}.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut out, record)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Dimensions of a validated problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProblemShape {
    pub freqs: usize,
    pub frames: usize,
    pub sources: usize,
    pub rank: usize,
}

/// Checks every invariant of the problem and reports all violations at once.
pub fn validate_problem(x: &MixtureSpectrogram, cfg: &GgdConfig) -> Result<ProblemShape> {
    let mut violations = Vec::new();
    let (freqs, frames, channels) = x.data.dim();
    if freqs == 0 || frames == 0 || channels == 0 {
        violations.push(Violation::DegenerateShape { freqs, frames, channels });
    }
    if let Some(((i, j, m), _)) = x
        .data
        .indexed_iter()
        .find(|(_, z)| !(z.re.is_finite() && z.im.is_finite()))
    {
        violations.push(Violation::NonFiniteInput { freq: i, frame: j, channel: m });
    }
    if scheme_for_beta(cfg.beta).is_none() {
        violations.push(Violation::UnsupportedBeta(cfg.beta));
    }
    if !(cfg.p > 0.0 && cfg.p.is_finite()) {
        violations.push(Violation::NonPositiveDomain(cfg.p));
    }
    if cfg.rank == 0 {
        violations.push(Violation::ZeroRank);
    }
    if violations.is_empty() {
        Ok(ProblemShape { freqs, frames, sources: channels, rank: cfg.rank })
    } else {
        Err(Error::Validation(violations))
    }
}

const DUMP_MAGIC: &[u8; 4] = b"ILRT";

/// Writes a complex tensor in the little-endian debug layout: magic "ILRT",
/// u32 dims (I, J, C), then (re, im) f64 pairs in (i, j, c) order.
pub fn write_debug_dump<W: Write>(mut out: W, data: &Array3<Complex64>) -> Result<()> {
    let (i, j, c) = data.dim();
    out.write_all(DUMP_MAGIC)?;
    for dim in [i, j, c] {
        let dim = u32::try_from(dim)
            .map_err(|_| Error::ShapeMismatch(format!("axis length {dim} exceeds u32")))?;
        out.write_all(&dim.to_le_bytes())?;
    }
    for z in data.iter() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_debug_dump<R: Read>(mut input: R) -> Result<Array3<Complex64>> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::UnsupportedFormat("missing ILRT magic".into()));
    }
    let mut dims = [0usize; 3];
    for d in dims.iter_mut() {
        let mut buf = [0u8; 4];
        input.read_exact(&mut buf)?;
        *d = u32::from_le_bytes(buf) as usize;
    }
    let count = dims[0] * dims[1] * dims[2];
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        input.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf);
        input.read_exact(&mut buf)?;
        let im = f64::from_le_bytes(buf);
        values.push(Complex64::new(re, im));
    }
    Array3::from_shape_vec((dims[0], dims[1], dims[2]), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}
