//! Iterative projection (IP) update of the demixing filters for 0 < β ≤ 2.
//!
//! The AM-GM bound |y|^β ≤ (β/2)|y|²/α^{2-β} + (1-β/2)α^β turns the source
//! term into a quadratic form wᴴFw, which IP minimizes together with
//! −log|det W| one filter at a time.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, hadamard_ratio, CMatrix, CVector, Exponent};
use crate::source_model::ScaleField;
use crate::types::{demix_bin, DemixingSet, GgdConfig, MixtureSpectrogram, SourceSpectrogram, SweepStats};

/// F_{in} for every bin i and source n.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCovariance {
    pub matrices: Vec<Vec<CMatrix>>,
}

fn check_beta(cfg: &GgdConfig) -> Result<()> {
    if cfg.beta > 0.0 && cfg.beta <= 2.0 {
        Ok(())
    } else {
        Err(Error::BetaOutOfRange(cfg.beta))
    }
}

/// c_j = (β/2J) / (max(|y_j|, ε)^{2-β} (rᵖ_j)^{β/p}) for one bin and source,
/// so that F = Σ_j c_j x_j x_jᴴ.
pub fn frame_weights(y: ArrayView1<'_, Complex64>, r_pow_p: ArrayView1<'_, f64>, cfg: &GgdConfig) -> Vec<f64> {
    let norm = cfg.beta / (2.0 * y.len() as f64);
    let y_exp = 2.0 - cfg.beta;
    let half_y_exp = Exponent::new(y_exp / 2.0);
    let r_exp = Exponent::new(cfg.beta / cfg.p);
    let floor_sq = cfg.floors.y * cfg.floors.y;
    y.iter()
        .zip(r_pow_p)
        .map(|(y, r)| {
            let mut denom = r_exp.apply(*r);
            if y_exp != 0.0 {
                denom *= half_y_exp.apply(y.norm_sqr().max(floor_sq));
            }
            norm / denom
        })
        .collect()
}

fn covariance_from_weights(x: ArrayView2<'_, Complex64>, weights: &[f64]) -> CMatrix {
    let channels = x.ncols();
    let mut f = CMatrix::zeros(channels, channels);
    for (row, c) in x.outer_iter().zip(weights) {
        for a in 0..channels {
            let xa = row[a] * *c;
            for b in 0..channels {
                f[(a, b)] += xa * row[b].conj();
            }
        }
    }
    f
}

/// wᴴFw evaluated as Σ_j c_j |wᴴx_j|², a sum of nonnegative terms that stays
/// accurate when F is badly conditioned.
pub fn frame_energy(x: ArrayView2<'_, Complex64>, weights: &[f64], w: &CVector) -> f64 {
    x.outer_iter()
        .zip(weights)
        .map(|(row, c)| c * row.iter().zip(w.iter()).map(|(xm, wm)| wm.conj() * xm).sum::<Complex64>().norm_sqr())
        .sum()
}

/// F_n = (β/2J) Σ_j x_j x_jᴴ / (max(|y_jn|, ε)^{2-β} (rᵖ_jn)^{β/p}) for one bin.
pub fn weighted_covariance_bin(
    x: ArrayView2<'_, Complex64>,
    y: ArrayView2<'_, Complex64>,
    r_pow_p: ArrayView2<'_, f64>,
    cfg: &GgdConfig,
) -> Vec<CMatrix> {
    (0..y.ncols())
        .map(|n| covariance_from_weights(x, &frame_weights(y.column(n), r_pow_p.column(n), cfg)))
        .collect()
}

pub fn compute_weighted_covariance(
    x: &MixtureSpectrogram,
    y: &SourceSpectrogram,
    scale: &ScaleField,
    cfg: &GgdConfig,
) -> Result<WeightedCovariance> {
    check_beta(cfg)?;
    let matrices = (0..x.freqs())
        .map(|i| {
            weighted_covariance_bin(
                x.slab(i),
                y.data.index_axis(Axis(0), i),
                scale.r_pow_p.index_axis(Axis(0), i),
                cfg,
            )
        })
        .collect();
    Ok(WeightedCovariance { matrices })
}

/// w ← F⁻¹W⁻¹eₙ, then w ← w / √(wᴴFw).
pub fn ip_update_filter(w: &CMatrix, f: &CMatrix, n: usize, cfg: &GgdConfig) -> Result<CVector> {
    if hadamard_ratio(w) <= cfg.floors.det {
        return Err(Error::SingularDemixing);
    }
    if hadamard_ratio(f) <= cfg.floors.det {
        return Err(Error::SingularCovariance);
    }
    let target = linalg::inverse_column(w, n).ok_or(Error::SingularDemixing)?;
    let filter = linalg::solve(f, &target).ok_or(Error::SingularCovariance)?;
    let energy = linalg::quadratic_form(f, &filter);
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::SingularCovariance);
    }
    Ok(filter.unscale(energy.sqrt()))
}

/// One IP pass over the sources of bin i, using the freshest W_i for each n.
/// Filters whose F is singular are left unchanged and counted as skipped.
pub fn ip_sweep_bin(
    w: &mut CMatrix,
    x: ArrayView2<'_, Complex64>,
    r_pow_p: ArrayView2<'_, f64>,
    cfg: &GgdConfig,
) -> Result<SweepStats> {
    let (frames, _) = x.dim();
    let mut y = Array2::zeros((frames, w.nrows()));
    demix_bin(w, x, y.view_mut());
    let mut stats = SweepStats::default();
    for n in 0..w.nrows() {
        // F_n depends only on y_n, which updates of the other filters leave untouched
        let weights = frame_weights(y.column(n), r_pow_p.column(n), cfg);
        let f = covariance_from_weights(x, &weights);
        match ip_update_filter(w, &f, n, cfg) {
            Ok(filter) => {
                let filter = filter.unscale(frame_energy(x, &weights, &filter).sqrt());
                let error = (frame_energy(x, &weights, &filter) - 1.0).abs();
                stats.max_normalization_error = stats.max_normalization_error.max(error);
                linalg::set_filter(w, n, &filter);
            }
            Err(Error::SingularCovariance) => stats.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(stats)
}

/// IP sweep over every bin; bins are processed in parallel.
pub fn ip_sweep(
    demixing: &mut DemixingSet,
    x: &MixtureSpectrogram,
    scale: &ScaleField,
    cfg: &GgdConfig,
) -> Result<SweepStats> {
    check_beta(cfg)?;
    let stats = demixing
        .matrices
        .par_iter_mut()
        .enumerate()
        .map(|(i, w)| ip_sweep_bin(w, x.slab(i), scale.r_pow_p.index_axis(Axis(0), i), cfg))
        .collect::<Result<Vec<SweepStats>>>()?;
    Ok(stats.into_iter().fold(SweepStats::default(), SweepStats::merge))
}

/// The per-bin AM-GM majorizer without constants: J Σₙ wₙᴴFₙwₙ − 2J log|det W|.
pub fn ip_majorizer_bin(w: &CMatrix, covariances: &[CMatrix], frames: usize) -> Result<f64> {
    let log_det = linalg::log_abs_det(w).ok_or(Error::SingularDemixing)?;
    let quad: f64 = covariances
        .iter()
        .enumerate()
        .map(|(n, f)| linalg::quadratic_form(f, &linalg::filter(w, n)))
        .sum();
    Ok(frames as f64 * (quad - 2.0 * log_det))
}

/// (β/2)·y²/α^{2-β} + (1-β/2)·α^β − y^β.
pub fn am_gm_majorizer_gap(y_abs: f64, alpha: f64, beta: f64) -> f64 {
    beta / 2.0 * y_abs * y_abs / alpha.powf(2.0 - beta) + (1.0 - beta / 2.0) * alpha.powf(beta) - y_abs.powf(beta)
}
