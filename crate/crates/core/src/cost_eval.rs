//! Negative log-likelihood of the generalized Gaussian ILRMA model and
//! descent auditing of convergence traces.
//!
//! The cost omits the additive constant, so values are comparable only between
//! runs that share β and p.

use crate::error::{Error, Result};
use crate::linalg::{hadamard_ratio, log_abs_det, Exponent};
use crate::source_model::{compute_scale_field, ScaleField};
use crate::types::{ConvergenceTrace, DemixingSet, GgdConfig, MixtureSpectrogram, NmfModel, SourceSpectrogram};

/// Σ_{ijn} |y|^β / (rᵖ)^{β/p} + (2/p) log rᵖ.
pub fn source_model_cost(y: &SourceSpectrogram, scale: &ScaleField, cfg: &GgdConfig) -> f64 {
    let ratio = cfg.beta / cfg.p;
    let log_weight = 2.0 / cfg.p;
    let half_beta = Exponent::new(cfg.beta / 2.0);
    y.data
        .iter()
        .zip(scale.r_pow_p.iter())
        .map(|(z, r)| {
            let log_r = r.ln();
            let a = half_beta.apply(z.norm_sqr());
            let inv = (-ratio * log_r).exp();
            let fit = if a == 0.0 {
                0.0
            } else if inv.is_finite() {
                a * inv
            } else {
                (a.ln() - ratio * log_r).exp()
            };
            fit + log_weight * log_r
        })
        .sum()
}

/// Σ_i log |det W_i|.
pub fn log_det_sum(w: &DemixingSet, cfg: &GgdConfig) -> Result<f64> {
    let mut total = 0.0;
    for m in &w.matrices {
        if hadamard_ratio(m) <= cfg.floors.det {
            return Err(Error::SingularDemixing);
        }
        total += log_abs_det(m).ok_or(Error::SingularDemixing)?;
    }
    Ok(total)
}

/// Cost from already demixed signals and the current scale field.
pub fn cost_from_parts(
    y: &SourceSpectrogram,
    w: &DemixingSet,
    scale: &ScaleField,
    cfg: &GgdConfig,
) -> Result<f64> {
    let frames = y.data.shape()[1] as f64;
    Ok(-2.0 * frames * log_det_sum(w, cfg)? + source_model_cost(y, scale, cfg))
}

/// −2J Σ_i log|det W_i| + Σ_{ijn} [ |y_{ijn}|^β / r_{ijn}^β + 2 log r_{ijn} ] with y = W x.
pub fn ggd_cost(x: &MixtureSpectrogram, w: &DemixingSet, model: &NmfModel, cfg: &GgdConfig) -> Result<f64> {
    let y = w.demix(x);
    cost_from_parts(&y, w, &compute_scale_field(model), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostIncrease {
    /// Index into `trace.records` of the iteration whose cost went up.
    pub index: usize,
    pub previous: f64,
    pub current: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescentReport {
    pub checked: usize,
    pub violations: Vec<CostIncrease>,
}

impl DescentReport {
    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Flags every step where the cost rose by more than 1e-9·(1 + |cost|).
///
/// The initial cost, when recorded, is the predecessor of the first record.
pub fn audit_descent(trace: &ConvergenceTrace) -> DescentReport {
    let mut report = DescentReport::default();
    let mut previous = trace.initial_cost;
    for (index, record) in trace.records.iter().enumerate() {
        if let Some(prev) = previous {
            report.checked += 1;
            if record.cost - prev > 1e-9 * (1.0 + prev.abs()) || record.cost.is_nan() {
                report.violations.push(CostIncrease { index, previous: prev, current: record.cost });
            }
        }
        previous = Some(record.cost);
    }
    report
}
