//! Generalized Gaussian source model and the majorization-minimization
//! updates of its low-rank scale, rᵖ_{ijn} = Σₖ t_{ikn} v_{kjn}.

use std::f64::consts::PI;

use ndarray::{Array2, Array3, Array4, ArrayView2, Axis, Zip};
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::Exponent;
use crate::types::{GgdConfig, NmfModel, SourceSpectrogram};

/// rᵖ per (bin, frame, source).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleField {
    pub r_pow_p: Array3<f64>,
}

impl ScaleField {
    /// The scale r itself, (rᵖ)^(1/p).
    pub fn scale(&self, i: usize, j: usize, n: usize, p: f64) -> f64 {
        self.r_pow_p[[i, j, n]].powf(1.0 / p)
    }

    /// r_{ijn} for one bin and source across all frames.
    pub fn scale_row(&self, i: usize, n: usize, p: f64) -> Vec<f64> {
        self.r_pow_p
            .index_axis(Axis(0), i)
            .column(n)
            .iter()
            .map(|v| v.powf(1.0 / p))
            .collect()
    }
}

/// log of the isotropic complex generalized Gaussian density
/// β / (2π r² Γ(2/β)) · exp(-|z|^β / r^β).
pub fn ggd_log_density(z: Complex64, beta: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveScale(r));
    }
    if !(beta > 0.0) {
        return Err(Error::BetaOutOfRange(beta));
    }
    Ok(beta.ln() - (2.0 * PI * r * r).ln() - ln_gamma(2.0 / beta) - (z.norm() / r).powf(beta))
}

pub fn compute_scale_field(model: &NmfModel) -> ScaleField {
    let (freqs, frames, sources) = (model.freqs(), model.frames(), model.sources());
    let mut r_pow_p = Array3::zeros((freqs, frames, sources));
    for n in 0..sources {
        let prod = model.bases[n].dot(&model.activations[n]);
        r_pow_p.index_axis_mut(Axis(2), n).assign(&prod);
    }
    ScaleField { r_pow_p }
}

/// max(|y|, ε_y)^β per (bin, frame, source).
pub fn powered_magnitudes(y: &SourceSpectrogram, cfg: &GgdConfig) -> Array3<f64> {
    let floor_sq = cfg.floors.y * cfg.floors.y;
    let half_beta = Exponent::new(cfg.beta / 2.0);
    y.data.mapv(|z| half_beta.apply(z.norm_sqr().max(floor_sq)))
}

/// Numerator and denominator weights of the multiplicative updates for one source:
/// A·R^{-(β/p+1)} and R^{-1}.
fn update_weights(powers: ArrayView2<'_, f64>, r_pow_p: &Array2<f64>, cfg: &GgdConfig) -> (Array2<f64>, Array2<f64>) {
    let exponent = Exponent::new(-(cfg.beta / cfg.p + 1.0));
    let mut num = Array2::zeros(r_pow_p.raw_dim());
    let mut den = Array2::zeros(r_pow_p.raw_dim());
    Zip::from(&mut num)
        .and(&mut den)
        .and(powers)
        .and(r_pow_p)
        .for_each(|num, den, a, r| {
            *num = a * exponent.apply(*r);
            *den = 1.0 / r;
        });
    (num, den)
}

fn multiplicative_step(factor: &mut Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>, cfg: &GgdConfig) {
    let power = cfg.p / (cfg.beta + cfg.p);
    let scale = cfg.beta / 2.0;
    let floor = cfg.floors.nmf;
    Zip::from(factor).and(numer).and(denom).for_each(|f, nu, de| {
        *f = (*f * (scale * nu / de).powf(power)).max(floor);
    });
}

/// Basis update with precomputed max(|y|, ε)^β.
pub fn update_bases_with_powers(model: &mut NmfModel, powers: &Array3<f64>, cfg: &GgdConfig) {
    for n in 0..model.sources() {
        let r = model.bases[n].dot(&model.activations[n]);
        let (num, den) = update_weights(powers.index_axis(Axis(2), n), &r, cfg);
        let v_t = model.activations[n].t();
        let numer = num.dot(&v_t);
        let denom = den.dot(&v_t);
        multiplicative_step(&mut model.bases[n], &numer, &denom, cfg);
    }
}

/// Activation update with precomputed max(|y|, ε)^β. Sums run over bins.
pub fn update_activations_with_powers(model: &mut NmfModel, powers: &Array3<f64>, cfg: &GgdConfig) {
    for n in 0..model.sources() {
        let r = model.bases[n].dot(&model.activations[n]);
        let (num, den) = update_weights(powers.index_axis(Axis(2), n), &r, cfg);
        let t_t = model.bases[n].t();
        let numer = t_t.dot(&num);
        let denom = t_t.dot(&den);
        multiplicative_step(&mut model.activations[n], &numer, &denom, cfg);
    }
}

/// One MM step on the bases T_n with the demixed signals held fixed.
pub fn update_bases(model: &mut NmfModel, y: &SourceSpectrogram, cfg: &GgdConfig) {
    update_bases_with_powers(model, &powered_magnitudes(y, cfg), cfg);
}

/// One MM step on the activations V_n with the demixed signals held fixed.
pub fn update_activations(model: &mut NmfModel, y: &SourceSpectrogram, cfg: &GgdConfig) {
    update_activations_with_powers(model, &powered_magnitudes(y, cfg), cfg);
}

/// The equality point of both auxiliary bounds: φ_{ijnk} = t v / Σ t v, ψ_{ijn} = Σ t v.
pub fn tight_auxiliaries(model: &NmfModel) -> (Array4<f64>, Array3<f64>) {
    let psi = compute_scale_field(model).r_pow_p;
    let (freqs, frames, sources) = psi.dim();
    let rank = model.rank();
    let phi = Array4::from_shape_fn((freqs, frames, sources, rank), |(i, j, n, k)| {
        model.bases[n][[i, k]] * model.activations[n][[k, j]] / psi[[i, j, n]]
    });
    (phi, psi)
}

/// Value of the Jensen + tangent-line majorizer minus the source-model part of
/// the cost, both evaluated at the current factors, divided by
/// max(1, source-model cost) so that roundoff does not scale with |y|^β.
///
/// `phi` has axes (bin, frame, source, basis) and must lie on the simplex over
/// the last axis; `psi` has axes (bin, frame, source) and must be positive.
/// The result is nonnegative up to roundoff and zero at [`tight_auxiliaries`].
pub fn majorizer_jensen_gap(
    model: &NmfModel,
    y: &SourceSpectrogram,
    cfg: &GgdConfig,
    phi: &Array4<f64>,
    psi: &Array3<f64>,
) -> Result<f64> {
    let (freqs, frames, sources) = (model.freqs(), model.frames(), model.sources());
    let rank = model.rank();
    if phi.dim() != (freqs, frames, sources, rank) || psi.dim() != (freqs, frames, sources) {
        return Err(Error::ShapeMismatch("auxiliary variables do not match the model".into()));
    }
    let ratio = cfg.beta / cfg.p;
    let scale = compute_scale_field(model);
    let mut gap = 0.0;
    let mut magnitude = 0.0;
    for i in 0..freqs {
        for j in 0..frames {
            for n in 0..sources {
                let aux = psi[[i, j, n]];
                if !(aux > 0.0) {
                    return Err(Error::InvalidAuxiliary(format!("psi[{i},{j},{n}] = {aux}")));
                }
                let weights = (0..rank).map(|k| phi[[i, j, n, k]]);
                let total: f64 = weights.clone().sum();
                if weights.clone().any(|w| !(w > 0.0)) || (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidAuxiliary(format!(
                        "phi[{i},{j},{n},:] is not a point of the open simplex"
                    )));
                }
                let a = y.data[[i, j, n]].norm().powf(cfg.beta);
                let r = scale.r_pow_p[[i, j, n]];
                let mut bound = 0.0;
                for k in 0..rank {
                    let tv = model.bases[n][[i, k]] * model.activations[n][[k, j]];
                    let w = phi[[i, j, n, k]];
                    bound += w.powf(ratio + 1.0) * a / tv.powf(ratio);
                }
                // tangent line of log at psi
                bound += 2.0 / cfg.p * (r / aux - 1.0 + aux.ln());
                let exact = a / r.powf(ratio) + 2.0 / cfg.p * r.ln();
                gap += bound - exact;
                magnitude += exact;
            }
        }
    }
    Ok(gap / f64::max(1.0, magnitude.abs()))
}
