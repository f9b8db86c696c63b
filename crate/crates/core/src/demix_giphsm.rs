//! Generalized iterative projection for homogeneous source models (GIP-HSM)
//! and the demixing update of the sub-Gaussian (β = 4) model built on it.
//!
//! For a per-filter cost Σᵢ[−2 log|det Wᵢ| + Σₙ fᵢₙ(wᵢₙ)] where each f is
//! differentiable, has convex sublevel sets and is homogeneous of degree d,
//! the optimum over one filter separates into
//!
//! * a direction step: any w' with ∂f/∂wᴴ(w') ∥ Wᵢ⁻¹eₙ, and
//! * a scale step: w ← w' · (2 / (d f(w')))^{1/d}, which puts f(w) at 2/d.
//!
//! The β = 4 source term f(w) = (1/J) Σⱼ |wᴴxⱼ|⁴/rⱼ⁴ makes the direction step
//! a cubic vector equation, so it is replaced by the quartic majorizer
//! g(w) = (wᴴGw)² that touches f at the current filter. For g the direction
//! step is linear: w' = G⁻¹Wᵢ⁻¹eₙ.

use ndarray::{ArrayView2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, hadamard_ratio, CMatrix, CVector, Exponent};
use crate::source_model::ScaleField;
use crate::types::{DemixingSet, GgdConfig, MixtureSpectrogram, SweepStats};

/// A per-filter source term that is homogeneous of some degree d.
pub trait HomogeneousObjective {
    fn degree(&self) -> f64;
    fn evaluate(&self, w: &CVector) -> f64;
    /// Wirtinger derivative ∂f/∂wᴴ.
    fn gradient(&self, w: &CVector) -> CVector;
}

/// f(w) = wᴴFw, the IP case (d = 2).
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub matrix: CMatrix,
}

impl HomogeneousObjective for QuadraticObjective {
    fn degree(&self) -> f64 {
        2.0
    }

    fn evaluate(&self, w: &CVector) -> f64 {
        linalg::quadratic_form(&self.matrix, w)
    }

    fn gradient(&self, w: &CVector) -> CVector {
        &self.matrix * w
    }
}

/// g(w) = (wᴴGw)², the quartic majorizer (d = 4).
#[derive(Debug, Clone)]
pub struct QuarticMajorizer {
    pub matrix: CMatrix,
}

impl HomogeneousObjective for QuarticMajorizer {
    fn degree(&self) -> f64 {
        4.0
    }

    fn evaluate(&self, w: &CVector) -> f64 {
        linalg::quadratic_form(&self.matrix, w).powi(2)
    }

    fn gradient(&self, w: &CVector) -> CVector {
        let gw = &self.matrix * w;
        let scale = 2.0 * w.dotc(&gw).re;
        gw.scale(scale)
    }
}

/// f(w) = (1/J) Σⱼ |wᴴxⱼ|⁴ / rⱼ⁴ for one bin and source (d = 4).
#[derive(Debug, Clone)]
pub struct GgdQuarticObjective<'a> {
    x: ArrayView2<'a, Complex64>,
    inv_scale: Vec<f64>,
}

impl<'a> GgdQuarticObjective<'a> {
    /// `x` is the J×M slab of one bin, `scale` holds r_j (not rᵖ).
    pub fn new(x: ArrayView2<'a, Complex64>, scale: &[f64]) -> Result<Self> {
        if scale.len() != x.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "{} scale values for {} frames",
                scale.len(),
                x.nrows()
            )));
        }
        if let Some(r) = scale.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::NonPositiveScale(*r));
        }
        Ok(GgdQuarticObjective { x, inv_scale: scale.iter().map(|r| 1.0 / r).collect() })
    }

    /// qⱼ = xⱼᴴw / rⱼ.
    fn projections<'s>(&'s self, w: &'s CVector) -> impl Iterator<Item = Complex64> + 's {
        self.x.outer_iter().zip(&self.inv_scale).map(move |(row, inv_r)| {
            let mut q = Complex64::new(0.0, 0.0);
            for (xm, wm) in row.iter().zip(w.iter()) {
                q += xm.conj() * wm;
            }
            q * inv_r
        })
    }

    pub fn frames(&self) -> usize {
        self.x.nrows()
    }
}

impl HomogeneousObjective for GgdQuarticObjective<'_> {
    fn degree(&self) -> f64 {
        4.0
    }

    fn evaluate(&self, w: &CVector) -> f64 {
        let sum: f64 = self.projections(w).map(|q| q.norm_sqr().powi(2)).sum();
        sum / self.frames() as f64
    }

    fn gradient(&self, w: &CVector) -> CVector {
        let mut grad = CVector::zeros(w.len());
        for ((q, row), inv_r) in self.projections(w).zip(self.x.outer_iter()).zip(&self.inv_scale) {
            let coeff = q * q.norm_sqr() * inv_r;
            for (g, xm) in grad.iter_mut().zip(row.iter()) {
                *g += xm * coeff;
            }
        }
        grad.scale(2.0 / self.frames() as f64)
    }
}

/// Minimizer of −2 log η + η^d over η > 0.
pub fn optimal_eta(degree: f64) -> f64 {
    (2.0 / degree).powf(1.0 / degree)
}

/// One GIP-HSM update of filter n of W.
///
/// `direction_solver` receives Wᵢ⁻¹eₙ and must return a w' whose gradient is
/// parallel to it. The returned filter satisfies f(w) = 2/d.
pub fn giphsm_step<O, S>(objective: &O, w: &CMatrix, n: usize, cfg: &GgdConfig, direction_solver: S) -> Result<CVector>
where
    O: HomogeneousObjective + ?Sized,
    S: FnOnce(&CVector) -> Result<CVector>,
{
    if hadamard_ratio(w) <= cfg.floors.det {
        return Err(Error::SingularDemixing);
    }
    let target = linalg::inverse_column(w, n).ok_or(Error::SingularDemixing)?;
    let direction = direction_solver(&target)?;
    let value = objective.evaluate(&direction);
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::SolverFailure(format!("objective at the direction is {value}")));
    }
    let degree = objective.degree();
    Ok(direction.scale((2.0 / (degree * value)).powf(1.0 / degree)))
}

/// G = H Q̃ Hᴴ / √(J Σⱼ|q̃ⱼ|⁴) with H = [x₁/r₁, …, x_J/r_J], q̃ = Hᴴw̃ and
/// Q̃ = ‖q̃‖²I − q̃q̃ᴴ + diag(|q̃ⱼ|²), accumulated frame by frame as
/// ‖q̃‖²C − uuᴴ + D with C = Σ aaᴴ, u = Σ q̃ⱼaⱼ, D = Σ |q̃ⱼ|² aaᴴ.
pub fn build_majorizer_g(x: ArrayView2<'_, Complex64>, scale: &[f64], w_tilde: &CVector) -> Result<CMatrix> {
    let (frames, channels) = x.dim();
    if scale.len() != frames || w_tilde.len() != channels {
        return Err(Error::ShapeMismatch("slab, scale and filter sizes disagree".into()));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut cov = vec![zero; channels * channels];
    let mut weighted = vec![zero; channels * channels];
    let mut u = vec![zero; channels];
    let mut a = vec![zero; channels];
    let mut q_sq_sum = 0.0;
    let mut q_quartic_sum = 0.0;
    for (row, r) in x.outer_iter().zip(scale) {
        if !(*r > 0.0) {
            return Err(Error::NonPositiveScale(*r));
        }
        let inv_r = 1.0 / r;
        let mut q = zero;
        for ((am, xm), wm) in a.iter_mut().zip(row.iter()).zip(w_tilde.iter()) {
            *am = xm * inv_r;
            q += am.conj() * wm;
        }
        let q2 = q.norm_sqr();
        q_sq_sum += q2;
        q_quartic_sum += q2 * q2;
        for (p, ap) in a.iter().enumerate() {
            u[p] += q * ap;
            for (s, as_) in a.iter().enumerate() {
                let outer = ap * as_.conj();
                cov[p * channels + s] += outer;
                weighted[p * channels + s] += outer * q2;
            }
        }
    }
    if !(q_quartic_sum > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let norm = 1.0 / (frames as f64 * q_quartic_sum).sqrt();
    Ok(CMatrix::from_fn(channels, channels, |p, s| {
        let idx = p * channels + s;
        (cov[idx] * q_sq_sum - u[p] * u[s].conj() + weighted[idx]) * norm
    }))
}

/// β = 4 update of filter n: majorize at the current filter, solve the
/// direction G w' = Wᵢ⁻¹eₙ, then rescale so (1/J) Σⱼ|wᴴxⱼ|⁴/rⱼ⁴ = 1/2.
pub fn ggd4_update_filter(
    x: ArrayView2<'_, Complex64>,
    scale: &[f64],
    w: &CMatrix,
    n: usize,
    cfg: &GgdConfig,
) -> Result<CVector> {
    let objective = GgdQuarticObjective::new(x, scale)?;
    let current = linalg::filter(w, n);
    giphsm_step(&objective, w, n, cfg, |target| {
        let g = build_majorizer_g(x, scale, &current)?;
        if hadamard_ratio(&g) <= cfg.floors.det {
            return Err(Error::SingularMajorizer);
        }
        linalg::solve(&g, target).ok_or(Error::SingularMajorizer)
    })
}

/// One β = 4 pass over the sources of a bin. Filters whose majorizer is
/// singular or degenerate are left unchanged and counted.
pub fn ggd4_sweep_bin(
    w: &mut CMatrix,
    x: ArrayView2<'_, Complex64>,
    r_pow_p: ArrayView2<'_, f64>,
    cfg: &GgdConfig,
) -> Result<SweepStats> {
    let inv_p = Exponent::new(1.0 / cfg.p);
    let mut stats = SweepStats::default();
    for n in 0..w.nrows() {
        let scale: Vec<f64> = r_pow_p.column(n).iter().map(|r| inv_p.apply(*r)).collect();
        match ggd4_update_filter(x, &scale, w, n, cfg) {
            Ok(filter) => {
                let level = GgdQuarticObjective::new(x, &scale)?.evaluate(&filter);
                let error = (level / 0.5 - 1.0).abs();
                stats.max_normalization_error = stats.max_normalization_error.max(error);
                linalg::set_filter(w, n, &filter);
            }
            Err(Error::SingularMajorizer | Error::DegenerateDirection) => stats.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(stats)
}

/// β = 4 sweep over every bin; bins are processed in parallel.
pub fn giphsm_sweep(
    demixing: &mut DemixingSet,
    x: &MixtureSpectrogram,
    scale: &ScaleField,
    cfg: &GgdConfig,
) -> Result<SweepStats> {
    if cfg.beta != 4.0 {
        return Err(Error::BetaOutOfRange(cfg.beta));
    }
    let stats = demixing
        .matrices
        .par_iter_mut()
        .enumerate()
        .map(|(i, w)| ggd4_sweep_bin(w, x.slab(i), scale.r_pow_p.index_axis(Axis(0), i), cfg))
        .collect::<Result<Vec<SweepStats>>>()?;
    Ok(stats.into_iter().fold(SweepStats::default(), SweepStats::merge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demix_ip::ip_update_filter;
    use crate::linalg::{hermitian_defect, min_relative_eigenvalue};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn crand(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| crand(rng))
    }

    fn random_slab(rng: &mut ChaCha8Rng, frames: usize, channels: usize) -> (Array2<Complex64>, Vec<f64>) {
        let x = Array2::from_shape_fn((frames, channels), |_| crand(rng));
        let r = (0..frames).map(|_| rng.random_range(0.2..2.0)).collect();
        (x, r)
    }

    /// Direct H Q̃ Hᴴ with the J×J matrix materialized.
    fn direct_g(x: &Array2<Complex64>, r: &[f64], w_tilde: &CVector) -> CMatrix {
        let (frames, channels) = x.dim();
        let h = CMatrix::from_fn(channels, frames, |m, j| x[[j, m]] / r[j]);
        let q = h.adjoint() * w_tilde;
        let norm_sq: f64 = q.iter().map(|z| z.norm_sqr()).sum();
        let qmat = CMatrix::from_fn(frames, frames, |a, b| {
            if a == b { Complex64::new(norm_sq, 0.0) } else { -q[a] * q[b].conj() }
        });
        let quartic: f64 = q.iter().map(|z| z.norm_sqr().powi(2)).sum();
        (&h * qmat * h.adjoint()).unscale((frames as f64 * quartic).sqrt())
    }

    fn per_bin_cost<O: HomogeneousObjective>(w: &CMatrix, objectives: &[O]) -> f64 {
        let log_det = linalg::log_abs_det(w).unwrap();
        -2.0 * log_det + objectives.iter().enumerate().map(|(n, o)| o.evaluate(&linalg::filter(w, n))).sum::<f64>()
    }

    #[test]
    fn eta_values() {
        assert_eq!(optimal_eta(2.0), 1.0);
        assert!((optimal_eta(4.0) - 0.840896).abs() < 1e-6);
        // grid search oracle
        let (mut best, mut arg) = (f64::INFINITY, 0.0);
        for k in 0..=100_000 {
            let eta = 0.5 + k as f64 * 1e-5;
            let v = -2.0 * f64::ln(eta) + eta.powi(4);
            if v < best {
                best = v;
                arg = eta;
            }
        }
        assert!((arg - optimal_eta(4.0)).abs() < 1e-4);
    }

    #[test]
    fn objectives_are_homogeneous_with_convex_sublevel_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let (x, r) = random_slab(&mut rng, 7, n);
            let f_quad = QuadraticObjective { matrix: { let a = CMatrix::from_fn(n, n, |_, _| crand(&mut rng)); &a * a.adjoint() } };
            let w_t = random_vec(&mut rng, n);
            let g = QuarticMajorizer { matrix: build_majorizer_g(x.view(), &r, &w_t).unwrap() };
            let f4 = GgdQuarticObjective::new(x.view(), &r).unwrap();
            let objectives: [&dyn HomogeneousObjective; 3] = [&f_quad, &g, &f4];
            for obj in objectives {
                let w = random_vec(&mut rng, n);
                let eta = rng.random_range(0.1..3.0);
                let lhs = obj.evaluate(&w.scale(eta));
                let rhs = eta.powf(obj.degree()) * obj.evaluate(&w);
                assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
                let u = random_vec(&mut rng, n);
                let v = random_vec(&mut rng, n);
                let mid = (&u + &v).scale(0.5);
                let bound = obj.evaluate(&u).max(obj.evaluate(&v));
                assert!(obj.evaluate(&mid) <= bound + 1e-10 * (1.0 + bound));
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, r) = random_slab(&mut rng, 6, 3);
        let w_t = random_vec(&mut rng, 3);
        let g = QuarticMajorizer { matrix: build_majorizer_g(x.view(), &r, &w_t).unwrap() };
        let f4 = GgdQuarticObjective::new(x.view(), &r).unwrap();
        let objectives: [&dyn HomogeneousObjective; 2] = [&g, &f4];
        for obj in objectives {
            let w = random_vec(&mut rng, 3);
            let grad = obj.gradient(&w);
            let h = 1e-6;
            for m in 0..3 {
                // ∂f/∂wᴴ_m = (∂f/∂Re w_m + i ∂f/∂Im w_m) / 2
                let mut e = CVector::zeros(3);
                e[m] = Complex64::new(h, 0.0);
                let d_re = (obj.evaluate(&(&w + &e)) - obj.evaluate(&(&w - &e))) / (2.0 * h);
                e[m] = Complex64::new(0.0, h);
                let d_im = (obj.evaluate(&(&w + &e)) - obj.evaluate(&(&w - &e))) / (2.0 * h);
                let fd = Complex64::new(d_re, d_im) * 0.5;
                assert!((fd - grad[m]).norm() < 1e-6 * (1.0 + grad[m].norm()), "{fd} vs {}", grad[m]);
            }
        }
    }

    #[test]
    fn quadratic_step_reproduces_ip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = GgdConfig::new(2.0);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let a = CMatrix::from_fn(n, n, |_, _| crand(&mut rng));
            let f = &a * a.adjoint() + CMatrix::identity(n, n).scale(0.05);
            let w = CMatrix::from_fn(n, n, |_, _| crand(&mut rng));
            let src = rng.random_range(0..n);
            let obj = QuadraticObjective { matrix: f.clone() };
            let step = giphsm_step(&obj, &w, src, &cfg, |t| linalg::solve(&f, t).ok_or(Error::SingularCovariance)).unwrap();
            let ip = ip_update_filter(&w, &f, src, &cfg).unwrap();
            assert!((&step - &ip).norm() <= 1e-12 * ip.norm());
            assert!((obj.evaluate(&step) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn quartic_step_scales_to_one_half_and_descends() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cfg = GgdConfig::new(4.0);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let objectives: Vec<QuarticMajorizer> = (0..n)
                .map(|_| {
                    let (x, r) = random_slab(&mut rng, 9, n);
                    QuarticMajorizer { matrix: build_majorizer_g(x.view(), &r, &random_vec(&mut rng, n)).unwrap() }
                })
                .collect();
            let mut w = CMatrix::from_fn(n, n, |_, _| crand(&mut rng));
            for src in 0..n {
                let before = per_bin_cost(&w, &objectives);
                let g = objectives[src].matrix.clone();
                let filter = giphsm_step(&objectives[src], &w, src, &cfg, |t| {
                    linalg::solve(&g, t).ok_or(Error::SingularMajorizer)
                })
                .unwrap();
                assert!((objectives[src].evaluate(&filter) - 0.5).abs() <= 1e-10 * 0.5);
                // gradient ∥ W⁻¹eₙ
                let grad = objectives[src].gradient(&filter);
                let target = linalg::inverse_column(&w, src).unwrap();
                assert!(linalg::line_angle(&grad, &target) < 1e-8);
                linalg::set_filter(&mut w, src, &filter);
                let after = per_bin_cost(&w, &objectives);
                assert!(after <= before + 1e-9 * before.abs().max(1.0), "{before} -> {after}");
            }
        }
    }

    #[test]
    fn any_direction_is_rescaled_onto_the_level_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = GgdConfig::new(4.0);
        let (x, r) = random_slab(&mut rng, 11, 3);
        let obj = GgdQuarticObjective::new(x.view(), &r).unwrap();
        let w = CMatrix::identity(3, 3);
        for _ in 0..20 {
            let arbitrary = random_vec(&mut rng, 3).scale(rng.random_range(0.01..100.0));
            let out = giphsm_step(&obj, &w, 1, &cfg, |_| Ok(arbitrary.clone())).unwrap();
            assert!((obj.evaluate(&out) - 0.5).abs() <= 1e-10 * 0.5);
        }
        let zero = CVector::zeros(3);
        assert!(matches!(giphsm_step(&obj, &w, 0, &cfg, |_| Ok(zero.clone())), Err(Error::SolverFailure(_))));
        assert!(matches!(
            giphsm_step(&obj, &CMatrix::zeros(3, 3), 0, &cfg, |t| Ok(t.clone())),
            Err(Error::SingularDemixing)
        ));
    }

    #[test]
    fn single_frame_majorizer_is_tight_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 1..=4 {
            let (x, r) = random_slab(&mut rng, 1, n);
            let g = build_majorizer_g(x.view(), &r, &random_vec(&mut rng, n)).unwrap();
            let a = CVector::from_fn(n, |m, _| x[[0, m]] / r[0]);
            assert!((&g - &a * a.adjoint()).norm() < 1e-12 * g.norm());
            let f = GgdQuarticObjective::new(x.view(), &r).unwrap();
            let gm = QuarticMajorizer { matrix: g };
            for _ in 0..10 {
                let w = random_vec(&mut rng, n);
                assert!((gm.evaluate(&w) - f.evaluate(&w)).abs() <= 1e-10 * f.evaluate(&w));
            }
        }
    }

    #[test]
    fn streamed_majorizer_matches_direct_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(1..=4);
            let frames = rng.random_range(1..=64);
            let (x, r) = random_slab(&mut rng, frames, n);
            let w_t = random_vec(&mut rng, n);
            let streamed = build_majorizer_g(x.view(), &r, &w_t).unwrap();
            let direct = direct_g(&x, &r, &w_t);
            assert!((&streamed - &direct).norm() <= 1e-12 * direct.norm());
            assert!(hermitian_defect(&streamed) < 1e-12);
            assert!(min_relative_eigenvalue(&streamed) >= -1e-10);
        }
    }

    #[test]
    fn majorizer_bounds_the_quartic_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..2000 {
            let n = rng.random_range(1..=4);
            let frames = [1, 2, 5, 50][rng.random_range(0..4)];
            let (x, r) = random_slab(&mut rng, frames, n);
            let w_t = random_vec(&mut rng, n);
            let g = QuarticMajorizer { matrix: build_majorizer_g(x.view(), &r, &w_t).unwrap() };
            let f = GgdQuarticObjective::new(x.view(), &r).unwrap();
            let w = random_vec(&mut rng, n);
            assert!(g.evaluate(&w) - f.evaluate(&w) >= -1e-10 * f.evaluate(&w).max(1.0));
            let ft = f.evaluate(&w_t);
            assert!((g.evaluate(&w_t) - ft).abs() <= 1e-10 * ft.max(1.0));
        }
    }

    #[test]
    fn degenerate_direction() {
        let x = Array2::zeros((4, 2));
        assert!(matches!(
            build_majorizer_g(x.view(), &[1.0; 4], &CVector::from_element(2, Complex64::new(1.0, 0.0))),
            Err(Error::DegenerateDirection)
        ));
    }

    #[test]
    fn single_source_update_is_pure_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = GgdConfig::new(4.0);
        let (x, r) = random_slab(&mut rng, 13, 1);
        let w0 = CMatrix::from_element(1, 1, Complex64::new(0.7, -0.2));
        let out = ggd4_update_filter(x.view(), &r, &w0, 0, &cfg).unwrap();
        let quartic: f64 = (0..13).map(|j| (x[[j, 0]].norm() / r[j]).powi(4)).sum();
        let eta = (13.0 / (2.0 * quartic)).powf(0.25);
        // the 1×1 direction step only changes the phase and magnitude, so |w| = η
        assert!((out[0].norm() - eta).abs() < 1e-12 * eta);
    }

    #[test]
    fn ggd4_update_postconditions_and_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cfg = GgdConfig::new(4.0);
        for _ in 0..100 {
            let n = rng.random_range(2..=3);
            let frames = 16;
            let x = Array2::from_shape_fn((frames, n), |_| crand(&mut rng));
            let scales: Vec<Vec<f64>> = (0..n).map(|_| (0..frames).map(|_| rng.random_range(0.3..2.0)).collect()).collect();
            let mut w = CMatrix::from_fn(n, n, |_, _| crand(&mut rng));
            let cost = |w: &CMatrix| {
                let objs: Vec<_> = scales.iter().map(|s| GgdQuarticObjective::new(x.view(), s).unwrap()).collect();
                per_bin_cost(w, &objs)
            };
            for (src, scale) in scales.iter().enumerate() {
                let before = cost(&w);
                let g = build_majorizer_g(x.view(), scale, &linalg::filter(&w, src)).unwrap();
                let filter = ggd4_update_filter(x.view(), scale, &w, src, &cfg).unwrap();
                let f = GgdQuarticObjective::new(x.view(), scale).unwrap();
                assert!((f.evaluate(&filter) - 0.5).abs() <= 1e-9 * 0.5);
                linalg::set_filter(&mut w, src, &filter);
                let gw = &g * &filter;
                let target = linalg::inverse_column(&w, src).unwrap();
                let angle = linalg::line_angle(&gw, &target);
                assert!(angle < 1e-8, "angle {angle}");
                let after = cost(&w);
                assert!(after <= before + 1e-9 * before.abs().max(1.0), "{before} -> {after}");
            }
        }
    }
}
