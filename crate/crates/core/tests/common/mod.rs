//! Independent reference implementations used as oracles by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ilrma::types::{MixtureSpectrogram, NmfModel};

pub type M = DMatrix<Complex64>;
pub type V = DVector<Complex64>;

pub fn crand(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// x = A s per bin, with independent sources s ~ CN(0, TV) for random nonnegative
/// rank-2 factors and random complex mixing matrices A.
pub fn low_rank_mixture(seed: u64, freqs: usize, frames: usize, channels: usize) -> MixtureSpectrogram {
    let mut rng = rng(seed);
    let variance: Vec<Array2<f64>> = (0..channels)
        .map(|_| {
            let t = Array2::from_shape_simple_fn((freqs, 2), || rng.random_range(0.05..1.0));
            let v = Array2::from_shape_simple_fn((2, frames), || rng.random_range(0.05..1.0));
            t.dot(&v)
        })
        .collect();
    let mixing: Vec<M> = (0..freqs).map(|_| M::from_fn(channels, channels, |_, _| crand(&mut rng))).collect();
    let mut data = ndarray::Array3::zeros((freqs, frames, channels));
    for i in 0..freqs {
        for j in 0..frames {
            let s = V::from_fn(channels, |n, _| {
                let z: Complex64 = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                z * (variance[n][[i, j]] / 2.0).sqrt()
            });
            let x = &mixing[i] * s;
            for m in 0..channels {
                data[[i, j, m]] = x[m];
            }
        }
    }
    MixtureSpectrogram { data, sample_rate: 16_000, frame_len: 2 * (freqs - 1), hop_len: freqs - 1 }
}

/// Textbook ILRMA with the Itakura-Saito NMF model (Gaussian sources, power
/// spectrogram modelled as TV), written without any of the library's helpers.
#[derive(Debug, Clone)]
pub struct IsIlrma {
    pub x: Vec<Vec<V>>,
    pub w: Vec<M>,
    pub t: Vec<Array2<f64>>,
    pub v: Vec<Array2<f64>>,
}

impl IsIlrma {
    pub fn new(x: &MixtureSpectrogram, w: Vec<M>, model: &NmfModel) -> Self {
        let (freqs, frames, channels) = x.data.dim();
        let obs = (0..freqs)
            .map(|i| (0..frames).map(|j| V::from_fn(channels, |m, _| x.data[[i, j, m]])).collect())
            .collect();
        IsIlrma { x: obs, w, t: model.bases.clone(), v: model.activations.clone() }
    }

    fn sources(&self) -> usize {
        self.t.len()
    }

    fn variance(&self, n: usize) -> Array2<f64> {
        self.t[n].dot(&self.v[n])
    }

    fn power(&self, n: usize) -> Array2<f64> {
        let freqs = self.x.len();
        let frames = self.x[0].len();
        Array2::from_shape_fn((freqs, frames), |(i, j)| {
            let row = self.w[i].row(n);
            (0..row.len()).map(|m| row[m] * self.x[i][j][m]).sum::<Complex64>().norm_sqr()
        })
    }

    pub fn step(&mut self) {
        let frames = self.x[0].len() as f64;
        let lambda: Vec<Array2<f64>> = (0..self.sources()).map(|n| self.variance(n)).collect();
        for i in 0..self.x.len() {
            for n in 0..self.sources() {
                let mut u = M::zeros(self.w[i].nrows(), self.w[i].ncols());
                for (j, xj) in self.x[i].iter().enumerate() {
                    u += (xj * xj.adjoint()).unscale(lambda[n][[i, j]]);
                }
                u = u.unscale(frames);
                let wu = &self.w[i] * &u;
                let mut e = V::zeros(u.nrows());
                e[n] = Complex64::new(1.0, 0.0);
                let col = wu.lu().solve(&e).expect("nonsingular WU");
                let norm = (col.adjoint() * &u * &col)[(0, 0)].re.sqrt();
                let col = col.unscale(norm);
                for m in 0..col.len() {
                    self.w[i][(n, m)] = col[m].conj();
                }
            }
        }
        for n in 0..self.sources() {
            let p = self.power(n);
            let lam = self.variance(n);
            let num = (&p / &lam.mapv(|l| l * l)).dot(&self.v[n].t());
            let den = lam.mapv(|l| 1.0 / l).dot(&self.v[n].t());
            self.t[n] = (&self.t[n] * &(num / den).mapv(f64::sqrt)).mapv(|e| e.max(1e-12));
            let lam = self.variance(n);
            let num = self.t[n].t().dot(&(&p / &lam.mapv(|l| l * l)));
            let den = self.t[n].t().dot(&lam.mapv(|l| 1.0 / l));
            self.v[n] = (&self.v[n] * &(num / den).mapv(f64::sqrt)).mapv(|e| e.max(1e-12));
        }
    }

    /// Σᵢ −2J log|det Wᵢ| + Σ (|y|²/λ + ln λ).
    pub fn cost(&self) -> f64 {
        let frames = self.x[0].len() as f64;
        let mut total: f64 = self.w.iter().map(|w| -2.0 * frames * w.determinant().norm().ln()).sum();
        for n in 0..self.sources() {
            let p = self.power(n);
            let lam = self.variance(n);
            total += p.iter().zip(lam.iter()).map(|(a, l)| a / l + l.ln()).sum::<f64>();
        }
        total
    }
}

/// G = H Q̃ Hᴴ / √(J Σ|q̃ⱼ|⁴), built with explicit matrices.
pub fn direct_majorizer(x: ArrayView2<'_, Complex64>, r: &[f64], w_tilde: &V) -> M {
    let (frames, channels) = x.dim();
    let h = M::from_fn(channels, frames, |m, j| x[[j, m]] / r[j]);
    let q = h.adjoint() * w_tilde;
    let q_norm_sq = q.norm_squared();
    let quartic: f64 = q.iter().map(|z| z.norm_sqr().powi(2)).sum();
    let mut q_mat = M::identity(frames, frames).scale(q_norm_sq) - &q * q.adjoint();
    for j in 0..frames {
        q_mat[(j, j)] += Complex64::new(q[j].norm_sqr(), 0.0);
    }
    (&h * q_mat * h.adjoint()).unscale((frames as f64 * quartic).sqrt())
}

/// (1/J) Σⱼ |wᴴxⱼ|⁴ / rⱼ⁴.
pub fn quartic_level(x: ArrayView2<'_, Complex64>, r: &[f64], w: &V) -> f64 {
    let (frames, channels) = x.dim();
    (0..frames)
        .map(|j| {
            let y: Complex64 = (0..channels).map(|m| w[m].conj() * x[[j, m]]).sum();
            (y.norm() / r[j]).powi(4)
        })
        .sum::<f64>()
        / frames as f64
}

pub fn relative_frobenius(a: &M, b: &M) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
