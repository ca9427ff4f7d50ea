//! Hybrid-scheme simulation of the Gaussian core and the BSS process, the
//! exponentiated Ornstein–Uhlenbeck volatility, subsampling and the Riemann-sum
//! integrated-volatility oracle.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::kernels::{eval_kernel, KernelSpec};
use crate::special_fn::{integrate, QuadratureSpec};

const STREAM_BROWNIAN: u64 = 1;
const STREAM_VOLATILITY: u64 = 2;

/// Grid and discretization parameters of the hybrid scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HybridConfig {
    /// Number of Riemann-sum terms; the kernel is truncated at `big_n / n`.
    pub big_n: usize,
    /// Observations per unit time.
    pub n: usize,
    pub t_end: f64,
    /// Number of exactly simulated terms near the origin.
    #[cfg_attr(feature = "serde", serde(default = "default_kappa"))]
    pub kappa: usize,
}

#[cfg(feature = "serde")]
fn default_kappa() -> usize {
    3
}

impl HybridConfig {
    pub fn new(big_n: usize, n: usize, t_end: f64, kappa: usize) -> Result<Self> {
        let hc = HybridConfig { big_n, n, t_end, kappa };
        hc.validate()?;
        Ok(hc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::argument("n must be at least 1"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::argument(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.kappa < 1 {
            return Err(Error::argument("kappa must be at least 1"));
        }
        if self.big_n < self.n {
            return Err(Error::argument(format!(
                "big_n ({}) must be at least n ({})",
                self.big_n, self.n
            )));
        }
        if self.kappa >= self.big_n {
            return Err(Error::argument("kappa must be smaller than big_n"));
        }
        self.steps().map(|_| ())
    }

    pub fn delta(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// n·T, which must be a whole number of steps.
    pub fn steps(&self) -> Result<usize> {
        let s = self.n as f64 * self.t_end;
        let r = s.round();
        if r < 1.0 || (s - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::argument(format!(
                "n * t_end must be a positive integer, got {s}"
            )));
        }
        Ok(r as usize)
    }

    /// Length of the volatility input: big_n + n·T + 1.
    pub fn sigma_len(&self) -> Result<usize> {
        Ok(self.big_n + self.steps()? + 1)
    }
}

/// Parameters of σ_t = exp(β v_t) with dv_t = −θ v_t dt + dB_t.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VolatilityConfig {
    pub theta: f64,
    pub beta: f64,
}

impl VolatilityConfig {
    pub fn new(theta: f64, beta: f64) -> Result<Self> {
        let v = VolatilityConfig { theta, beta };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) || !self.theta.is_finite() || !self.beta.is_finite() {
            return Err(Error::argument("theta must be positive and beta finite"));
        }
        Ok(())
    }

    /// E[σ²] = exp(β²/θ) under the stationary law.
    pub fn second_moment(&self) -> f64 {
        (self.beta * self.beta / self.theta).exp()
    }
}

/// Uniformly spaced observations starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    values: Vec<f64>,
    delta: f64,
}

impl SamplePath {
    pub fn new(values: Vec<f64>, delta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::argument("sample path must not be empty"));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::argument(format!("grid spacing must be positive, got {delta}")));
        }
        Ok(SamplePath { values, delta })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Observations per unit time, 1/Δ.
    pub fn n(&self) -> f64 {
        1.0 / self.delta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the last observation.
    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.delta
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    /// Keep observations `0..len` (at least one).
    pub fn truncated(&self, len: usize) -> Result<SamplePath> {
        if len == 0 || len > self.values.len() {
            return Err(Error::argument(format!(
                "cannot truncate path of length {} to {len}",
                self.values.len()
            )));
        }
        SamplePath::new(self.values[..len].to_vec(), self.delta)
    }
}

/// Gaussian core, BSS path and volatility on the common grid 0, Δ, …, T.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub core: SamplePath,
    pub bss: SamplePath,
    pub vol: SamplePath,
}

/// Number of whole grid steps in [0, t], robust to rounding in t/Δ.
pub fn grid_index(t: f64, delta: f64) -> usize {
    let r = t / delta;
    let k = r.round();
    if (r - k).abs() <= 1e-9 * k.max(1.0) {
        k as usize
    } else {
        r.floor() as usize
    }
}

/// Mix a master seed with a stream index into an independent seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    splitmix64(master ^ splitmix64(stream))
}

/// Small dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    /// Lower Cholesky factor. Pivots within 1e−12 below zero are clamped to
    /// zero; anything more negative means the matrix is not PSD.
    pub fn cholesky(&self) -> Result<CovMatrix> {
        let d = self.dim;
        let mut l = CovMatrix {
            dim: d,
            data: vec![0.0; d * d],
        };
        for j in 0..d {
            let mut pivot = self.get(j, j);
            for k in 0..j {
                pivot -= l.get(j, k) * l.get(j, k);
            }
            if pivot < -1e-12 {
                return Err(Error::numeric(format!(
                    "covariance matrix not PSD (pivot {pivot:e} at {j})"
                )));
            }
            if pivot <= 0.0 {
                continue;
            }
            let ljj = pivot.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..d {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / ljj);
            }
        }
        Ok(l)
    }
}

/// Covariance of (ΔW, V_1, …, V_κ) over one step of length Δ = 1/n, with
/// V_k = ∫₀^Δ (kΔ − u)^α dW_u.
pub fn hybrid_cov_matrix(kappa: usize, n: usize, alpha: f64) -> Result<CovMatrix> {
    if kappa < 1 || n < 1 {
        return Err(Error::argument("kappa and n must be at least 1"));
    }
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(Error::argument(format!("alpha must lie in (-1/2, 1/2), got {alpha}")));
    }
    let delta = 1.0 / n as f64;
    let d = kappa + 1;
    let mut m = CovMatrix {
        dim: d,
        data: vec![0.0; d * d],
    };
    let q = QuadratureSpec::new(1e-13, 1e-300, 5000)?;
    m.set(0, 0, delta);
    for k in 1..d {
        let kf = k as f64;
        let a1 = alpha + 1.0;
        let c0k = delta.powf(a1) * (kf.powf(a1) - (kf - 1.0).powf(a1)) / a1;
        m.set(0, k, c0k);
        m.set(k, 0, c0k);
        let a2 = 2.0 * alpha + 1.0;
        m.set(k, k, delta.powf(a2) * (kf.powf(a2) - (kf - 1.0).powf(a2)) / a2);
        for j in 1..k {
            let jf = j as f64;
            // r = 1 − s puts the (j − s)^α singularity of j = 1 at the origin.
            let unit = integrate(
                |r: f64| (jf - 1.0 + r).powf(alpha) * (kf - 1.0 + r).powf(alpha),
                0.0,
                1.0,
                &q,
            )?;
            let v = delta.powf(a2) * unit;
            m.set(j, k, v);
            m.set(k, j, v);
        }
    }
    Ok(m)
}

/// Evaluation points b_k (in units of Δ) of the Riemann-sum part,
/// `b_k = ((k^{α+1} − (k−1)^{α+1})/(α+1))^{1/α}`, for k = 0..=big_n
/// (entries k ≤ κ are unused and set to 0).
pub fn riemann_points(alpha: f64, kappa: usize, big_n: usize) -> Vec<f64> {
    let mut b = vec![0.0; big_n + 1];
    for (k, bk) in b.iter_mut().enumerate().skip(kappa + 1) {
        let kf = k as f64;
        *bk = if alpha.abs() < 1e-8 {
            (kf * kf.ln() - (kf - 1.0) * (kf - 1.0).ln() - 1.0).exp()
        } else {
            let a1 = alpha + 1.0;
            // k^{a1} − (k−1)^{a1} without cancellation.
            let diff = -kf.powf(a1) * (a1 * (-1.0 / kf).ln_1p()).exp_m1();
            ((diff / a1).ln() / alpha).exp()
        };
    }
    b
}

/// Evaluates `out[i] = Σ_k weights[k] · signal[i + K − k]` for `i < out_len`,
/// where `K = weights.len() − 1` and `signal.len() = K + out_len`.
pub trait Convolution {
    fn causal_window(&self, weights: &[f64], signal: &[f64], out_len: usize) -> Vec<f64>;

    /// Two signals against the same weights.
    fn causal_window_pair(&self, weights: &[f64], a: &[f64], b: &[f64], out_len: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.causal_window(weights, a, out_len),
            self.causal_window(weights, b, out_len),
        )
    }
}

/// Direct O(out_len · K) evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DirectConvolution;

impl Convolution for DirectConvolution {
    fn causal_window(&self, weights: &[f64], signal: &[f64], out_len: usize) -> Vec<f64> {
        let kk = weights.len() - 1;
        assert_eq!(signal.len(), kk + out_len, "signal length must be K + out_len");
        (0..out_len)
            .map(|i| {
                let window = &signal[i..=i + kk];
                weights.iter().zip(window.iter().rev()).map(|(w, s)| w * s).sum()
            })
            .collect()
    }
}

/// Volatility σ on the grid i = −big_n, …, n·T (length big_n + n·T + 1).
///
/// Euler scheme `v_i = (1 − Δθ) v_{i−1} + √Δ B_i` started from the stationary
/// law N(0, 1/(2θ)); σ_i = exp(β v_i).
pub fn simulate_volatility(cfg: &VolatilityConfig, hc: &HybridConfig, seed: u64) -> Result<Vec<f64>> {
    cfg.validate()?;
    hc.validate()?;
    let delta = hc.delta();
    let phi = 1.0 - delta * cfg.theta;
    if phi <= 0.0 {
        return Err(Error::argument(format!(
            "unstable discretization: delta * theta = {} >= 1",
            delta * cfg.theta
        )));
    }
    let len = hc.sigma_len()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_VOLATILITY));
    let z: f64 = StandardNormal.sample(&mut rng);
    let mut v = z / (2.0 * cfg.theta).sqrt();
    let sd = delta.sqrt();
    let mut sigma = Vec::with_capacity(len);
    sigma.push((cfg.beta * v).exp());
    for _ in 1..len {
        let b: f64 = StandardNormal.sample(&mut rng);
        v = phi * v + sd * b;
        sigma.push((cfg.beta * v).exp());
    }
    Ok(sigma)
}

/// Hybrid-scheme simulation with the direct convolution for the Riemann sum.
pub fn simulate_bss(hc: &HybridConfig, k: &KernelSpec, sigma: &[f64], seed: u64) -> Result<SimulationOutput> {
    simulate_bss_with(hc, k, sigma, seed, &DirectConvolution)
}

/// Hybrid-scheme simulation of the core X (σ ≡ 1) and Y = ∫ g(t − s) σ_s dW_s
/// from the same Brownian draws. `sigma` covers the grid −big_n, …, n·T.
pub fn simulate_bss_with<C: Convolution + ?Sized>(
    hc: &HybridConfig,
    k: &KernelSpec,
    sigma: &[f64],
    seed: u64,
    conv: &C,
) -> Result<SimulationOutput> {
    hc.validate()?;
    k.validate()?;
    let expected = hc.sigma_len()?;
    if sigma.len() != expected {
        return Err(Error::argument(format!(
            "sigma has length {}, expected big_n + n*T + 1 = {expected}",
            sigma.len()
        )));
    }
    if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::argument("sigma must be positive and finite"));
    }
    let alpha = k.alpha();
    let kappa = hc.kappa;
    let big_n = hc.big_n;
    let steps = hc.steps()?;
    let delta = hc.delta();
    let chol = hybrid_cov_matrix(kappa, hc.n, alpha)?.cholesky()?;
    let dim = kappa + 1;
    let total_steps = big_n + steps;

    // Row s holds (ΔW, V_1, …, V_κ) for the step starting at grid index s − big_n.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_BROWNIAN));
    let mut draws = vec![0.0; total_steps * dim];
    let mut z = vec![0.0; dim];
    for row in draws.chunks_exact_mut(dim) {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(&mut rng);
        }
        for (i, r) in row.iter_mut().enumerate() {
            *r = z[..=i]
                .iter()
                .enumerate()
                .fold(0.0, |acc, (j, zj)| acc + chol.get(i, j) * zj);
        }
    }

    let b = riemann_points(alpha, kappa, big_n);
    let weights: Vec<f64> = b
        .iter()
        .enumerate()
        .map(|(i, &bk)| if i <= kappa { 0.0 } else { eval_kernel(k, bk * delta) })
        .collect();
    let lower: Vec<f64> = (1..=kappa).map(|j| k.slowly_varying(j as f64 * delta)).collect();

    let mut core_signal = vec![0.0; total_steps + 1];
    let mut bss_signal = vec![0.0; total_steps + 1];
    for s in 0..total_steps {
        let dw = draws[s * dim];
        core_signal[s] = dw;
        bss_signal[s] = sigma[s] * dw;
    }
    let out_len = steps + 1;
    let (core_upper, bss_upper) = conv.causal_window_pair(&weights, &core_signal, &bss_signal, out_len);

    let ones = vec![1.0; sigma.len()];
    let assemble = |upper: &[f64], sig: &[f64]| -> Vec<f64> {
        (0..out_len)
            .map(|i| {
                let m = i + big_n;
                let mut acc = 0.0;
                for j in 1..=kappa {
                    let s = m - j;
                    acc += lower[j - 1] * sig[s] * draws[s * dim + j];
                }
                acc + upper[i]
            })
            .collect()
    };
    let core = assemble(&core_upper, &ones);
    let bss = assemble(&bss_upper, sigma);
    if core.iter().chain(bss.iter()).any(|v| !v.is_finite()) {
        return Err(Error::numeric("non-finite value in simulated path"));
    }
    Ok(SimulationOutput {
        core: SamplePath::new(core, delta)?,
        bss: SamplePath::new(bss, delta)?,
        vol: SamplePath::new(sigma[big_n..].to_vec(), delta)?,
    })
}

/// Every `factor`-th observation starting at index 0.
pub fn subsample(p: &SamplePath, factor: usize) -> Result<SamplePath> {
    if factor < 1 {
        return Err(Error::argument("subsampling factor must be at least 1"));
    }
    if factor > 1 && factor >= p.len() {
        return Err(Error::argument(format!(
            "subsampling factor {factor} not smaller than path length {}",
            p.len()
        )));
    }
    let values = p.values().iter().step_by(factor).copied().collect();
    SamplePath::new(values, p.delta() * factor as f64)
}

/// `Δ Σ_{i=0}^{⌊t/Δ⌋} |σ_i|^p`, the Riemann approximation of ∫₀ᵗ |σ_s|^p ds.
pub fn integrated_vol_oracle(sigma: &SamplePath, p: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::argument(format!("time must be non-negative, got {t}")));
    }
    let last = grid_index(t, sigma.delta());
    if last >= sigma.len() {
        return Err(Error::argument(format!(
            "time {t} beyond path horizon {}",
            sigma.horizon()
        )));
    }
    let s: f64 = sigma.values()[..=last].iter().map(|v| v.abs().powf(p)).sum();
    Ok(sigma.delta() * s)
}
