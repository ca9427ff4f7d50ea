//! Constants and standardizations for the central limit theorems of
//! realised power variation: Hermite coefficients, Λ_p, the covariance of
//! the sample autocovariances, standardized errors, confidence intervals and
//! the sample-size bound for the non-parametric scale factor.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::estimators::{abs_moment, realised_power_variation, tau_nonparametric};
use crate::kernels::{variogram, KernelSpec};
use crate::simulate::{integrated_vol_oracle, SamplePath};
use crate::special_fn::{hermite, integrate, normal_quantile, QuadratureSpec};

/// Hermite truncation used by [`lambda_p_default`].
pub const DEFAULT_L_MAX: usize = 12;
const TAIL_REL: f64 = 1e-10;
const K_CAP: usize = 10_000_000;

/// Which scale factor enters the numerator of a standardized error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum CltVariant {
    /// True τ of the Gaussian core, true ∫σ^{2p} in the denominator.
    Infeasible,
    /// Population τ^Y = √E[σ₀²]·τ, estimated denominator.
    Semifeasible,
    /// Sample τ^{Y,N} from the same path, estimated denominator.
    Feasible,
}

impl CltVariant {
    pub const ALL: [CltVariant; 3] = [CltVariant::Infeasible, CltVariant::Semifeasible, CltVariant::Feasible];

    pub fn label(self) -> &'static str {
        match self {
            CltVariant::Infeasible => "infeasible",
            CltVariant::Semifeasible => "semifeasible",
            CltVariant::Feasible => "feasible",
        }
    }
}

fn factorial(l: usize) -> f64 {
    (1..=l).map(|i| i as f64).product()
}

/// Coefficient of H_l in the expansion of |x| − m₁ (l even, l ≥ 2):
/// `(−1)^{l/2+1} 2 (l−3)!! / (√(2π) l!)`.
pub fn hermite_coefficient_u1(l: usize) -> Result<f64> {
    if l < 2 || l % 2 == 1 {
        return Err(Error::argument(format!(
            "coefficient order must be even and at least 2, got {l}"
        )));
    }
    // (l−3)!!/l! as a running product to stay finite for large l.
    let mut ratio = 1.0 / (l as f64 * (l - 1) as f64);
    let mut k = l - 2;
    while k >= 2 {
        ratio *= (k - 1) as f64 / (k as f64 * (k - 1) as f64);
        k -= 2;
    }
    let sign = if (l / 2) % 2 == 1 { 1.0 } else { -1.0 };
    Ok(sign * 2.0 * ratio / (2.0 * PI).sqrt())
}

/// a_l = ⟨|x|^p − m_p, H_l⟩_φ / l! for l = 0..=l_max by quadrature. Odd
/// entries vanish by symmetry and are returned as exact zeros.
pub fn hermite_coefficients_numeric(p: f64, l_max: usize, q: &QuadratureSpec) -> Result<Vec<f64>> {
    if l_max < 2 {
        return Err(Error::argument(format!("l_max must be at least 2, got {l_max}")));
    }
    let m_p = abs_moment(p)?;
    let norm = (abs_moment(2.0 * p)? - m_p * m_p).max(0.0).sqrt();
    let mut out = vec![0.0; l_max + 1];
    for (l, a) in out.iter_mut().enumerate().step_by(2) {
        let lf = factorial(l);
        // |⟨u, H_l⟩_φ| ≤ ‖u‖ √(l!), which sets the scale of the absolute tolerance.
        let spec = QuadratureSpec::new(q.rel_tol, q.abs_tol.max(1e-13 * norm * lf.sqrt()), q.max_subdivisions)?;
        let f = |x: f64| (x.powf(p) - m_p) * hermite(l, x) * (-0.5 * x * x).exp();
        let half = integrate(f, 0.0, 1.0, &spec)? + integrate(f, 1.0, f64::INFINITY, &spec)?;
        *a = 2.0 * half / ((2.0 * PI).sqrt() * lf);
    }
    Ok(out)
}

/// Weighted L² distance between |x|^p − m_p and Σ_{l≤L} a_l H_l, with a_l
/// indexed from 0 in `coeffs`.
pub fn hermite_residual_norm(p: f64, coeffs: &[f64], q: &QuadratureSpec) -> Result<f64> {
    let m_p = abs_moment(p)?;
    let f = |x: f64| {
        let approx: f64 = coeffs.iter().enumerate().map(|(l, a)| a * hermite(l, x)).sum();
        let r = x.abs().powf(p) - m_p - approx;
        r * r * (-0.5 * x * x).exp()
    };
    // The integrand is even only when odd coefficients vanish; integrate both halves.
    let pos = integrate(f, 0.0, f64::INFINITY, q)?;
    let neg = integrate(|x| f(-x), 0.0, f64::INFINITY, q)?;
    Ok(((pos + neg) / (2.0 * PI).sqrt()).sqrt())
}

/// Binomial coefficient C(a, k) for real a.
fn binom(a: f64, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (a - i as f64) / (i + 1) as f64)
}

/// Correlation of unit-spaced fractional Gaussian noise at lag k:
/// `½(|k+1|^{2H} − 2k^{2H} + |k−1|^{2H})`.
pub fn fgn_autocorrelation(hurst: f64, k: usize) -> f64 {
    let two_h = 2.0 * hurst;
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    if k < 8 {
        return 0.5 * ((kf + 1.0).powf(two_h) - 2.0 * kf.powf(two_h) + (kf - 1.0).powf(two_h));
    }
    // k^{2H} Σ_{j≥1} C(2H, 2j) k^{−2j}: the direct form cancels for large k.
    let x = 1.0 / (kf * kf);
    let mut sum = 0.0;
    let mut xp = 1.0;
    for j in 1..40 {
        xp *= x;
        let term = binom(two_h, 2 * j) * xp;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    kf.powf(two_h) * sum
}

fn check_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::argument(format!(
            "Hurst parameter must lie in (0, 1), got {hurst}"
        )));
    }
    Ok(())
}

fn even_coefficients(p: f64, l_max: usize) -> Result<Vec<(usize, f64)>> {
    let l_max = l_max.max(2);
    let coeffs = hermite_coefficients_numeric(p, l_max, &QuadratureSpec::new(1e-12, 1e-300, 5000)?)?;
    Ok((2..=l_max).step_by(2).map(|l| (l, coeffs[l])).collect())
}

fn lambda_from_sums(coeffs: &[(usize, f64)], sums: &[f64]) -> f64 {
    coeffs
        .iter()
        .zip(sums)
        .map(|(&(l, c), s)| c * c * factorial(l) * (1.0 + 2.0 * s))
        .sum::<f64>()
        .sqrt()
}

/// Λ_p = √(Σ_{j=1}^{l_max/2} c_{2j}² (2j)! (1 + 2Σ_{k=1}^{k_max} ρ_H(k)^{2j})),
/// with c_l the Hermite coefficients of |x|^p.
pub fn lambda_p(p: f64, hurst: f64, l_max: usize, k_max: usize) -> Result<f64> {
    check_hurst(hurst)?;
    if l_max < 2 || k_max < 1 {
        return Err(Error::argument(
            "truncation limits must be at least l_max = 2 and k_max = 1",
        ));
    }
    let coeffs = even_coefficients(p, l_max)?;
    let mut sums = vec![0.0; coeffs.len()];
    for k in 1..=k_max {
        let r2 = fgn_autocorrelation(hurst, k).powi(2);
        let mut pow = 1.0;
        for s in sums.iter_mut() {
            pow *= r2;
            *s += pow;
        }
    }
    Ok(lambda_from_sums(&coeffs, &sums))
}

/// Λ_p with l_max = 12 and the lag sum run until its terms fall below
/// 1e−10 of the running total, plus the power-law tail beyond that point.
/// Requires H < 3/4, where the sum converges.
pub fn lambda_p_default(p: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if hurst >= 0.75 {
        return Err(Error::domain(format!("Λ_p is infinite for H ≥ 3/4, got {hurst}")));
    }
    let coeffs = even_coefficients(p, DEFAULT_L_MAX)?;
    let mut sums = vec![0.0; coeffs.len()];
    let mut k = 1;
    loop {
        let r2 = fgn_autocorrelation(hurst, k).powi(2);
        let mut pow = 1.0;
        for s in sums.iter_mut() {
            pow *= r2;
            *s += pow;
        }
        if r2 <= TAIL_REL * sums[0] || r2 == 0.0 {
            // ρ_H(k)^{2j} ~ k^{2j(2H−2)}: add the integral of the remaining tail.
            let kf = k as f64;
            let mut pow = 1.0;
            for (j, s) in sums.iter_mut().enumerate() {
                pow *= r2;
                let decay = 2.0 * (j + 1) as f64 * (2.0 - 2.0 * hurst) - 1.0;
                *s += pow * kf / decay;
            }
            break;
        }
        k += 1;
        if k > K_CAP {
            return Err(Error::numeric("Λ_p lag sum did not converge"));
        }
    }
    Ok(lambda_from_sums(&coeffs, &sums))
}

/// Limiting covariance of √N(γ̂(0) − γ(0), γ̂(Δ) − γ(Δ)) and the variance v
/// of √N((τ^N)² − τ²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMatrix {
    pub v00: f64,
    pub v01: f64,
    pub v11: f64,
    pub v: f64,
    /// Number of lags on each side used in the sums.
    pub k_max: usize,
}

/// Autocovariance c_k of the increments at lag k from the variogram:
/// `(R((k+1)Δ) + R(|k−1|Δ))/2 − R(kΔ)`.
fn increment_cov(k: &KernelSpec, delta: f64, lag: usize, q: &QuadratureSpec) -> Result<f64> {
    let r = |j: usize| variogram(k, j as f64 * delta, q);
    let lower = if lag == 0 { 1 } else { lag - 1 };
    Ok(0.5 * (r(lag + 1)? + r(lower)?) - r(lag)?)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::argument(format!("grid spacing must be positive, got {delta}")));
    }
    Ok(())
}

/// Two-sided sums over k ∈ [−k_max, k_max]:
/// `V00 = Σ2γ(kΔ)²`, `V01 = Σ2γ(kΔ)γ((k−1)Δ)`,
/// `V11 = Σ[γ(kΔ)² + γ((k+1)Δ)γ((k−1)Δ)]`.
///
/// `v = 4V00 − 8V01 + 4V11` is evaluated in the equivalent form
/// `2(c₀² + 2Σ_{k≥1} c_k²)` with c_k the increment autocovariance, which
/// avoids cancelling sums of size γ(0)²/Δ when Δ is small.
pub fn v_matrix(k: &KernelSpec, delta: f64, k_max: usize, q: &QuadratureSpec) -> Result<VMatrix> {
    check_delta(delta)?;
    if k_max < 1 {
        return Err(Error::argument("k_max must be at least 1"));
    }
    let gamma0 = crate::kernels::autocovariance(k, 0.0, q)?;
    let g: Vec<f64> = (0..=k_max + 1)
        .map(|j| crate::kernels::autocovariance(k, j as f64 * delta, q))
        .collect::<Result<_>>()?;
    debug_assert!(g[0] == gamma0);
    let at = |j: i64| g[j.unsigned_abs() as usize];
    let (mut v00, mut v01, mut v11) = (0.0, 0.0, 0.0);
    let km = k_max as i64;
    for j in -km..=km {
        v00 += 2.0 * at(j) * at(j);
        v01 += 2.0 * at(j) * at(j - 1);
        v11 += at(j) * at(j) + at(j + 1) * at(j - 1);
    }
    let c0 = increment_cov(k, delta, 0, q)?;
    let mut tail = 0.0;
    for lag in 1..=k_max {
        let c = increment_cov(k, delta, lag, q)?;
        tail += c * c;
    }
    Ok(VMatrix {
        v00,
        v01,
        v11,
        v: 2.0 * (c0 * c0 + 2.0 * tail),
        k_max,
    })
}

/// v with the lag sum run until ten consecutive terms fall below 1e−10 of
/// the running total. The V-sums use the same number of lags.
pub fn v_matrix_adaptive(k: &KernelSpec, delta: f64, q: &QuadratureSpec) -> Result<VMatrix> {
    check_delta(delta)?;
    let c0 = increment_cov(k, delta, 0, q)?;
    let mut sum = c0 * c0;
    let mut quiet = 0;
    let mut lag = 0;
    while quiet < 10 {
        lag += 1;
        if lag > 1_000_000 {
            return Err(Error::numeric("v lag sum did not converge"));
        }
        let c = increment_cov(k, delta, lag, q)?;
        let t = 2.0 * c * c;
        sum += t;
        if t <= TAIL_REL * sum {
            quiet += 1;
        } else {
            quiet = 0;
        }
    }
    let mut m = v_matrix(k, delta, lag, q)?;
    m.v = 2.0 * sum;
    Ok(m)
}

/// Ground truth needed to centre and scale the standardized errors.
#[derive(Debug, Clone, Copy)]
pub struct CltTruth<'a> {
    /// Volatility on the same grid as the data (or finer, same horizon).
    pub sigma: &'a SamplePath,
    /// Scale factor of the Gaussian core at the data spacing.
    pub tau: f64,
    /// E[σ₀²].
    pub second_moment: f64,
}

/// Standardized error of the power-variation estimator at time t.
///
/// * Infeasible: `Δ^{−½}(Δτ^{−p}V(Y,p;Δ)(t) − m_p∫₀ᵗ|σ|^p) / (Λ_p √∫₀ᵗ|σ|^{2p})`
/// * Semifeasible and feasible, with τ̂ = τ^Y or τ^{Y,N}:
///   `Δ^{−½}(Δτ̂^{−p}V(Y,p;Δ)(t) − E[σ₀²]^{−p/2} m_p∫₀ᵗ|σ|^p) /
///   (Λ_p √(m_{2p}^{−1} Δ (τ^{Y,N})^{−2p} V(Y,2p;Δ)(t)))`
///
/// The Δ inside the last square root makes the denominator consistent for
/// the limiting standard deviation Λ_p E[σ₀²]^{−p/2} √∫|σ|^{2p}.
pub fn standardized_error(
    variant: CltVariant,
    y: &SamplePath,
    truth: &CltTruth<'_>,
    p: f64,
    t: f64,
    lambda_p: f64,
) -> Result<f64> {
    if !(lambda_p > 0.0) || !lambda_p.is_finite() {
        return Err(Error::argument(format!("Λ_p must be positive, got {lambda_p}")));
    }
    if !(truth.tau > 0.0) || !(truth.second_moment > 0.0) {
        return Err(Error::argument("true scale factor and E[σ²] must be positive"));
    }
    let delta = y.delta();
    let m_p = abs_moment(p)?;
    let vp = realised_power_variation(y, p, t)?;
    let int_p = integrated_vol_oracle(truth.sigma, p, t)?;
    let (num, den) = match variant {
        CltVariant::Infeasible => {
            let int_2p = integrated_vol_oracle(truth.sigma, 2.0 * p, t)?;
            let num = delta * truth.tau.powf(-p) * vp - m_p * int_p;
            (num, lambda_p * int_2p.sqrt())
        }
        CltVariant::Semifeasible | CltVariant::Feasible => {
            let tau_yn = tau_nonparametric(y)?.value;
            let tau_hat = match variant {
                CltVariant::Semifeasible => truth.second_moment.sqrt() * truth.tau,
                _ => tau_yn,
            };
            let center = truth.second_moment.powf(-0.5 * p) * m_p * int_p;
            let num = delta * tau_hat.powf(-p) * vp - center;
            let v2p = realised_power_variation(y, 2.0 * p, t)?;
            let den = lambda_p * (delta * tau_yn.powf(-2.0 * p) * v2p / abs_moment(2.0 * p)?).sqrt();
            (num, den)
        }
    };
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::degenerate("standardized error has a zero denominator"));
    }
    Ok(num / (delta.sqrt() * den))
}

/// Inputs to the asymptotic interval half-width
/// `z_{1−a/2} Δ^{½} Λ̂_p √(m_{2p}^{−1} Δ τ̂^{−2p} V(Y,2p;Δ)(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalInputs {
    pub delta: f64,
    pub lambda_hat: f64,
    pub m2p: f64,
    /// Scale factor in the width: τ^{Y,N} for feasible intervals, the true
    /// τ for infeasible ones.
    pub tau: f64,
    /// V(Y, 2p; Δ)(t).
    pub v2p: f64,
    pub p: f64,
}

impl IntervalInputs {
    pub fn half_width(&self, z: f64) -> f64 {
        let var = self.delta * self.tau.powf(-2.0 * self.p) * self.v2p / self.m2p;
        z * self.delta.sqrt() * self.lambda_hat * var.sqrt()
    }
}

/// Symmetric (1 − a) asymptotic interval around `point`.
pub fn confidence_interval(point: f64, inputs: &IntervalInputs, a: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::argument(format!("level a must lie in (0, 1), got {a}")));
    }
    let z = normal_quantile(1.0 - 0.5 * a)?;
    let h = inputs.half_width(z);
    if !h.is_finite() {
        return Err(Error::numeric("interval half-width is not finite"));
    }
    Ok((point - h, point + h))
}

/// Constants A₁…A₇, Ã_n, K and δ of the sample-size bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundInputs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub a7: f64,
    pub a_tilde_n: f64,
    pub k_cut: f64,
    pub delta_exp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundConstants {
    pub inputs: BoundInputs,
    /// (2 ∧ A₄)Δ_n, the decay rate per unit lag.
    pub d_n: f64,
    pub c_n: f64,
    pub e_n: f64,
    /// ⌈E_n² n^{1+2δ}⌉ with n = 1/Δ_n.
    pub n_star: f64,
}

/// Constants C_n, D_n, E_n and the minimal sample size N* for consistency of
/// the non-parametric scale factor:
///
/// * `C_n = 4A₇(A₁e^{2Δ_n}(1 + e^{2K}A₇) + 2A₅A₃/(2A₆ − A₄))`
/// * `E_n = 3√C_n / (Ã_n(1 − e^{−D_n}))`
/// * `N* = E_n² n^{1+2δ}`
pub fn sample_size_bound(b: &BoundInputs, delta_n: f64) -> Result<BoundConstants> {
    check_delta(delta_n)?;
    let fields = [b.a1, b.a2, b.a3, b.a4, b.a5, b.a6, b.a7, b.a_tilde_n, b.delta_exp];
    if fields.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || !(b.k_cut >= 0.0) {
        return Err(Error::argument("bound constants must be positive and finite"));
    }
    if !(b.a6 > 0.5 * b.a4) {
        return Err(Error::argument(format!(
            "need A6 > A4/2, got A6 = {}, A4 = {}",
            b.a6, b.a4
        )));
    }
    let d_n = b.a4.min(2.0) * delta_n;
    let c_n = 4.0
        * b.a7
        * (b.a1 * (2.0 * delta_n).exp() * (1.0 + (2.0 * b.k_cut).exp() * b.a7)
            + 2.0 * b.a5 * b.a3 / (2.0 * b.a6 - b.a4));
    let e_n = 3.0 * c_n.sqrt() / (b.a_tilde_n * -(-d_n).exp_m1());
    let n = 1.0 / delta_n;
    let n_star = (e_n * e_n * n.powf(1.0 + 2.0 * b.delta_exp)).ceil().max(1.0);
    if !n_star.is_finite() {
        return Err(Error::numeric("sample-size bound overflows"));
    }
    Ok(BoundConstants {
        inputs: *b,
        d_n,
        c_n,
        e_n,
        n_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::scale_factor_exact;
    use proptest::prelude::*;

    fn q() -> QuadratureSpec {
        QuadratureSpec::new(1e-12, 1e-300, 5000).unwrap()
    }

    #[test]
    fn u1_coefficients_closed_form() {
        let s = (2.0 * PI).sqrt();
        assert!((hermite_coefficient_u1(2).unwrap() - 1.0 / s).abs() < 1e-16);
        assert!((hermite_coefficient_u1(4).unwrap() + 1.0 / (12.0 * s)).abs() < 1e-16);
        // l = 6: 2·3!!/(√(2π)·720) = 1/(120√(2π)).
        assert!((hermite_coefficient_u1(6).unwrap() - 1.0 / (120.0 * s)).abs() < 1e-17);
        assert!(hermite_coefficient_u1(3).is_err());
        assert!(hermite_coefficient_u1(0).is_err());
    }

    #[test]
    fn numeric_coefficients_match_closed_form() {
        let a = hermite_coefficients_numeric(1.0, 10, &q()).unwrap();
        assert!(a[0].abs() < 1e-12);
        for l in (2..=10).step_by(2) {
            let exact = hermite_coefficient_u1(l).unwrap();
            assert!(((a[l] - exact) / exact).abs() < 1e-8, "l={l}: {} vs {exact}", a[l]);
        }
        for l in (1..=9).step_by(2) {
            assert_eq!(a[l], 0.0);
        }
    }

    #[test]
    fn square_has_single_coefficient() {
        let a = hermite_coefficients_numeric(2.0, 12, &q()).unwrap();
        assert!((a[2] - 1.0).abs() < 1e-12);
        for (l, v) in a.iter().enumerate() {
            if l != 2 {
                assert!(v.abs() < 1e-12, "a_{l} = {v}");
            }
        }
    }

    #[test]
    fn reconstruction_residual_decreases() {
        let a = hermite_coefficients_numeric(1.0, 12, &q()).unwrap();
        let spec = QuadratureSpec::new(1e-12, 1e-15, 5000).unwrap();
        let mut prev = f64::INFINITY;
        for big_l in (2..=12).step_by(2) {
            let r = hermite_residual_norm(1.0, &a[..=big_l], &spec).unwrap();
            // Parseval: residual² = Var|U| − Σ a_l² l!.
            let parseval: f64 =
                1.0 - 2.0 / PI - (2..=big_l).step_by(2).map(|l| a[l] * a[l] * factorial(l)).sum::<f64>();
            assert!((r * r - parseval).abs() < 1e-9, "L={big_l}: {} vs {parseval}", r * r);
            assert!(r < prev);
            prev = r;
        }
    }

    #[test]
    fn fgn_correlation_values() {
        assert_eq!(fgn_autocorrelation(0.5, 1), 0.0);
        assert_eq!(fgn_autocorrelation(0.3, 0), 1.0);
        assert!((fgn_autocorrelation(0.3, 1) - (2f64.powf(-0.4) - 1.0)).abs() < 1e-15);
        for &h in &[0.1, 0.3, 0.7, 0.9] {
            for k in 8..12usize {
                let kf = k as f64;
                let direct = 0.5 * ((kf + 1.0).powf(2.0 * h) - 2.0 * kf.powf(2.0 * h) + (kf - 1.0).powf(2.0 * h));
                assert!((fgn_autocorrelation(h, k) - direct).abs() < 1e-13);
            }
            // Partial sums telescope: 1 + Σ_{k=1}^K 2ρ(k) = (K+1)^{2H} − K^{2H}.
            let big_k = 50usize;
            let s: f64 = 1.0 + 2.0 * (1..=big_k).map(|k| fgn_autocorrelation(h, k)).sum::<f64>();
            let expect = (big_k as f64 + 1.0).powf(2.0 * h) - (big_k as f64).powf(2.0 * h);
            assert!((s - expect).abs() < 1e-12, "H={h}: {s} vs {expect}");
        }
    }

    #[test]
    fn lambda_two_at_half_is_sqrt_two() {
        let l = lambda_p(2.0, 0.5, 12, 100).unwrap();
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
        let l = lambda_p_default(2.0, 0.5).unwrap();
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lambda_two_closed_form() {
        // Only c₂ = 1 survives for p = 2: Λ² = 2 + 4Σρ_H(k)².
        let h = 0.3;
        let s: f64 = (1..=200_000).map(|k| fgn_autocorrelation(h, k).powi(2)).sum();
        let l = lambda_p(2.0, h, 12, 200_000).unwrap();
        assert!((l * l - (2.0 + 4.0 * s)).abs() < 1e-10);
        let d = lambda_p_default(2.0, h).unwrap();
        assert!((d - l).abs() < 1e-8);
        assert!(lambda_p_default(2.0, 0.8).is_err());
    }

    #[test]
    fn v_matrix_forms_agree() {
        let k = KernelSpec::gamma(-0.2, 1.0).unwrap();
        let m = v_matrix(&k, 0.5, 400, &q()).unwrap();
        let raw = 4.0 * m.v00 - 8.0 * m.v01 + 4.0 * m.v11;
        assert!((raw - m.v).abs() < 1e-10 * m.v00, "{raw} vs {}", m.v);
        assert!(m.v > 0.0);
        // V01 by reindexing k ↦ 1 − k.
        let g = |j: i64| crate::kernels::autocovariance(&k, (j.abs() as f64) * 0.5, &q()).unwrap();
        let alt: f64 = (-400i64..=400).map(|j| 2.0 * g(1 - j) * g(-j)).sum();
        assert!((alt - m.v01).abs() < 1e-8 * m.v01.abs());
    }

    #[test]
    fn v_matrix_adaptive_truncation_converges() {
        let k = KernelSpec::gamma(0.0, 1.0).unwrap();
        let a = v_matrix_adaptive(&k, 0.1, &q()).unwrap();
        let b = v_matrix(&k, 0.1, 2 * a.k_max, &q()).unwrap();
        assert!((a.v - b.v).abs() < 1e-8 * a.v);
        // OU increments: c₀ = 1 − e^{−Δ}, c_k = −(1 − e^{−Δ})²e^{−(k−1)Δ}/2 ... summed in closed form.
        let d = 0.1f64;
        let e = (-d).exp();
        let c0 = 1.0 - e;
        let c1 = -0.5 * (1.0 - e) * (1.0 - e);
        let tail = c1 * c1 / (1.0 - e * e);
        let v = 2.0 * (c0 * c0 + 2.0 * tail);
        assert!((a.v - v).abs() < 1e-9 * v, "{} vs {v}", a.v);
    }

    #[test]
    fn interval_width_and_quantile() {
        let z = normal_quantile(0.975).unwrap();
        assert!((z - 1.959964).abs() < 5e-7);
        let inputs = IntervalInputs {
            delta: 0.01,
            lambda_hat: 2.0,
            m2p: 3.0,
            tau: 0.5,
            v2p: 12.0,
            p: 2.0,
        };
        let (lo, hi) = confidence_interval(1.0, &inputs, 0.05).unwrap();
        let half = z * 0.1 * 2.0 * (0.01 * 16.0 * 12.0 / 3.0f64).sqrt();
        assert!((hi - 1.0 - half).abs() < 1e-14 && (1.0 - lo - half).abs() < 1e-14);
        let (lo, hi) = confidence_interval(1.0, &inputs, 1.0 - 1e-12).unwrap();
        assert!(hi - lo < 1e-10);
        assert!(confidence_interval(1.0, &inputs, 0.0).is_err());
    }

    #[test]
    fn bound_constants_by_substitution() {
        let ones = BoundInputs {
            a1: 1.0,
            a2: 1.0,
            a3: 1.0,
            a4: 1.0,
            a5: 1.0,
            a6: 1.0,
            a7: 1.0,
            a_tilde_n: 1.0,
            k_cut: 1.0,
            delta_exp: 0.1,
        };
        let b = sample_size_bound(&ones, 0.01).unwrap();
        let c = 4.0 * (0.02f64.exp() * (1.0 + 1f64.exp().powi(2)) + 2.0);
        assert!((b.c_n - c).abs() < 1e-13 * c);
        assert!((b.d_n - 0.01).abs() < 1e-16);
        let e = 3.0 * c.sqrt() / (1.0 - (-0.01f64).exp());
        assert!((b.e_n - e).abs() < 1e-10 * e);
        assert_eq!(b.n_star, (e * e * 100f64.powf(1.2)).ceil());
        let finer = sample_size_bound(&ones, 0.001).unwrap();
        assert!(finer.e_n > b.e_n);
        let bad = BoundInputs { a6: 0.5, ..ones };
        assert!(sample_size_bound(&bad, 0.01).is_err());
    }

    #[test]
    fn infeasible_error_vanishes_for_exact_variation() {
        // A path whose squared increments equal τ²σ² exactly reproduces the
        // integral, so the standardized error is the Riemann discrepancy.
        let n = 100usize;
        let delta = 1.0 / n as f64;
        let k = KernelSpec::gamma(-0.2, 1.0).unwrap();
        let tau = scale_factor_exact(&k, delta).unwrap();
        let sigma = SamplePath::new(vec![1.0; n + 1], delta).unwrap();
        let values: Vec<f64> = (0..=n).map(|i| if i % 2 == 0 { 0.0 } else { tau }).collect();
        let y = SamplePath::new(values, delta).unwrap();
        let truth = CltTruth {
            sigma: &sigma,
            tau,
            second_moment: 1.0,
        };
        let e = standardized_error(CltVariant::Infeasible, &y, &truth, 2.0, 1.0, 2f64.sqrt()).unwrap();
        // Numerator is −Δ (oracle has n + 1 terms), over Δ^{½}√2·√(1 + Δ).
        let expect = -delta / (delta.sqrt() * 2f64.sqrt() * (1.0 + delta).sqrt());
        assert!((e - expect).abs() < 1e-12, "{e} vs {expect}");
        let f = standardized_error(CltVariant::Feasible, &y, &truth, 2.0, 1.0, 2f64.sqrt()).unwrap();
        let s = standardized_error(CltVariant::Semifeasible, &y, &truth, 2.0, 1.0, 2f64.sqrt()).unwrap();
        assert!((f - s).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lambda_monotone_in_truncation(h in 0.05f64..0.7, p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
            let mut prev = 0.0;
            for &(l, k) in &[(2usize, 1usize), (2, 10), (4, 10), (4, 100), (8, 100), (12, 1000)] {
                let v = lambda_p(p, h, l, k).unwrap();
                prop_assert!(v >= prev * (1.0 - 1e-14));
                prev = v;
            }
        }

        #[test]
        fn v_is_non_negative(alpha in -0.45f64..0.45, lambda in 0.2f64..5.0, delta in 0.001f64..0.5) {
            let k = KernelSpec::gamma(alpha, lambda).unwrap();
            let m = v_matrix(&k, delta, 50, &QuadratureSpec::default()).unwrap();
            prop_assert!(m.v >= 0.0);
        }
    }
}
