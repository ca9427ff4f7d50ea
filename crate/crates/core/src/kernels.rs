//! Kernel families, second-order structure of the Gaussian core and scale
//! factors.
//!
//! The scale factor at spacing Δ is τ = √R(Δ), where R(t) = E[(X_t − X_0)²]
//! is the variogram of the Gaussian core `X_t = ∫ g(t − s) dW_s`.

use alloc::format;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::special_fn::{bessel_k_bar, bessel_k_bar_deficit, gamma_fn, integrate, ln_gamma, QuadratureSpec};

/// Parametric kernel g.
///
/// * `Gamma`: g(x) = x^α e^{−λx}
/// * `Power`: g(x) = x^α (1 + x)^{β−α}
///
/// α = 0 is accepted (the Ornstein–Uhlenbeck case of the gamma family).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "kernel", rename_all = "lowercase")
)]
pub enum KernelSpec {
    Gamma { alpha: f64, lambda: f64 },
    Power { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum KernelFamily {
    Gamma,
    Power,
}

impl KernelSpec {
    pub fn gamma(alpha: f64, lambda: f64) -> Result<Self> {
        let k = KernelSpec::Gamma { alpha, lambda };
        k.validate()?;
        Ok(k)
    }

    pub fn power(alpha: f64, beta: f64) -> Result<Self> {
        let k = KernelSpec::Power { alpha, beta };
        k.validate()?;
        Ok(k)
    }

    /// Build a kernel of `family` from a smoothness and a decay parameter
    /// (λ for gamma, β for power).
    pub fn from_family(family: KernelFamily, alpha: f64, decay: f64) -> Result<Self> {
        match family {
            KernelFamily::Gamma => Self::gamma(alpha, decay),
            KernelFamily::Power => Self::power(alpha, decay),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        if !(alpha > -0.5 && alpha < 0.5) {
            return Err(Error::argument(format!("alpha must lie in (-1/2, 1/2), got {alpha}")));
        }
        match *self {
            KernelSpec::Gamma { lambda, .. } => {
                if !(lambda > 0.0) || !lambda.is_finite() {
                    return Err(Error::argument(format!("lambda must be positive, got {lambda}")));
                }
            }
            KernelSpec::Power { beta, .. } => {
                if !(beta < -0.5) || !beta.is_finite() {
                    return Err(Error::argument(format!("beta must be below -1/2, got {beta}")));
                }
            }
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            KernelSpec::Gamma { alpha, .. } | KernelSpec::Power { alpha, .. } => alpha,
        }
    }

    /// λ for the gamma family, β for the power family.
    pub fn decay(&self) -> f64 {
        match *self {
            KernelSpec::Gamma { lambda, .. } => lambda,
            KernelSpec::Power { beta, .. } => beta,
        }
    }

    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::Gamma { .. } => KernelFamily::Gamma,
            KernelSpec::Power { .. } => KernelFamily::Power,
        }
    }

    /// g(x) / x^α, the part of the kernel that is smooth at the origin.
    pub fn slowly_varying(&self, x: f64) -> f64 {
        match *self {
            KernelSpec::Gamma { lambda, .. } => (-lambda * x).exp(),
            KernelSpec::Power { alpha, beta } => (1.0 + x).powf(beta - alpha),
        }
    }
}

/// g(x); zero for x < 0. At x = 0 with α < 0 this is +∞.
pub fn eval_kernel(k: &KernelSpec, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    x.powf(k.alpha()) * k.slowly_varying(x)
}

fn gamma_order(alpha: f64) -> f64 {
    alpha + 0.5
}

/// γ(0) = ∫₀^∞ g(x)² dx in closed form.
fn variance(k: &KernelSpec) -> Result<f64> {
    match *k {
        KernelSpec::Gamma { alpha, lambda } => {
            Ok((-2.0 * alpha - 1.0).exp2() * lambda.powf(-2.0 * alpha - 1.0) * gamma_fn(2.0 * alpha + 1.0)?)
        }
        // Beta integral B(2α+1, −2β−1).
        KernelSpec::Power { alpha, beta } => {
            Ok(gamma_fn(2.0 * alpha + 1.0)?
                * (ln_gamma(-2.0 * beta - 1.0)? - ln_gamma(2.0 * alpha - 2.0 * beta)?).exp())
        }
    }
}

/// ∫₀^∞ g(x) g(x + h) dx by quadrature, split at x = h.
fn autocovariance_quadrature(k: &KernelSpec, h: f64, q: &QuadratureSpec) -> Result<f64> {
    let f = |x: f64| eval_kernel(k, x) * eval_kernel(k, x + h);
    if h == 0.0 {
        return integrate(f, 0.0, 1.0, q).and_then(|a| Ok(a + integrate(f, 1.0, f64::INFINITY, q)?));
    }
    Ok(integrate(f, 0.0, h, q)? + integrate(f, h, f64::INFINITY, q)?)
}

/// γ(h) = ∫₀^∞ g(x) g(x + h) dx.
///
/// For the gamma kernel, γ(h) = Γ(α+1)/√π · (2λ)^{−α−½} h^{α+½} K_{α+½}(λh).
pub fn autocovariance(k: &KernelSpec, h: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(Error::argument(format!("lag must be non-negative, got {h}")));
    }
    k.validate()?;
    if h == 0.0 {
        return variance(k);
    }
    match *k {
        KernelSpec::Gamma { alpha, lambda } => {
            let nu = gamma_order(alpha);
            Ok(gamma_fn(alpha + 1.0)? / PI.sqrt()
                * (-nu).exp2()
                * lambda.powf(-2.0 * nu)
                * bessel_k_bar(nu, lambda * h)?)
        }
        KernelSpec::Power { .. } => autocovariance_quadrature(k, h, q),
    }
}

/// ρ(h) = γ(h)/γ(0).
pub fn autocorrelation(k: &KernelSpec, h: f64, q: &QuadratureSpec) -> Result<f64> {
    if h == 0.0 {
        k.validate()?;
        return Ok(1.0);
    }
    if let KernelSpec::Gamma { alpha, lambda } = *k {
        k.validate()?;
        return Ok(1.0 - gamma_correlation_deficit(alpha, lambda * h)?);
    }
    Ok(autocovariance(k, h, q)? / variance(k)?)
}

/// 1 − ρ(h) for the gamma kernel as a function of x = λh.
fn gamma_correlation_deficit(alpha: f64, x: f64) -> Result<f64> {
    let nu = gamma_order(alpha);
    Ok(bessel_k_bar_deficit(nu, x)? / ((nu - 1.0).exp2() * gamma_fn(nu)?))
}

/// R(t) = 2γ(0) − 2γ(t).
///
/// Closed form for the gamma kernel, evaluated as 2γ(0)(1 − ρ(t)) with the
/// correlation deficit computed directly so that small t keeps full relative
/// precision. The power kernel uses [`variogram_quadrature`].
pub fn variogram(k: &KernelSpec, t: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::argument(format!("time must be non-negative, got {t}")));
    }
    k.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    match *k {
        KernelSpec::Gamma { alpha, lambda } => Ok(2.0 * variance(k)? * gamma_correlation_deficit(alpha, lambda * t)?),
        KernelSpec::Power { .. } => variogram_quadrature(k, t, q),
    }
}

/// R(t) from its defining integral
/// `∫₀^t g(x)² dx + ∫₀^∞ (g(x + t) − g(x))² dx`, rescaled by x = t·u.
pub fn variogram_quadrature(k: &KernelSpec, t: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::argument(format!("time must be non-negative, got {t}")));
    }
    k.validate()?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let alpha = k.alpha();
    let head = |u: f64| {
        let v = u.powf(alpha) * k.slowly_varying(t * u);
        v * v
    };
    let diff = |u: f64| {
        let d = (u + 1.0).powf(alpha) * k.slowly_varying(t * (u + 1.0)) - u.powf(alpha) * k.slowly_varying(t * u);
        d * d
    };
    let knee = (1.0 / t).max(1.0);
    let mut total = integrate(head, 0.0, 1.0, q)?;
    total += integrate(diff, 0.0, 1.0, q)?;
    if knee > 1.0 {
        total += integrate(diff, 1.0, knee, q)?;
    }
    total += integrate(diff, knee, f64::INFINITY, q)?;
    Ok(t.powf(2.0 * alpha + 1.0) * total)
}

/// Exact gamma-kernel scale factor
/// `τ = λ^{−α−½} {Γ(α+1)/Γ(½) (Γ(α+½) − 2^{½−α} K̄_{α+½}(λΔ))}^{½}`.
pub fn scale_factor_exact(k: &KernelSpec, delta: f64) -> Result<f64> {
    let KernelSpec::Gamma { alpha, lambda } = *k else {
        return Err(Error::UnsupportedKernel);
    };
    k.validate()?;
    if !(delta >= 0.0) {
        return Err(Error::argument(format!("delta must be non-negative, got {delta}")));
    }
    let nu = gamma_order(alpha);
    // Γ(ν) − 2^{1−ν} K̄_ν(x) = 2^{1−ν} (2^{ν−1}Γ(ν) − K̄_ν(x)).
    let bracket = (1.0 - nu).exp2() * bessel_k_bar_deficit(nu, lambda * delta)?;
    Ok(lambda.powf(-nu) * (gamma_fn(alpha + 1.0)? / PI.sqrt() * bracket).sqrt())
}

/// Small-Δ approximation
/// `τ̃ = 2^{−2α−½} (Γ(2α+1)Γ(½−α)/Γ(α+3/2))^{½} Δ^{α+½}`.
pub fn scale_factor_asymptotic(alpha: f64, delta: f64) -> Result<f64> {
    if !(alpha > -0.5 && alpha < 0.5) {
        return Err(Error::argument(format!("alpha must lie in (-1/2, 1/2), got {alpha}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::argument(format!("delta must be non-negative, got {delta}")));
    }
    let c = gamma_fn(2.0 * alpha + 1.0)? * gamma_fn(0.5 - alpha)? / gamma_fn(alpha + 1.5)?;
    Ok((-2.0 * alpha - 0.5).exp2() * c.sqrt() * delta.powf(alpha + 0.5))
}

/// τ = √R(Δ) with R from its defining integral; works for every kernel.
pub fn scale_factor_quadrature(k: &KernelSpec, delta: f64, q: &QuadratureSpec) -> Result<f64> {
    Ok(variogram_quadrature(k, delta, q)?.sqrt())
}

/// Best available τ: closed form for gamma, quadrature otherwise.
pub fn scale_factor(k: &KernelSpec, delta: f64, q: &QuadratureSpec) -> Result<f64> {
    match k {
        KernelSpec::Gamma { .. } => scale_factor_exact(k, delta),
        KernelSpec::Power { .. } => scale_factor_quadrature(k, delta, q),
    }
}
