//! Realised power variation, scale-factor estimators and accumulated
//! volatility estimation.
//!
//! With spacing Δ and scale factor τ, `m_p^{−1} Δ τ^{−p} V(Y, p; Δ)(t)`
//! estimates ∫₀ᵗ |σ_s|^p ds.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::{autocorrelation, scale_factor, scale_factor_asymptotic, KernelFamily, KernelSpec};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::simulate::{grid_index, SamplePath};
use crate::special_fn::{gamma_fn, QuadratureSpec};

/// Largest |α| used when a fitted smoothness is plugged into a scale factor.
pub const ALPHA_LIMIT: f64 = 0.499;

const DECAY_LOG_MIN: f64 = -13.815_510_557_964_274; // ln 1e−6
const DECAY_LOG_MAX: f64 = 13.815_510_557_964_274;

/// How a scale factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum ScaleFactorMethod {
    Exact,
    Asymptotic,
    AcfFit,
    Cof,
    NonParametric,
}

/// Fitted kernel parameters. `decay` and `mse` are absent for the
/// change-of-frequency estimator, which only identifies α.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub alpha: f64,
    pub decay: Option<f64>,
    pub mse: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleFactorEstimate {
    pub value: f64,
    pub method: ScaleFactorMethod,
    pub fit: Option<FitResult>,
}

/// Source of α for [`tau_from_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum FitMethod {
    Acf,
    Cof,
}

/// Scale-factor estimator used by [`estimate_accumulated_volatility`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum EstimationMethod {
    Acf,
    Cof,
    NonParametric,
}

/// m_p = E|U|^p = 2^{p/2} Γ((p+1)/2)/√π for U standard normal.
pub fn abs_moment(p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::domain(format!("moment order must be positive, got {p}")));
    }
    Ok((0.5 * p).exp2() * gamma_fn(0.5 * (p + 1.0))? / PI.sqrt())
}

fn abs_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else if p == 4.0 {
        let s = x * x;
        s * s
    } else {
        x.abs().powf(p)
    }
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::argument(format!("power must be positive, got {p}")));
    }
    Ok(())
}

fn increments(values: &[f64]) -> impl Iterator<Item = f64> + '_ {
    values.windows(2).map(|w| w[1] - w[0])
}

/// V(Y, p; Δ)(t) = Σ_{i=1}^{⌊t/Δ⌋} |Y_i − Y_{i−1}|^p.
pub fn realised_power_variation(y: &SamplePath, p: f64, t: f64) -> Result<f64> {
    check_power(p)?;
    if y.len() < 2 {
        return Err(Error::argument("power variation needs at least 2 observations"));
    }
    if !(t >= 0.0) {
        return Err(Error::argument(format!("time must be non-negative, got {t}")));
    }
    let last = grid_index(t, y.delta());
    if last >= y.len() {
        return Err(Error::argument(format!("time {t} beyond path horizon {}", y.horizon())));
    }
    Ok(increments(&y.values()[..=last]).map(|d| abs_pow(d, p)).sum())
}

/// V(Y, p; Δ) at every grid time: entry i sums the first i increments.
pub fn power_variation_path(y: &SamplePath, p: f64) -> Result<Vec<f64>> {
    check_power(p)?;
    if y.len() < 2 {
        return Err(Error::argument("power variation needs at least 2 observations"));
    }
    let mut out = Vec::with_capacity(y.len());
    let mut acc = 0.0;
    out.push(acc);
    for d in increments(y.values()) {
        acc += abs_pow(d, p);
        out.push(acc);
    }
    Ok(out)
}

/// τ^{Y,N} = √(N^{−1} Σ (ΔY)²) over all N increments.
pub fn tau_nonparametric(y: &SamplePath) -> Result<ScaleFactorEstimate> {
    if y.len() < 2 {
        return Err(Error::argument("scale factor needs at least 2 observations"));
    }
    let n = (y.len() - 1) as f64;
    let ss: f64 = increments(y.values()).map(|d| d * d).sum();
    let value = (ss / n).sqrt();
    if !(value > 0.0) {
        return Err(Error::degenerate("path has no variation"));
    }
    Ok(ScaleFactorEstimate {
        value,
        method: ScaleFactorMethod::NonParametric,
        fit: None,
    })
}

/// Sample autocorrelation at lags 0..=max_lag, mean removed, with the biased
/// 1/N normalization.
pub fn empirical_acf(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if n <= max_lag + 1 {
        return Err(Error::argument(format!(
            "{n} observations cannot support {max_lag} lags"
        )));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) {
        return Err(Error::degenerate("constant series has no autocorrelation"));
    }
    Ok((0..=max_lag)
        .map(|h| {
            centered[..n - h]
                .iter()
                .zip(&centered[h..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / c0
        })
        .collect())
}

fn decay_from_log(family: KernelFamily, u: f64) -> f64 {
    match family {
        KernelFamily::Gamma => u.exp(),
        KernelFamily::Power => -0.5 - u.exp(),
    }
}

/// Sum of squared differences between `target[h−1]` and the model ACF at
/// lags hΔ, h = 1..=target.len(); +∞ outside the parameter box.
fn acf_objective(family: KernelFamily, alpha: f64, u: f64, target: &[f64], delta: f64, q: &QuadratureSpec) -> f64 {
    if !(alpha.abs() <= ALPHA_LIMIT) || !(DECAY_LOG_MIN..=DECAY_LOG_MAX).contains(&u) {
        return f64::INFINITY;
    }
    let Ok(k) = KernelSpec::from_family(family, alpha, decay_from_log(family, u)) else {
        return f64::INFINITY;
    };
    let mut s = 0.0;
    for (i, &r) in target.iter().enumerate() {
        match autocorrelation(&k, (i + 1) as f64 * delta, q) {
            Ok(m) => s += (r - m) * (r - m),
            Err(_) => return f64::INFINITY,
        }
    }
    if s.is_finite() {
        s
    } else {
        f64::INFINITY
    }
}

fn better(a: (f64, f64, f64), b: (f64, f64, f64)) -> bool {
    // (objective, alpha, log decay): smaller objective, then smaller |α|.
    let tie = (a.0 - b.0).abs() <= 1e-14 * a.0.abs().max(b.0.abs());
    if tie {
        a.1.abs() < b.1.abs()
    } else {
        a.0 < b.0
    }
}

/// Least-squares fit of the model autocorrelation at lags Δ, …, HΔ to
/// `target` (lag h at index h − 1).
pub fn fit_acf_values(target: &[f64], delta: f64, family: KernelFamily, q: &QuadratureSpec) -> Result<FitResult> {
    if target.len() < 2 {
        return Err(Error::argument("ACF fit needs at least 2 lags"));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::argument(format!("grid spacing must be positive, got {delta}")));
    }
    if target.iter().any(|r| !r.is_finite()) {
        return Err(Error::degenerate("non-finite autocorrelation"));
    }
    let h = target.len() as f64;
    let obj = |alpha: f64, u: f64| acf_objective(family, alpha, u, target, delta, q);

    let mut starts: Vec<(f64, f64, f64)> = Vec::new();
    for i in 0..19 {
        let alpha = -0.45 + 0.05 * i as f64;
        for j in 0..13 {
            let u = (-3.0 + 0.5 * j as f64) * core::f64::consts::LN_10;
            starts.push((obj(alpha, u), alpha, u));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.abs().total_cmp(&b.1.abs())));
    let opts = NelderMeadOptions {
        step: 0.05,
        f_tol: 1e-13,
        x_tol: 1e-10,
        max_iter: 4000,
    };
    let mut best: Option<(f64, f64, f64)> = None;
    let mut any_converged = false;
    for &(f0, a0, u0) in starts.iter().take(3) {
        if !f0.is_finite() {
            continue;
        }
        let m = nelder_mead(|x| obj(x[0], x[1]), &[a0, u0], &opts);
        any_converged |= m.converged;
        let cand = (m.value, m.x[0], m.x[1]);
        if best.map_or(true, |b| better(cand, b)) {
            best = Some(cand);
        }
    }
    let Some((value, alpha, u)) = best else {
        return Err(Error::numeric("ACF objective is not finite anywhere on the start grid"));
    };
    let decay = decay_from_log(family, u);
    let mse = value / h;
    if !any_converged {
        return Err(Error::Fit { alpha, decay, mse });
    }
    Ok(FitResult {
        alpha,
        decay: Some(decay),
        mse: Some(mse),
    })
}

/// Fit (α, decay) by least squares on the sample autocorrelation at lags
/// 1..=num_lags.
pub fn fit_acf(y: &SamplePath, family: KernelFamily, num_lags: usize, q: &QuadratureSpec) -> Result<FitResult> {
    if num_lags < 2 {
        return Err(Error::argument("ACF fit needs at least 2 lags"));
    }
    let acf = empirical_acf(y.values(), num_lags)?;
    fit_acf_values(&acf[1..], y.delta(), family, q)
}

/// Change-of-frequency smoothness estimate
/// `α̂ = (log₂(V(Y,p;2Δ)/V(Y,p;Δ)) + 1)/p − ½`, both variations taken over
/// the span covered by the path subsampled by 2.
pub fn fit_cof(y: &SamplePath, p: f64) -> Result<FitResult> {
    check_power(p)?;
    if y.len() < 5 {
        return Err(Error::degenerate(format!(
            "change of frequency needs at least 5 observations, got {}",
            y.len()
        )));
    }
    let v = y.values();
    let last = 2 * ((v.len() - 1) / 2);
    let fine: f64 = increments(&v[..=last]).map(|d| abs_pow(d, p)).sum();
    let coarse: f64 = v[..=last]
        .iter()
        .step_by(2)
        .collect::<Vec<_>>()
        .windows(2)
        .map(|w| abs_pow(w[1] - w[0], p))
        .sum();
    if !(fine > 0.0) || !(coarse > 0.0) {
        return Err(Error::degenerate("path has no variation"));
    }
    let alpha = ((coarse / fine).log2() + 1.0) / p - 0.5;
    if !alpha.is_finite() {
        return Err(Error::degenerate("non-finite smoothness estimate"));
    }
    Ok(FitResult {
        alpha,
        decay: None,
        mse: None,
    })
}

/// Plug a fit into a scale factor: the ACF fit uses the full kernel
/// (closed form or quadrature), the change-of-frequency fit the small-Δ
/// expression in α alone. α is clamped to ±[`ALPHA_LIMIT`] first.
pub fn tau_from_fit(
    fit: &FitResult,
    method: FitMethod,
    family: KernelFamily,
    delta: f64,
    q: &QuadratureSpec,
) -> Result<ScaleFactorEstimate> {
    if !fit.alpha.is_finite() {
        return Err(Error::argument("fitted alpha is not finite"));
    }
    let alpha = fit.alpha.clamp(-ALPHA_LIMIT, ALPHA_LIMIT);
    let (value, method) = match method {
        FitMethod::Acf => {
            let decay = fit
                .decay
                .ok_or_else(|| Error::argument("ACF scale factor needs a fitted decay parameter"))?;
            let k = KernelSpec::from_family(family, alpha, decay)?;
            (scale_factor(&k, delta, q)?, ScaleFactorMethod::AcfFit)
        }
        FitMethod::Cof => (scale_factor_asymptotic(alpha, delta)?, ScaleFactorMethod::Cof),
    };
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::numeric(format!("scale factor {value} from fit is not positive")));
    }
    Ok(ScaleFactorEstimate {
        value,
        method,
        fit: Some(*fit),
    })
}

/// `m_p^{−1} Δ τ^{−p} V(Y, p; Δ)(t)` for each t in `t_grid`.
pub fn accumulated_volatility_with_tau(y: &SamplePath, p: f64, tau: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::argument(format!("scale factor must be positive, got {tau}")));
    }
    let path = power_variation_path(y, p)?;
    let scale = y.delta() * tau.powf(-p) / abs_moment(p)?;
    t_grid
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::argument(format!("time must be non-negative, got {t}")));
            }
            let i = grid_index(t, y.delta());
            path.get(i)
                .map(|v| scale * v)
                .ok_or_else(|| Error::argument(format!("time {t} beyond path horizon {}", y.horizon())))
        })
        .collect()
}

/// Scale factor from the data with the chosen estimator. ACF fits use 10 lags.
pub fn estimate_scale_factor(
    y: &SamplePath,
    p: f64,
    method: EstimationMethod,
    family: KernelFamily,
    q: &QuadratureSpec,
) -> Result<ScaleFactorEstimate> {
    match method {
        EstimationMethod::NonParametric => tau_nonparametric(y),
        EstimationMethod::Acf => {
            let fit = fit_acf(y, family, 10, q)?;
            tau_from_fit(&fit, FitMethod::Acf, family, y.delta(), q)
        }
        EstimationMethod::Cof => {
            let fit = fit_cof(y, p)?;
            tau_from_fit(&fit, FitMethod::Cof, family, y.delta(), q)
        }
    }
}

/// Accumulated power volatility ∫₀ᵗ|σ_s|^p ds at each t in `t_grid`, with
/// the scale factor estimated from the whole path. The non-parametric
/// method targets E[σ₀²]^{−p/2} ∫₀ᵗ|σ_s|^p ds instead.
pub fn estimate_accumulated_volatility(
    y: &SamplePath,
    p: f64,
    method: EstimationMethod,
    family: KernelFamily,
    t_grid: &[f64],
    q: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_power(p)?;
    let tau = estimate_scale_factor(y, p, method, family, q)?;
    accumulated_volatility_with_tau(y, p, tau.value, t_grid)
}

/// Every grid time of `y`, the default evaluation grid.
pub fn full_grid(y: &SamplePath) -> Vec<f64> {
    (0..y.len()).map(|i| y.time(i)).collect()
}
