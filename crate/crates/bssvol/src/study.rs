//! Monte Carlo study: simulate paths, subsample, estimate, and summarize.

use std::path::Path;

use bssvol_core::estimators::{
    abs_moment, fit_acf, fit_cof, realised_power_variation, tau_from_fit, tau_nonparametric, FitMethod, FitResult,
};
use bssvol_core::kernels::{scale_factor, scale_factor_asymptotic, KernelSpec};
use bssvol_core::limit_theory::{
    confidence_interval, lambda_p_default, standardized_error, v_matrix_adaptive, CltTruth, CltVariant, IntervalInputs,
};
use bssvol_core::simulate::{
    derive_seed, integrated_vol_oracle, simulate_bss_with, simulate_volatility, subsample, SimulationOutput,
};
use bssvol_core::{Error, HybridConfig, QuadratureSpec, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::StudyConfig;
use crate::error::{AppError, AppResult};
use crate::fft::FftConvolution;
use crate::io::{fmt_f64, write_rows};

/// Scale-factor estimators compared in the RMSE table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyMethod {
    Exact,
    Asymptotic,
    Acf,
    Cof,
    /// Non-parametric, measured against its own limit E[σ₀²]^{−p/2}∫|σ|^p.
    NonParametric,
    /// Non-parametric, measured against ∫|σ|^p.
    NonParametricRaw,
}

impl StudyMethod {
    pub const ALL: [StudyMethod; 6] = [
        StudyMethod::Exact,
        StudyMethod::Asymptotic,
        StudyMethod::Acf,
        StudyMethod::Cof,
        StudyMethod::NonParametric,
        StudyMethod::NonParametricRaw,
    ];

    pub fn label(self) -> &'static str {
        match self {
            StudyMethod::Exact => "exact",
            StudyMethod::Asymptotic => "asymptotic",
            StudyMethod::Acf => "acf",
            StudyMethod::Cof => "cof",
            StudyMethod::NonParametric => "nonparametric",
            StudyMethod::NonParametricRaw => "nonparametric_raw",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmseRow {
    pub method: StudyMethod,
    pub frequency: String,
    pub factor: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSamples {
    pub variant: CltVariant,
    pub frequency: String,
    pub factor: usize,
    pub values: Vec<f64>,
}

/// Scale-factor samples at sample size `n`. `core` holds
/// √N(τ^N − τ)/(√v/2τ); `feasible` holds the raw τ^{Y,N} − √E[σ₀²]·τ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauSamples {
    pub estimator: &'static str,
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub frequency: String,
    pub factor: usize,
    pub level: f64,
    pub coverage: f64,
}

/// Constants shared by every path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyConstants {
    pub lambda_p: f64,
    pub second_moment: f64,
    /// τ at the finest spacing and the limiting variance v of √N((τ^N)² − τ²).
    pub tau: f64,
    pub v: f64,
    /// Exact and small-Δ scale factors per frequency.
    pub tau_by_frequency: Vec<f64>,
    pub tau_asymptotic_by_frequency: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyReport {
    pub rmse_rows: Vec<RmseRow>,
    pub error_samples: Vec<ErrorSamples>,
    pub tau_samples: Vec<TauSamples>,
    pub coverage_rows: Vec<CoverageRow>,
    /// ACF fits that stopped without converging; their best point was used.
    pub acf_fit_failures: usize,
    pub constants: StudyConstants,
}

/// Seed of path `m`.
pub fn path_seed(master: u64, m: usize) -> u64 {
    derive_seed(master, 0x1000 + m as u64)
}

/// Simulate path `m` of a study on its finest grid.
pub fn simulate_path(
    cfg: &StudyConfig,
    hc: &HybridConfig,
    m: usize,
    conv: &FftConvolution,
) -> Result<SimulationOutput> {
    let seed = path_seed(cfg.seed, m);
    let sigma = simulate_volatility(&cfg.vol, hc, seed)?;
    simulate_bss_with(hc, &cfg.kernel, &sigma, seed, conv)
}

struct Context {
    hc: HybridConfig,
    q: QuadratureSpec,
    m_p: f64,
    m_2p: f64,
    constants: StudyConstants,
}

fn context(cfg: &StudyConfig, with_clt: bool) -> Result<Context> {
    cfg.validate()?;
    let hc = cfg.hybrid()?;
    let q = QuadratureSpec::default();
    let k: KernelSpec = cfg.kernel;
    let delta = hc.delta();
    let tau = scale_factor(&k, delta, &q)?;
    let v = v_matrix_adaptive(&k, delta, &q)?.v;
    let lambda = if with_clt {
        lambda_p_default(cfg.p, k.alpha() + 0.5)?
    } else {
        f64::NAN
    };
    let tau_by_frequency = cfg
        .frequencies
        .iter()
        .map(|&f| scale_factor(&k, f as f64 * delta, &q))
        .collect::<Result<_>>()?;
    let tau_asymptotic_by_frequency = cfg
        .frequencies
        .iter()
        .map(|&f| scale_factor_asymptotic(k.alpha(), f as f64 * delta))
        .collect::<Result<_>>()?;
    Ok(Context {
        hc,
        q,
        m_p: abs_moment(cfg.p)?,
        m_2p: abs_moment(2.0 * cfg.p)?,
        constants: StudyConstants {
            lambda_p: lambda,
            second_moment: cfg.vol.second_moment(),
            tau,
            v,
            tau_by_frequency,
            tau_asymptotic_by_frequency,
        },
    })
}

#[derive(Debug, Default)]
struct PathRecord {
    /// Per frequency, errors in `StudyMethod::ALL` order.
    errors: Vec<[f64; 6]>,
    /// Per frequency, standardized errors in `CltVariant::ALL` order.
    clt: Vec<[f64; 3]>,
    covered: Vec<bool>,
    tau_core: Vec<f64>,
    tau_feasible: Vec<f64>,
    acf_fit_failures: usize,
}

fn tau_part(cfg: &StudyConfig, ctx: &Context, out: &SimulationOutput, rec: &mut PathRecord) {
    let c = &ctx.constants;
    let sd = c.v.sqrt() / (2.0 * c.tau);
    let center = c.second_moment.sqrt() * c.tau;
    let core = out.core.values();
    let bss = out.bss.values();
    let rms = |v: &[f64], n: usize| (v[..=n].windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / n as f64).sqrt();
    for &n in &cfg.tau_n_values {
        rec.tau_core.push((n as f64).sqrt() * (rms(core, n) - c.tau) / sd);
        rec.tau_feasible.push(rms(bss, n) - center);
    }
}

fn acf_fit(
    y: &bssvol_core::SamplePath,
    cfg: &StudyConfig,
    q: &QuadratureSpec,
    failures: &mut usize,
) -> Result<FitResult> {
    match fit_acf(y, cfg.kernel.family(), cfg.num_lags, q) {
        Ok(f) => Ok(f),
        Err(Error::Fit { alpha, decay, mse }) => {
            *failures += 1;
            Ok(FitResult {
                alpha,
                decay: Some(decay),
                mse: Some(mse),
            })
        }
        Err(e) => Err(e),
    }
}

fn estimator_part(cfg: &StudyConfig, ctx: &Context, out: &SimulationOutput, rec: &mut PathRecord) -> Result<()> {
    let c = &ctx.constants;
    let p = cfg.p;
    let family = cfg.kernel.family();
    for (fi, &f) in cfg.frequencies.iter().enumerate() {
        let y = subsample(&out.bss, f)?;
        let t = y.horizon();
        let delta = y.delta();
        let vp = realised_power_variation(&y, p, t)?;
        let estimate = |tau: f64| delta * tau.powf(-p) * vp / ctx.m_p;
        let truth = integrated_vol_oracle(&out.vol, p, t)?;

        let tau_acf = tau_from_fit(
            &acf_fit(&y, cfg, &ctx.q, &mut rec.acf_fit_failures)?,
            FitMethod::Acf,
            family,
            delta,
            &ctx.q,
        )?
        .value;
        let tau_cof = tau_from_fit(&fit_cof(&y, p)?, FitMethod::Cof, family, delta, &ctx.q)?.value;
        let tau_np = tau_nonparametric(&y)?.value;
        let np = estimate(tau_np);
        let errors = [
            estimate(c.tau_by_frequency[fi]) - truth,
            estimate(c.tau_asymptotic_by_frequency[fi]) - truth,
            estimate(tau_acf) - truth,
            estimate(tau_cof) - truth,
            np - c.second_moment.powf(-0.5 * p) * truth,
            np - truth,
        ];
        if errors.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numeric(format!("non-finite estimation error at factor {f}")));
        }
        rec.errors.push(errors);

        let ct = CltTruth {
            sigma: &out.vol,
            tau: c.tau_by_frequency[fi],
            second_moment: c.second_moment,
        };
        let mut clt = [0.0; 3];
        for (slot, variant) in clt.iter_mut().zip(CltVariant::ALL) {
            *slot = standardized_error(variant, &y, &ct, p, t, c.lambda_p)?;
        }
        rec.clt.push(clt);

        let inputs = IntervalInputs {
            delta,
            lambda_hat: c.lambda_p,
            m2p: ctx.m_2p,
            tau: c.tau_by_frequency[fi],
            v2p: realised_power_variation(&y, 2.0 * p, t)?,
            p,
        };
        let point = delta * c.tau_by_frequency[fi].powf(-p) * vp;
        let (lo, hi) = confidence_interval(point, &inputs, cfg.level)?;
        let target = ctx.m_p * truth;
        rec.covered.push(lo <= target && target <= hi);
    }
    Ok(())
}

fn run_paths(cfg: &StudyConfig, ctx: &Context, full: bool) -> AppResult<Vec<PathRecord>> {
    let conv = FftConvolution::new();
    (0..cfg.m_paths)
        .into_par_iter()
        .map(|m| {
            let wrap = |source: Error| AppError::Path {
                path: m,
                seed: path_seed(cfg.seed, m),
                source,
            };
            let out = simulate_path(cfg, &ctx.hc, m, &conv).map_err(wrap)?;
            let mut rec = PathRecord::default();
            tau_part(cfg, ctx, &out, &mut rec);
            if full {
                estimator_part(cfg, ctx, &out, &mut rec).map_err(wrap)?;
            }
            Ok(rec)
        })
        .collect()
}

fn collect_tau(cfg: &StudyConfig, records: &[PathRecord]) -> Vec<TauSamples> {
    let mut out = Vec::new();
    for (ni, &n) in cfg.tau_n_values.iter().enumerate() {
        out.push(TauSamples {
            estimator: "core",
            n,
            values: records.iter().map(|r| r.tau_core[ni]).collect(),
        });
        out.push(TauSamples {
            estimator: "feasible",
            n,
            values: records.iter().map(|r| r.tau_feasible[ni]).collect(),
        });
    }
    out
}

/// Run the whole study. Paths are simulated in parallel on the current
/// rayon pool and reduced in path order, so results do not depend on the
/// number of threads.
pub fn run_study(cfg: &StudyConfig) -> AppResult<StudyReport> {
    let ctx = context(cfg, true)?;
    let records = run_paths(cfg, &ctx, true)?;
    let m = records.len() as f64;
    let mut rmse_rows = Vec::new();
    let mut error_samples = Vec::new();
    let mut coverage_rows = Vec::new();
    for (fi, &f) in cfg.frequencies.iter().enumerate() {
        let label = cfg.label(f);
        for (mi, method) in StudyMethod::ALL.into_iter().enumerate() {
            let mse = records.iter().map(|r| r.errors[fi][mi].powi(2)).sum::<f64>() / m;
            rmse_rows.push(RmseRow {
                method,
                frequency: label.clone(),
                factor: f,
                rmse: mse.sqrt(),
            });
        }
        for (vi, variant) in CltVariant::ALL.into_iter().enumerate() {
            error_samples.push(ErrorSamples {
                variant,
                frequency: label.clone(),
                factor: f,
                values: records.iter().map(|r| r.clt[fi][vi]).collect(),
            });
        }
        coverage_rows.push(CoverageRow {
            frequency: label.clone(),
            factor: f,
            level: cfg.level,
            coverage: records.iter().filter(|r| r.covered[fi]).count() as f64 / m,
        });
    }
    Ok(StudyReport {
        rmse_rows,
        error_samples,
        tau_samples: collect_tau(cfg, &records),
        coverage_rows,
        acf_fit_failures: records.iter().map(|r| r.acf_fit_failures).sum(),
        constants: ctx.constants,
    })
}

/// Only the scale-factor experiment: samples for each N in `n_values`.
pub fn tau_density_experiment(cfg: &StudyConfig, n_values: &[usize]) -> AppResult<Vec<TauSamples>> {
    let cfg = StudyConfig {
        tau_n_values: n_values.to_vec(),
        ..cfg.clone()
    };
    let ctx = context(&cfg, false)?;
    let records = run_paths(&cfg, &ctx, false)?;
    Ok(collect_tau(&cfg, &records))
}

impl StudyReport {
    pub fn rmse(&self, method: StudyMethod, factor: usize) -> Option<f64> {
        self.rmse_rows
            .iter()
            .find(|r| r.method == method && r.factor == factor)
            .map(|r| r.rmse)
    }

    pub fn errors(&self, variant: CltVariant, factor: usize) -> Option<&[f64]> {
        self.error_samples
            .iter()
            .find(|s| s.variant == variant && s.factor == factor)
            .map(|s| s.values.as_slice())
    }

    pub fn tau(&self, estimator: &str, n: usize) -> Option<&[f64]> {
        self.tau_samples
            .iter()
            .find(|s| s.estimator == estimator && s.n == n)
            .map(|s| s.values.as_slice())
    }

    /// rmse.csv, clt_samples.csv, tau_samples.csv and coverage.csv in `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Argument(format!("cannot create {}: {e}", dir.display())))?;
        write_rows(
            &dir.join("rmse.csv"),
            &["method", "frequency", "factor", "rmse"],
            self.rmse_rows.iter().map(|r| {
                [
                    r.method.label().to_string(),
                    r.frequency.clone(),
                    r.factor.to_string(),
                    fmt_f64(r.rmse),
                ]
            }),
        )?;
        write_rows(
            &dir.join("clt_samples.csv"),
            &["variant", "frequency", "path", "value"],
            self.error_samples.iter().flat_map(|s| {
                s.values.iter().enumerate().map(move |(i, v)| {
                    [
                        s.variant.label().to_string(),
                        s.frequency.clone(),
                        i.to_string(),
                        fmt_f64(*v),
                    ]
                })
            }),
        )?;
        write_rows(
            &dir.join("tau_samples.csv"),
            &["estimator", "n", "path", "value"],
            self.tau_samples.iter().flat_map(|s| {
                s.values
                    .iter()
                    .enumerate()
                    .map(move |(i, v)| [s.estimator.to_string(), s.n.to_string(), i.to_string(), fmt_f64(*v)])
            }),
        )?;
        write_rows(
            &dir.join("coverage.csv"),
            &["frequency", "factor", "level", "coverage"],
            self.coverage_rows.iter().map(|r| {
                [
                    r.frequency.clone(),
                    r.factor.to_string(),
                    fmt_f64(r.level),
                    fmt_f64(r.coverage),
                ]
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bssvol_core::VolatilityConfig;

    fn tiny() -> StudyConfig {
        StudyConfig {
            m_paths: 6,
            n: 500,
            big_n: 1500,
            frequencies: vec![1, 5, 20],
            tau_n_values: vec![50, 500],
            seed: 3,
            ..StudyConfig::desk()
        }
    }

    #[test]
    fn report_shapes_and_determinism() {
        let cfg = tiny();
        let a = run_study(&cfg).unwrap();
        assert_eq!(a.rmse_rows.len(), 3 * StudyMethod::ALL.len());
        assert!(a.rmse_rows.iter().all(|r| r.rmse >= 0.0 && r.rmse.is_finite()));
        assert!(a.error_samples.iter().all(|s| s.values.len() == cfg.m_paths));
        assert!(a.tau_samples.iter().all(|s| s.values.len() == cfg.m_paths));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| run_study(&cfg)).unwrap();
        assert_eq!(a, b);
        let t = tau_density_experiment(&cfg, &cfg.tau_n_values).unwrap();
        assert_eq!(t, a.tau_samples);
    }

    #[test]
    fn flat_volatility_makes_feasible_match_core() {
        // β = 0 gives σ ≡ 1, so Y is the core path.
        let cfg = StudyConfig {
            vol: VolatilityConfig { theta: 2.0, beta: 0.0 },
            ..tiny()
        };
        let ctx = context(&cfg, false).unwrap();
        let conv = FftConvolution::new();
        let out = simulate_path(&cfg, &ctx.hc, 0, &conv).unwrap();
        assert_eq!(out.core, out.bss);
        let truth = integrated_vol_oracle(&out.vol, 2.0, 1.0).unwrap();
        assert!((truth - 1.0 - cfg.hybrid().unwrap().delta()).abs() < 1e-12);
    }

    #[test]
    fn path_failure_reports_index_and_seed() {
        let cfg = StudyConfig {
            vol: VolatilityConfig { theta: 1e6, beta: 0.1 },
            ..tiny()
        };
        match run_study(&cfg) {
            Err(AppError::Path { path, seed, .. }) => assert_eq!(seed, path_seed(cfg.seed, path)),
            other => panic!("expected a path error, got {other:?}"),
        }
    }
}
