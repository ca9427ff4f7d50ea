//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use bssvol_core::estimators::{
    accumulated_volatility_with_tau, estimate_accumulated_volatility, fit_acf, fit_cof, full_grid, tau_from_fit,
    tau_nonparametric, EstimationMethod, FitMethod,
};
use bssvol_core::simulate::{simulate_bss_with, simulate_volatility, subsample};
use bssvol_core::{Error, KernelFamily, QuadratureSpec, SamplePath};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::config::{read_json, SimulationConfig, StudyConfig};
use crate::error::{exit, AppError, AppResult};
use crate::fft::FftConvolution;
use crate::io::{fmt_f64, read_path, write_estimates, write_json, write_path, write_rows};
use crate::manifest::{file_sha256, ManifestClock, RunManifest};
use crate::study::run_study;

/// Smoothness of the reference line in `analyze` output.
pub const ALPHA_REFERENCE: f64 = -1.0 / 6.0;

#[derive(Debug, Parser)]
#[command(
    name = "bssvol",
    version,
    about = "Simulate Brownian semistationary processes and estimate their integrated volatility"
)]
pub struct Cli {
    /// Worker threads for the study; defaults to all cores.
    #[arg(long, global = true, env = "BSSVOL_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the Gaussian core, the BSS path and the volatility.
    Simulate(SimulateArgs),
    /// Fit the kernel smoothness (and decay) to an observed series.
    Fit(FitArgs),
    /// Accumulated power volatility along an observed series.
    Estimate(EstimateArgs),
    /// Monte Carlo study over simulated paths and a frequency sweep.
    Study(StudyArgs),
    /// Frequency sweep of smoothness and scale-factor estimates on a series.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Gamma,
    Power,
}

impl From<FamilyArg> for KernelFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gamma => KernelFamily::Gamma,
            FamilyArg::Power => KernelFamily::Power,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMethodArg {
    Acf,
    Cof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMethodArg {
    Acf,
    Cof,
    Nonparametric,
}

impl From<EstimateMethodArg> for EstimationMethod {
    fn from(m: EstimateMethodArg) -> Self {
        match m {
            EstimateMethodArg::Acf => EstimationMethod::Acf,
            EstimateMethodArg::Cof => EstimationMethod::Cof,
            EstimateMethodArg::Nonparametric => EstimationMethod::NonParametric,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON file with `kernel`, `hybrid` and optional `vol`.
    #[arg(long)]
    pub config: PathBuf,
    /// Output prefix; writes `<out>_core.csv`, `<out>_bss.csv`, `<out>_vol.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Use σ ≡ 1 regardless of the configured volatility.
    #[arg(long)]
    pub flat_vol: bool,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// CSV with a `value` column or a single column.
    #[arg(long)]
    pub data: PathBuf,
    /// Observations per unit time.
    #[arg(long)]
    pub n: f64,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gamma)]
    pub family: FamilyArg,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, value_enum, default_value_t = FitMethodArg::Acf)]
    pub method: FitMethodArg,
    #[arg(long, default_value_t = 10)]
    pub num_lags: usize,
    /// JSON output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    #[arg(long, value_enum, default_value_t = EstimateMethodArg::Nonparametric)]
    pub method: EstimateMethodArg,
    /// CSV output with columns `t,estimate`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// JSON study configuration; the desk preset if absent.
    #[arg(long, conflicts_with = "smoke")]
    pub config: Option<PathBuf>,
    /// Small preset: 50 paths of 5000 steps.
    #[arg(long)]
    pub smoke: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the configured number of paths.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with a `value` column or a single column.
    #[arg(long)]
    pub data: PathBuf,
    /// Samples per second of the input series.
    #[arg(long)]
    pub sample_rate: f64,
    /// Analysis frequencies in Hz; each must divide the sample rate.
    #[arg(long, value_delimiter = ',', required = true)]
    pub freqs: Vec<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Horizons in seconds for the accumulated-volatility columns; the end
    /// of the series if absent.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<f64>,
    /// CSV output file; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_manifest(path: Option<&Path>, m: &RunManifest) -> AppResult<()> {
    match path {
        Some(p) => Ok(write_json(p, m)?),
        None => {
            let text = serde_json::to_string(m).map_err(|e| Error::Numeric(e.to_string()))?;
            eprintln!("{text}");
            Ok(())
        }
    }
}

fn print_json(v: &Value, out: Option<&Path>) -> AppResult<()> {
    match out {
        Some(p) => Ok(write_json(p, v)?),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(v).map_err(|e| Error::Numeric(e.to_string()))?
            );
            Ok(())
        }
    }
}

fn series_inputs(a: &SeriesArgs) -> AppResult<Value> {
    Ok(json!({
        "data_sha256": file_sha256(&a.data)?,
        "n": a.n,
        "family": format!("{:?}", a.family).to_lowercase(),
        "p": a.p,
    }))
}

fn cmd_simulate(a: &SimulateArgs) -> AppResult<()> {
    let clock = ManifestClock::start("simulate");
    let cfg: SimulationConfig = read_json(&a.config)?;
    cfg.validate()?;
    let hc = cfg.hybrid;
    let sigma = match (&cfg.vol, a.flat_vol) {
        (Some(v), false) => simulate_volatility(v, &hc, a.seed)?,
        _ => vec![1.0; hc.sigma_len()?],
    };
    let out = simulate_bss_with(&hc, &cfg.kernel, &sigma, a.seed, &FftConvolution::new())?;
    write_path(&sidecar(&a.out, "_core.csv"), &out.core)?;
    write_path(&sidecar(&a.out, "_bss.csv"), &out.bss)?;
    write_path(&sidecar(&a.out, "_vol.csv"), &out.vol)?;
    let inputs = json!({ "config": cfg, "seed": a.seed, "flat_vol": a.flat_vol });
    write_manifest(
        Some(&sidecar(&a.out, "_manifest.json")),
        &clock.finish(inputs, Some(a.seed)),
    )
}

fn cmd_fit(a: &FitArgs) -> AppResult<()> {
    let clock = ManifestClock::start("fit");
    let s = &a.series;
    let y = read_path(&s.data, s.n)?;
    let q = QuadratureSpec::default();
    let (fit, label) = match a.method {
        FitMethodArg::Acf => (fit_acf(&y, s.family.into(), a.num_lags, &q)?, "acf"),
        FitMethodArg::Cof => (fit_cof(&y, s.p)?, "cof"),
    };
    let mut v = json!({ "alpha": fit.alpha, "method": label });
    if let Some(d) = fit.decay {
        v["decay"] = json!(d);
    }
    if let Some(m) = fit.mse {
        v["mse"] = json!(m);
    }
    print_json(&v, a.out.as_deref())?;
    let mut inputs = series_inputs(s)?;
    inputs["method"] = json!(label);
    inputs["num_lags"] = json!(a.num_lags);
    let path = a.out.as_deref().map(|p| sidecar(p, ".manifest.json"));
    write_manifest(path.as_deref(), &clock.finish(inputs, None))
}

fn cmd_estimate(a: &EstimateArgs) -> AppResult<()> {
    let clock = ManifestClock::start("estimate");
    let s = &a.series;
    let y = read_path(&s.data, s.n)?;
    let grid = full_grid(&y);
    let est = estimate_accumulated_volatility(
        &y,
        s.p,
        a.method.into(),
        s.family.into(),
        &grid,
        &QuadratureSpec::default(),
    )?;
    write_estimates(&a.out, &grid, &est)?;
    let mut inputs = series_inputs(s)?;
    inputs["method"] = json!(format!("{:?}", a.method).to_lowercase());
    write_manifest(Some(&sidecar(&a.out, ".manifest.json")), &clock.finish(inputs, None))
}

fn cmd_study(a: &StudyArgs) -> AppResult<()> {
    let clock = ManifestClock::start("study");
    let mut cfg = match (&a.config, a.smoke) {
        (Some(p), _) => read_json::<StudyConfig>(p)?,
        (None, true) => StudyConfig::smoke(),
        (None, false) => StudyConfig::desk(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(m) = a.paths {
        cfg.m_paths = m;
    }
    let report = run_study(&cfg)?;
    report.write(&a.out)?;
    let summary = json!({ "acf_fit_failures": report.acf_fit_failures, "constants": report.constants });
    write_json(&a.out.join("summary.json"), &summary)?;
    let inputs = json!({ "config": cfg });
    write_manifest(
        Some(&a.out.join("manifest.json")),
        &clock.finish(inputs, Some(cfg.seed)),
    )
}

/// One row of `analyze` output.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeRow {
    pub frequency_hz: f64,
    pub factor: usize,
    pub alpha_cof: f64,
    pub tau_cof: f64,
    pub tau_nonparametric: f64,
    /// Accumulated volatility at each horizon with the COF scale factor.
    pub estimates: Vec<f64>,
}

/// Subsample a series observed at `sample_rate` Hz to each frequency and
/// estimate α, τ and the accumulated volatility there.
pub fn analyze(
    y: &SamplePath,
    sample_rate: f64,
    freqs: &[f64],
    p: f64,
    horizons: &[f64],
) -> AppResult<Vec<AnalyzeRow>> {
    let q = QuadratureSpec::default();
    freqs
        .iter()
        .map(|&f| {
            let ratio = sample_rate / f;
            let factor = ratio.round();
            if !(f > 0.0) || factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio {
                return Err(Error::Argument(format!(
                    "frequency {f} Hz does not divide the sample rate {sample_rate} Hz"
                ))
                .into());
            }
            let ys = subsample(y, factor as usize)?;
            let fit = fit_cof(&ys, p)?;
            let tau_cof = tau_from_fit(&fit, FitMethod::Cof, KernelFamily::Gamma, ys.delta(), &q)?.value;
            let tau_np = tau_nonparametric(&ys)?.value;
            let estimates = accumulated_volatility_with_tau(&ys, p, tau_cof, horizons)?;
            Ok(AnalyzeRow {
                frequency_hz: f,
                factor: factor as usize,
                alpha_cof: fit.alpha,
                tau_cof,
                tau_nonparametric: tau_np,
                estimates,
            })
        })
        .collect()
}

fn cmd_analyze(a: &AnalyzeArgs) -> AppResult<()> {
    let clock = ManifestClock::start("analyze");
    let y = read_path(&a.data, a.sample_rate)?;
    let horizons = if a.horizons.is_empty() {
        vec![y.horizon()]
    } else {
        a.horizons.clone()
    };
    let rows = analyze(&y, a.sample_rate, &a.freqs, a.p, &horizons)?;
    let mut header: Vec<String> = [
        "frequency_hz",
        "factor",
        "alpha_cof",
        "tau_cof",
        "tau_nonparametric",
        "alpha_reference",
    ]
    .map(String::from)
    .to_vec();
    header.extend(horizons.iter().map(|h| format!("estimate_{h}s")));
    let fields: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![
                fmt_f64(r.frequency_hz),
                r.factor.to_string(),
                fmt_f64(r.alpha_cof),
                fmt_f64(r.tau_cof),
                fmt_f64(r.tau_nonparametric),
                fmt_f64(ALPHA_REFERENCE),
            ];
            v.extend(r.estimates.iter().map(|e| fmt_f64(*e)));
            v
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let inputs = json!({
        "data_sha256": file_sha256(&a.data)?,
        "sample_rate": a.sample_rate,
        "freqs": a.freqs,
        "p": a.p,
        "horizons": horizons,
    });
    match &a.out {
        Some(out) => {
            write_rows(out, &header_refs, &fields)?;
            write_manifest(Some(&sidecar(out, ".manifest.json")), &clock.finish(inputs, None))
        }
        None => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(std::io::stdout().lock());
            let io = |e: csv::Error| AppError::from(Error::Argument(e.to_string()));
            w.write_record(&header_refs).map_err(io)?;
            for r in &fields {
                w.write_record(r).map_err(io)?;
            }
            w.flush().map_err(|e| Error::Argument(e.to_string()))?;
            write_manifest(None, &clock.finish(inputs, None))
        }
    }
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> AppResult<()> {
    let exec = || match &cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Study(a) => cmd_study(a),
        Command::Analyze(a) => cmd_analyze(a),
    };
    match cli.threads {
        Some(0) => Err(AppError::Usage("--threads must be at least 1".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| AppError::Usage(e.to_string()))?
            .install(exec),
        None => exec(),
    }
}

/// Parse `args`, run, report errors on stderr and return the exit code.
pub fn main_with<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bssvol_core::simulate::simulate_bss;
    use bssvol_core::{HybridConfig, KernelSpec};

    #[test]
    fn parses_every_subcommand() {
        for args in [
            vec![
                "bssvol",
                "simulate",
                "--config",
                "c.json",
                "--out",
                "x",
                "--seed",
                "3",
                "--flat-vol",
            ],
            vec!["bssvol", "fit", "--data", "d.csv", "--n", "1000", "--method", "cof"],
            vec![
                "bssvol", "estimate", "--data", "d.csv", "--n", "1000", "--out", "e.csv", "--method", "acf",
            ],
            vec!["bssvol", "--threads", "2", "study", "--smoke", "--out", "dir"],
            vec![
                "bssvol",
                "analyze",
                "--data",
                "d.csv",
                "--sample-rate",
                "5000",
                "--freqs",
                "10,100",
                "--horizons",
                "1,2",
            ],
        ] {
            Cli::try_parse_from(args).unwrap();
        }
        assert!(Cli::try_parse_from(["bssvol", "study", "--smoke", "--config", "c", "--out", "d"]).is_err());
    }

    #[test]
    fn analyze_rejects_non_dividing_frequency_and_recovers_alpha() {
        let hc = HybridConfig::new(20_000, 4000, 5.0, 3).unwrap();
        let k = KernelSpec::gamma(-1.0 / 6.0, 1.0).unwrap();
        let y = simulate_bss(&hc, &k, &vec![1.0; hc.sigma_len().unwrap()], 5)
            .unwrap()
            .bss;
        assert!(analyze(&y, 4000.0, &[3000.0], 2.0, &[1.0]).is_err());
        let rows = analyze(&y, 4000.0, &[1000.0, 400.0], 2.0, &[2.5, 5.0]).unwrap();
        assert_eq!(rows[1].factor, 10);
        for r in &rows {
            assert!((r.alpha_cof - ALPHA_REFERENCE).abs() < 0.1, "alpha {}", r.alpha_cof);
            assert!(r.estimates[0] < r.estimates[1]);
            // An error δ in α̂ scales τ̂_COF by Δ^δ, so only broad agreement is expected.
            let ratio = r.tau_cof / r.tau_nonparametric;
            assert!((0.5..2.0).contains(&ratio), "{r:?}");
        }
    }
}
